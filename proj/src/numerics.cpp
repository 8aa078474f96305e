#include "cavitylab/numerics.hpp"

#include <algorithm>

namespace cavitylab {

void project_simplex_masked(std::vector<double>& x, const std::vector<char>& mask) {
    // Standard sort-based water filling on the unmasked coordinates.
    std::vector<double> vals;
    vals.reserve(x.size());
    for (size_t i = 0; i < x.size(); ++i)
        if (mask[i]) vals.push_back(x[i]);
    std::sort(vals.begin(), vals.end(), std::greater<double>());
    double acc = 0.0, tau = 0.0;
    int k = 0;
    for (size_t i = 0; i < vals.size(); ++i) {
        acc += vals[i];
        double t = (acc - 1.0) / static_cast<double>(i + 1);
        if (vals[i] - t > 0.0) {
            tau = t;
            k = static_cast<int>(i + 1);
        }
    }
    (void)k;
    for (size_t i = 0; i < x.size(); ++i)
        x[i] = mask[i] ? std::max(0.0, x[i] - tau) : 0.0;
}

}  // namespace cavitylab
