#pragma once

#include <string>
#include <vector>

namespace cavitylab::verify {

struct CriterionResult {
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

// Runs the full acceptance suite: oracle equivalences, closed-form
// thresholds, stationarity/second-order checks, region and bounds grids,
// monotonicity, finite-n trend, and population-dynamics degeneracy.
std::vector<CriterionResult> run_all(int threads = 1);

}  // namespace cavitylab::verify
