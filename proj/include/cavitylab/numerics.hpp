#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace cavitylab {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// log(e^a + e^b); tolerates -inf on either side.
inline double log_add(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    double m = a > b ? a : b;
    return m + std::log1p(std::exp(-std::fabs(a - b)));
}

inline double log_sum_exp(std::span<const double> xs) {
    double m = neg_inf;
    for (double x : xs)
        if (x > m) m = x;
    if (m == neg_inf) return neg_inf;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

// log(e^a + c) for c > 0, without forming e^a.
inline double log_exp_plus(double a, double c) {
    double lc = std::log(c);
    if (a > lc) return a + std::log1p(c * std::exp(-a));
    return lc + std::log1p(std::exp(a - lc));
}

// Streaming log-sum-exp accumulator with a fixed left-to-right order.
class LogSumAcc {
public:
    void add(double x) {
        if (x == neg_inf) return;
        if (max_ == neg_inf) {
            max_ = x;
            sum_ = 1.0;
        } else if (x <= max_) {
            sum_ += std::exp(x - max_);
        } else {
            sum_ = sum_ * std::exp(max_ - x) + 1.0;
            max_ = x;
        }
    }
    double value() const {
        if (max_ == neg_inf) return neg_inf;
        return max_ + std::log(sum_);
    }

private:
    double max_ = neg_inf;
    double sum_ = 0.0;
};

// Normalize exp(log-weights) into a probability vector in place.
// Returns false if every weight is -inf (zero normalizer).
inline bool softmax_inplace(std::vector<double>& lw) {
    double lz = log_sum_exp(lw);
    if (lz == neg_inf) return false;
    for (double& x : lw) x = std::exp(x - lz);
    return true;
}

// SplitMix64: tiny, seedable, platform-independent. Used everywhere randomness
// is needed so that seeded results are byte-identical across platforms.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double next_double() { return (next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound); bound > 0. Rejection-free enough for our
    // scales (bias < 2^-53 via double path would be unacceptable; use modulo
    // with rejection to stay exactly uniform and deterministic).
    std::uint64_t next_below(std::uint64_t bound) {
        std::uint64_t threshold = (0ULL - bound) % bound;
        for (;;) {
            std::uint64_t r = next_u64();
            if (r >= threshold) return r % bound;
        }
    }

private:
    std::uint64_t state_;
};

// Derive an independent stream from (seed, stream, counter); counter-based so
// that parallel schedules cannot change sampled values.
inline std::uint64_t mix_stream(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
    SplitMix64 a(seed ^ (0x632be59bd9b4e019ULL * (stream + 1)));
    std::uint64_t x = a.next_u64();
    SplitMix64 b(x ^ (0x9e3779b97f4a7c15ULL * (counter + 1)));
    return b.next_u64();
}

// Composite Simpson rule with nseg (even) segments.
template <class F>
double simpson(F&& f, double a, double b, int nseg) {
    double h = (b - a) / nseg;
    double s = f(a) + f(b);
    for (int i = 1; i < nseg; ++i) s += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// Euclidean projection of x onto the probability simplex restricted to the
// index set where mask is true; masked-out entries are set to zero.
void project_simplex_masked(std::vector<double>& x, const std::vector<char>& mask);

}  // namespace cavitylab
