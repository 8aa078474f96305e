#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cavitylab/errors.hpp"
#include "cavitylab/numerics.hpp"

namespace cavitylab {

enum class ModelFamily { Potts, Ising, HardCore, Raw };

// A factor-model specification: symmetric edge weights psi on a finite
// alphabet plus positive vertex weights psibar, stored in log domain.
// xi = log psi may be -inf (exact zero support); xibar = log psibar is finite.
// Immutable after construction; safe to share across threads.
class FactorSpec {
public:
    static FactorSpec make_potts(int q, double beta, double B);
    static FactorSpec make_ising(double beta, double B);
    static FactorSpec make_hardcore(double lambda);
    // Plain (non-log) weights; zeros allowed in psi. q >= 1.
    static FactorSpec make_raw(const std::vector<std::vector<double>>& psi,
                               const std::vector<double>& psibar);

    int q() const { return q_; }
    ModelFamily family() const { return family_; }

    double xi(int a, int b) const { return xi_[a * q_ + b]; }
    double xibar(int a) const { return xibar_[a]; }
    double psi(int a, int b) const { return std::exp(xi(a, b)); }
    double psibar(int a) const { return std::exp(xibar_[a]); }
    bool supported(int a, int b) const { return xi(a, b) != neg_inf; }

    // d/dbeta of xi and d/dB of xibar under the family's parametrization,
    // with the convention that entries identically -inf differentiate to 0.
    // Raw specs carry no parameters and differentiate to 0.
    double dxi_dbeta(int a, int b) const;
    double dxibar_dB(int a) const;

    double beta() const { return beta_; }
    double B() const { return B_; }
    double lambda() const { return lambda_; }

    // Rebuild from the stored family parameters; bit-exact for built-ins.
    FactorSpec regenerate() const;
    FactorSpec with_beta(double beta) const;
    FactorSpec with_B(double B) const;

    std::string describe() const;

private:
    FactorSpec() = default;
    ModelFamily family_ = ModelFamily::Raw;
    int q_ = 0;
    double beta_ = 0.0, B_ = 0.0, lambda_ = 0.0;
    std::vector<double> xi_;     // q*q, row-major, symmetric
    std::vector<double> xibar_;  // q
};

struct PermitReport {
    bool permissive = false;
    std::optional<int> permitted_state;  // smallest qualifying column index
    std::vector<int> failing_rows;       // rows with no fully-positive column partner
};

// (H1): psibar > 0 everywhere and some column of psi is entirely positive.
// Reports, never throws.
PermitReport validate_permissive(const FactorSpec& spec);

// Parse the JSON spec config format:
//   {"model": "potts"|"ising"|"hardcore"|"raw", "q":, "beta":, "B":, "lambda":,
//    "psi": [[...]], "psibar": [...]}
FactorSpec spec_from_json(const std::string& json_text);

}  // namespace cavitylab
