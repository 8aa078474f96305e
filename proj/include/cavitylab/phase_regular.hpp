#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cavitylab/bp_engine.hpp"
#include "cavitylab/factor_spec.hpp"

namespace cavitylab {

// The Potts log-likelihood-ratio recursion on the d-regular tree,
//   f(r) = B + (d-1) log( (e^{beta+r}+q-1) / (e^r+e^beta+q-2) ),
// computed as B + (d-1) log1p( expm1(r) expm1(beta) / (e^r+e^beta+q-2) )
// so that f(0) = B holds exactly. Stable for |r| up to ~700.
struct PottsRecursion {
    int q = 3;
    int d = 3;
    double beta = 0.0;
    double B = 0.0;

    double f(double r) const;
    double fprime(double r) const;
    // alpha = (q-1)(1+(q-2)e^{-beta}); f'' changes sign at (log alpha)/2
    double alpha() const;
    // gamma = e^beta + q - 2 - (d/2)(1-e^{-beta})(e^beta+q-1)
    double gamma() const;
    // Solutions of f'(r)=1 in t=e^r: t_pm = -gamma -+/+ sqrt(gamma^2-alpha);
    // empty when no solutions (f' < 1 everywhere).
    std::optional<std::pair<double, double>> rho_pm() const;  // (rho-, rho+)
};

struct PottsFixedPoints {
    double r_free = 0.0;
    double r_ordered = 0.0;
    std::optional<double> r_middle;
};

// Monotone iteration from r=0 (free) and from above (ordered), then Newton
// polish; the middle fixed point by bisection on the sign change between them.
PottsFixedPoints potts_fixed_points(const PottsRecursion& rec);

struct PottsThresholds {
    double beta_minus = 0.0;  // +inf when d = 2
    double beta_f = 0.0;
    double beta_plus = 0.0;
    std::string beta_minus_form;  // exact-form descriptors
    std::string beta_plus_form;
};

PottsThresholds potts_thresholds(int q, int d);

enum class PhaseRegion { Unique, BoundaryF, BoundaryPlus, Nonunique };

struct PottsRegionCurves {
    double beta_minus = 0.0;
    double beta_f0 = 0.0;     // beta_f at B = 0
    double beta_plus0 = 0.0;  // beta_plus at B = 0
    double B_cap = 0.0;       // field where the two curves meet
    bool unique_for_all_beta = false;  // B > B_cap
    // curves evaluated at the query field (meaningful when !unique_for_all_beta)
    double beta_f_of_B = 0.0;
    double beta_plus_of_B = 0.0;
};

// The tangency fields B_pm(beta) = rho_mp - f(rho_mp; beta, 0); the region
// curves beta_f(B), beta_plus(B) are their inverses by bisection.
std::optional<std::pair<double, double>> potts_tangency_fields(int q, int d, double beta);
PottsRegionCurves potts_region(int q, int d, double B);

// Membership of (beta, B) in the disagreement region R_ne.
bool potts_in_R_ne(int q, int d, double beta, double B);

struct PhaseReport {
    int q = 0, d = 0;
    double beta = 0.0, B = 0.0;
    double beta_minus = 0.0, beta_f = 0.0, beta_plus = 0.0;  // at B = 0
    double B_cap = 0.0;
    PhaseRegion region = PhaseRegion::Unique;
    double r_free = 0.0, r_ordered = 0.0;
    std::optional<double> r_middle;
    double phi_free = 0.0, phi_ordered = 0.0;
    double lower = 0.0, upper = 0.0;
};

// Interpolation bounds: lower = max(Phi_f, Phi_1); upper = min over the valid
// one-sided interpolation bounds Phi~1 (valid for beta >= beta_f(B)) and
// Phi~f (valid for beta <= beta_plus(B)). Outside R_ne both collapse to the
// common branch value.
PhaseReport potts_free_energy_bounds(int q, int d, double beta, double B);

// Message vector on the d-regular Potts tree from a log-likelihood ratio.
std::vector<double> potts_message_from_r(int q, double r);

// Closed form (d-1)^{d-1} / (d-2)^d, d >= 3.
double hardcore_lambda_c(int d);

struct HardcorePhi {
    double phi = 0.0;
    double u = 0.0;  // unoccupied mass of the fixed point used
    bool outside_uniqueness = false;
};

// Bethe free energy of the hard-core model on the d-regular tree at the
// single-map fixed point u = 1/(1+lambda u^{d-1}) (bisection; g is monotone).
// For lambda > lambda_c the value is computed at that fixed point and flagged.
HardcorePhi hardcore_phi(int d, double lambda);

struct IsingPhaseResult {
    double beta_minus = 0.0;  // atanh(1/(d-1)) in the +/-1 spin convention
    double r_free = 0.0;
    double r_plus = 0.0;
    bool unique = false;
    double phi_free = 0.0;
    double phi_plus = 0.0;
};

IsingPhaseResult ising_phase(int d, double beta, double B);

struct TvDiagnostic {
    double total_variation = 0.0;
    bool jump = false;
    size_t jump_index = 0;  // first grid step whose L1 change exceeds 0.1
};

// Total variation of a branch fixed point along a monotone parameter grid.
struct FamilySweep {
    ModelFamily family = ModelFamily::Potts;
    int q = 3, d = 3;
    Branch branch = Branch::Free;
    // parameter swept: "beta" or "B" (Potts/Ising), "lambda" (hard-core)
    std::string param = "beta";
    std::vector<double> grid;
    double fixed_beta = 0.0;  // the non-swept parameter
    double fixed_B = 0.0;
};

TvDiagnostic tv_diagnostic(const FamilySweep& sweep);

}  // namespace cavitylab
