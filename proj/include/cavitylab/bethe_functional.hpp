#pragma once

#include <cstdint>
#include <vector>

#include "cavitylab/bp_engine.hpp"
#include "cavitylab/factor_spec.hpp"
#include "cavitylab/graph_store.hpp"

namespace cavitylab {

struct BetheBreakdown {
    double phi_vx = 0.0;
    double phi_edge = 0.0;
    double phi_total = 0.0;  // phi_vx - phi_edge, single subtraction
    bool degenerate = false; // some term was -inf (message off the support)
};

// Message-form Bethe free energy on the d-regular tree with all incoming
// messages equal to h:
//   phi_vx   = log sum_s psibar(s) (sum_t psi(s,t) h(t))^d
//   phi_edge = (d/2) log sum_{s,t} psi(s,t) h(s) h(t)
BetheBreakdown phi_regular(int d, const FactorSpec& spec, const std::vector<double>& h);

// Symmetric pair distribution on the alphabet square with a common marginal.
struct PairBelief {
    int q = 0;
    std::vector<double> joint;  // q*q row-major, symmetric

    std::vector<double> marginal() const;
    double row_col_mismatch() const;  // max |row sum - col sum|
};

// Pair belief induced by a message: b(s,t) ∝ psi(s,t) h(s) h(t).
PairBelief embed_message(const FactorSpec& spec, const std::vector<double>& h);

// Local-polytope form on the d-regular slice:
//   Phi(b) = -D(hbar || psibar) - (d/2) D(b || hbar x_psi hbar)
// with unnormalized reference measures and the 0 log 0 conventions realized
// by support masks. Returns -inf iff supp(b) is not within supp(psi).
double phi_local_polytope(int d, const FactorSpec& spec, const PairBelief& b);

struct PolytopeOptimum {
    PairBelief best;
    double value = neg_inf;
};

// Multi-start projected-gradient ascent over the feasible set
// {symmetric, simplex, supp within supp(psi)}. Deterministic given seed.
PolytopeOptimum optimize_local_polytope(int d, const FactorSpec& spec, int n_starts,
                                        std::uint64_t seed, double tol = 1e-10);

// Max |directional derivative| of phi_local_polytope at embed(h) over random
// feasible tangent directions (central differences, step 1e-5).
double stationarity_check(int d, const FactorSpec& spec, const std::vector<double>& h,
                          int directions, std::uint64_t seed);

struct SecondOrderCheck {
    double analytic = 0.0;  // (d-1) <(dbar/hbar)^2>_hbar - (d/2) <(delta/b)^2>_b
    double numeric = 0.0;   // central second difference, step 1e-4
};

// delta is a q*q symmetric tangent direction with |delta| <= b entrywise.
SecondOrderCheck second_order_check(int d, const FactorSpec& spec,
                                    const std::vector<double>& h,
                                    const std::vector<double>& delta);

struct InterpolationFunctionals {
    double a_edge = 0.0;    // (d/2) <d_beta xi> under the embedded pair belief
    double a_vertex = 0.0;  // <d_B xibar> under the root belief
};

InterpolationFunctionals interpolation_functionals(int d, const FactorSpec& spec,
                                                   const std::vector<double>& h);

struct PopDynEstimate {
    double mean = 0.0;
    double stderr_ = 0.0;
    long pool = 0;
    int sweeps = 0;
    std::uint64_t seed = 0;
    long rejected = 0;
    bool unreliable = false;  // > 1% of evaluation samples rejected
};

// Population-dynamics estimate of the ensemble-averaged Bethe free energy for
// a Galton-Watson limit: the pool evolves under the offspring law, the
// evaluation samples root degrees from the root law. Counter-based RNG makes
// the result independent of the execution schedule.
PopDynEstimate phi_popdyn(const OffspringLaw& root_law, const OffspringLaw& offspring_law,
                          const FactorSpec& spec, long pool, int sweeps, std::uint64_t seed,
                          int threads = 1);

}  // namespace cavitylab
