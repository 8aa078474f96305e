#pragma once

#include <optional>
#include <vector>

#include "cavitylab/factor_spec.hpp"
#include "cavitylab/graph_store.hpp"

namespace cavitylab {

struct ExactResult {
    double log_z = 0.0;                               // -inf if Z = 0
    double free_energy_density = 0.0;                 // log_z / n
    std::vector<std::vector<double>> vertex_marginals;  // per vertex, length q
    std::vector<std::vector<double>> edge_marginals;    // per edge, q*q row-major
};

// Boundary conditions in the sense of truncated-tree measures: phantom
// children are attached to every depth-t vertex of a depth-t tree.
//   Free     — no phantom factor at all (bare tree).
//   Fixed    — phantom children carry the fixed spin sigma0.
//   Message  — phantom children send the given message vector.
// The phantom count per boundary vertex is full_degree - deg(v) for trees
// embedded in a full_degree-regular tree, or per-vertex counts if supplied.
struct BoundaryCondition {
    enum class Kind { Free, Fixed, Message };
    Kind kind = Kind::Free;
    int sigma0 = 0;
    std::vector<double> message;            // simplex vector, length q
    int full_degree = -1;                   // ambient regular-tree degree
    std::vector<int> phantom_counts;        // optional per-vertex override

    static BoundaryCondition free() { return {}; }
    static BoundaryCondition fixed(int sigma0, int full_degree) {
        BoundaryCondition b;
        b.kind = Kind::Fixed;
        b.sigma0 = sigma0;
        b.full_degree = full_degree;
        return b;
    }
    static BoundaryCondition with_message(std::vector<double> msg, int full_degree) {
        BoundaryCondition b;
        b.kind = Kind::Message;
        b.message = std::move(msg);
        b.full_degree = full_degree;
        return b;
    }
};

// Brute-force partition function by enumeration over q^n configurations
// (guarded at q^n <= 1e8), accumulated in log-sum-exp form.
ExactResult exact_log_z(const FiniteGraph& g, const FactorSpec& spec,
                        bool want_marginals = true);

// Exact log Z and marginals on a tree by leaf-to-root/root-to-leaf dynamic
// programming in log domain, with boundary conditions at the deepest level.
ExactResult tree_log_z(const RootedTree& tree, const FactorSpec& spec,
                       const BoundaryCondition& boundary);

// Random-cluster subset sum  Z = sum_{F subset E} (e^beta - 1)^|F| q^k(F),
// with k(F) the number of connected components including isolated vertices.
// Guarded at |E| <= 30; requires beta >= 0.
double rc_log_z(const FiniteGraph& g, int q, double beta);

struct TransferRate {
    double log_rho = 0.0;                // log of the Perron eigenvalue of psi~
    std::vector<double> pair_belief;     // q*q: psi~(a,b) m(a) m(b) / rho
    std::vector<double> marginal;        // common row/column marginal
};

// Perron-Frobenius rate of the line: psi~(a,b) = psi(a,b) sqrt(psibar(a) psibar(b)),
// top eigenvalue by power iteration to 1e-13 relative change.
TransferRate transfer_matrix_rate(const FactorSpec& spec);

}  // namespace cavitylab
