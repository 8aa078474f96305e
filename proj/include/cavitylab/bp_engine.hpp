#pragma once

#include <cstdint>
#include <vector>

#include "cavitylab/exact_oracle.hpp"
#include "cavitylab/factor_spec.hpp"
#include "cavitylab/graph_store.hpp"

namespace cavitylab {

// One probability vector per directed edge, indexed by directed_edge_index.
struct MessageSet {
    int q = 0;
    std::vector<double> h;  // 2m * q, contiguous per directed edge
    int iterations = 0;
    double last_linf = 0.0;

    double* at(int de) { return h.data() + static_cast<size_t>(de) * q; }
    const double* at(int de) const { return h.data() + static_cast<size_t>(de) * q; }
};

struct BPInit {
    enum class Kind { Uniform, FixedSpin, Random };
    Kind kind = Kind::Uniform;
    int sigma0 = 0;
    std::uint64_t seed = 0;

    static BPInit uniform() { return {}; }
    static BPInit fixed(int s) { return {Kind::FixedSpin, s, 0}; }
    static BPInit random(std::uint64_t seed) { return {Kind::Random, 0, seed}; }
};

enum class Schedule { Synchronous, Sequential };

struct BPOptions {
    BPInit init;
    Schedule schedule = Schedule::Synchronous;
    double damping = 0.0;  // in [0,1)
    double tol = 1e-10;
    int max_iter = 10000;
};

struct BPResult {
    MessageSet messages;
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
    std::vector<std::vector<double>> vertex_beliefs;  // per vertex
    std::vector<std::vector<double>> pair_beliefs;    // per edge, q*q (row = smaller id)
    double bethe_value = 0.0;                         // graph Bethe free energy density
};

// Loopy BP / Bethe recursion on a finite graph. Damping 0.5 switches on
// automatically when the residual grows for 10 consecutive sweeps.
BPResult bp_run_graph(const FiniteGraph& g, const FactorSpec& spec, const BPOptions& opts);

// Root marginal of the depth-t tree with boundary conditions, computed by a
// single leaf-to-root pass of the Bethe recursion with boundary-injected
// phantom messages. Matches the tree_log_z root marginal.
std::vector<double> bp_tree_boundary(const RootedTree& tree, const FactorSpec& spec,
                                     const BoundaryCondition& boundary);

enum class Branch { Free, Ordered };

struct RegularFixedPoint {
    std::vector<double> h;
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;  // ||BP(h) - h||_inf
};

// Spatially homogeneous fixed point on the d-regular tree: iterate the
// (d-1)-fold recursion from the branch's initial condition. For Potts/Ising,
// Free starts from uniform and Ordered from the point mass on spin 1 (index
// 0); iterates are monotone in the spin-1 mass. For hard-core the single map
// anti-monotone, so the double map is iterated: Free is the 0-boundary branch
// (start from the point mass on sigma = 0) and Ordered the 1-boundary branch.
RegularFixedPoint bp_fixed_point_regular(int d, const FactorSpec& spec, Branch branch,
                                         double tol = 1e-13, int max_iter = 200000);

// One application of the degree-(d-1) recursion with all incoming messages
// equal to h; exposed so that population dynamics shares the same kernel.
std::vector<double> bp_map_regular(const FactorSpec& spec, int d, const std::vector<double>& h);

// BP update from an explicit list of incoming messages (log-domain
// accumulation, softmax-normalized). Throws DegenerateUpdate on zero
// normalizer.
std::vector<double> bp_update(const FactorSpec& spec,
                              const std::vector<const double*>& incoming);

// Vertex belief per the standard belief map: hbar ∝ psibar * prod conv(h_in).
std::vector<double> belief_from_incoming(const FactorSpec& spec,
                                         const std::vector<const double*>& incoming);

}  // namespace cavitylab
