#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cavitylab/errors.hpp"

namespace cavitylab {

// Immutable simple undirected graph with a directed-edge index.
// Directed edge ids: edge e = (u,v) with u < v maps to 2e (u->v) and 2e+1
// (v->u); the reverse of id k is k ^ 1.
class FiniteGraph {
public:
    FiniteGraph() = default;
    // Edges may be given in either orientation; duplicates and self-loops throw.
    static FiniteGraph from_edges(int n, std::vector<std::pair<int, int>> edges);

    int n() const { return n_; }
    int m() const { return static_cast<int>(edges_.size()); }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    const std::vector<int>& neighbors(int v) const { return adj_[v]; }
    int degree(int v) const { return static_cast<int>(adj_[v].size()); }

    int directed_index(int from, int to) const;  // throws if not an edge
    static int reverse_index(int de) { return de ^ 1; }
    std::pair<int, int> directed_endpoints(int de) const {
        const auto& e = edges_[de >> 1];
        return (de & 1) ? std::make_pair(e.second, e.first) : e;
    }
    // Directed ids w->v for each neighbor w of v, aligned with neighbors(v).
    const std::vector<int>& in_edge_ids(int v) const { return in_ids_[v]; }
    // Directed ids v->w, aligned with neighbors(v).
    const std::vector<int>& out_edge_ids(int v) const { return out_ids_[v]; }

private:
    int n_ = 0;
    std::vector<std::pair<int, int>> edges_;  // normalized u < v
    std::vector<std::vector<int>> adj_;
    std::vector<std::vector<int>> in_ids_, out_ids_;
};

// Rooted tree on top of a FiniteGraph; construction validates connectivity
// and acyclicity (errors with NotATree otherwise).
struct RootedTree {
    FiniteGraph graph;
    int root = 0;
    int depth = 0;
    std::vector<int> parent;          // -1 at root
    std::vector<int> depth_of;        // distance from root
    std::vector<std::vector<int>> children;

    static RootedTree from_graph(FiniteGraph g, int root);
    // Parse/emit the JSON parent-array format {"n":, "root":0, "parent":[-1,...]}.
    static RootedTree from_parent_json(const std::string& json_text);
    std::string to_parent_json() const;
};

// Offspring law for Galton-Watson sampling.
struct OffspringLaw {
    enum class Kind { Deterministic, Poisson, Explicit };
    Kind kind = Kind::Deterministic;
    int k = 0;                 // Deterministic
    double mean = 0.0;         // Poisson
    std::vector<double> pmf;   // Explicit, over {0,1,...}

    static OffspringLaw deterministic(int k);
    static OffspringLaw poisson(double mean);
    static OffspringLaw explicit_pmf(std::vector<double> pmf);  // must sum to 1 within 1e-12

    // Deterministic inversion sampling; Poisson is truncated at
    // mean + 12*sqrt(mean) + 20.
    int sample(double u) const;
};

// Line-oriented "u v" edge list. Vertex ids are nonnegative; n = 1 + max id.
FiniteGraph graph_from_edge_list(const std::string& text);

// Simple d-regular graph via the configuration model with whole-restart
// rejection of self-loops and multi-edges. Deterministic given seed.
FiniteGraph gen_random_regular(int n, int d, std::uint64_t seed);

struct TreeKind {
    enum class Tag { Regular, GaltonWatson } tag = Tag::Regular;
    int d = 3;                 // Regular: root has d children, internal d-1
    OffspringLaw law;          // GaltonWatson: offspring law at every vertex
    static TreeKind regular(int d) { return {Tag::Regular, d, {}}; }
    static TreeKind galton_watson(OffspringLaw law) {
        return {Tag::GaltonWatson, 0, std::move(law)};
    }
};

RootedTree gen_tree(const TreeKind& kind, int depth, std::uint64_t seed);

struct Neighborhood {
    FiniteGraph graph;               // induced subgraph, relabeled
    int root = 0;                    // index of v in the relabeled graph
    bool is_tree = false;
    std::vector<int> original_vertex;  // relabeled -> original ids
};

Neighborhood neighborhood(const FiniteGraph& g, int v, int t);

}  // namespace cavitylab
