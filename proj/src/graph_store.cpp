#include "cavitylab/graph_store.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

#include "cavitylab/numerics.hpp"

namespace cavitylab {

FiniteGraph FiniteGraph::from_edges(int n, std::vector<std::pair<int, int>> edges) {
    FiniteGraph g;
    g.n_ = n;
    std::set<std::pair<int, int>> seen;
    g.edges_.reserve(edges.size());
    for (auto [u, v] : edges) {
        if (u < 0 || v < 0 || u >= n || v >= n)
            throw CavityError(ErrCode::InvalidParameter, "edge endpoint out of range");
        if (u == v) throw CavityError(ErrCode::ParseError, "self-loop not allowed");
        auto key = std::minmax(u, v);
        if (!seen.insert(key).second)
            throw CavityError(ErrCode::ParseError, "duplicate edge");
        g.edges_.emplace_back(key.first, key.second);
    }
    g.adj_.assign(n, {});
    g.in_ids_.assign(n, {});
    g.out_ids_.assign(n, {});
    for (int e = 0; e < static_cast<int>(g.edges_.size()); ++e) {
        auto [u, v] = g.edges_[e];
        g.adj_[u].push_back(v);
        g.out_ids_[u].push_back(2 * e);      // u->v
        g.in_ids_[u].push_back(2 * e + 1);   // v->u
        g.adj_[v].push_back(u);
        g.out_ids_[v].push_back(2 * e + 1);
        g.in_ids_[v].push_back(2 * e);
    }
    return g;
}

int FiniteGraph::directed_index(int from, int to) const {
    const auto& nb = adj_[from];
    for (size_t i = 0; i < nb.size(); ++i)
        if (nb[i] == to) return out_ids_[from][i];
    throw CavityError(ErrCode::InvalidParameter, "directed_index: not an edge");
}

RootedTree RootedTree::from_graph(FiniteGraph g, int root) {
    int n = g.n();
    if (root < 0 || root >= n)
        throw CavityError(ErrCode::InvalidParameter, "root out of range");
    if (g.m() != n - 1)
        throw CavityError(ErrCode::NotATree, "edge count != n-1");
    RootedTree t;
    t.root = root;
    t.parent.assign(n, -2);
    t.depth_of.assign(n, -1);
    t.children.assign(n, {});
    std::deque<int> bfs{root};
    t.parent[root] = -1;
    t.depth_of[root] = 0;
    int visited = 0;
    while (!bfs.empty()) {
        int v = bfs.front();
        bfs.pop_front();
        ++visited;
        t.depth = std::max(t.depth, t.depth_of[v]);
        for (int w : g.neighbors(v)) {
            if (w == t.parent[v]) continue;
            if (t.parent[w] != -2) throw CavityError(ErrCode::NotATree, "cycle detected");
            t.parent[w] = v;
            t.depth_of[w] = t.depth_of[v] + 1;
            t.children[v].push_back(w);
            bfs.push_back(w);
        }
    }
    if (visited != n) throw CavityError(ErrCode::NotATree, "graph not connected");
    t.graph = std::move(g);
    return t;
}

RootedTree RootedTree::from_parent_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const std::exception& e) {
        throw CavityError(ErrCode::ParseError, std::string("tree json: ") + e.what());
    }
    int n = j.at("n").get<int>();
    int root = j.value("root", 0);
    auto parent = j.at("parent").get<std::vector<int>>();
    if (static_cast<int>(parent.size()) != n)
        throw CavityError(ErrCode::ParseError, "tree json: parent array size != n");
    std::vector<std::pair<int, int>> edges;
    for (int v = 0; v < n; ++v) {
        if (parent[v] == -1) {
            if (v != root) throw CavityError(ErrCode::ParseError, "tree json: -1 at non-root");
            continue;
        }
        edges.emplace_back(parent[v], v);
    }
    return from_graph(FiniteGraph::from_edges(n, std::move(edges)), root);
}

std::string RootedTree::to_parent_json() const {
    nlohmann::json j;
    j["n"] = graph.n();
    j["root"] = root;
    j["parent"] = parent;
    return j.dump();
}

OffspringLaw OffspringLaw::deterministic(int k) {
    if (k < 0) throw CavityError(ErrCode::InvalidParameter, "offspring k < 0");
    OffspringLaw l;
    l.kind = Kind::Deterministic;
    l.k = k;
    return l;
}

OffspringLaw OffspringLaw::poisson(double mean) {
    if (!(mean >= 0.0) || !std::isfinite(mean))
        throw CavityError(ErrCode::InvalidParameter, "poisson mean must be >= 0");
    OffspringLaw l;
    l.kind = Kind::Poisson;
    l.mean = mean;
    return l;
}

OffspringLaw OffspringLaw::explicit_pmf(std::vector<double> pmf) {
    double s = 0.0;
    for (double p : pmf) {
        if (p < 0.0) throw CavityError(ErrCode::InvalidParameter, "pmf entry < 0");
        s += p;
    }
    if (std::fabs(s - 1.0) > 1e-12)
        throw CavityError(ErrCode::InvalidParameter, "pmf does not sum to 1");
    OffspringLaw l;
    l.kind = Kind::Explicit;
    l.pmf = std::move(pmf);
    return l;
}

int OffspringLaw::sample(double u) const {
    switch (kind) {
        case Kind::Deterministic:
            return k;
        case Kind::Poisson: {
            if (mean == 0.0) return 0;
            int cutoff = static_cast<int>(mean + 12.0 * std::sqrt(mean) + 20.0);
            double p = std::exp(-mean), acc = p;
            for (int i = 0; i < cutoff; ++i) {
                if (u < acc) return i;
                p *= mean / (i + 1);
                acc += p;
            }
            return cutoff;
        }
        case Kind::Explicit: {
            double acc = 0.0;
            for (size_t i = 0; i < pmf.size(); ++i) {
                acc += pmf[i];
                if (u < acc) return static_cast<int>(i);
            }
            return static_cast<int>(pmf.size()) - 1;
        }
    }
    return 0;
}

FiniteGraph graph_from_edge_list(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::pair<int, int>> edges;
    int max_id = -1, lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        // strip whitespace-only lines
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::istringstream ls(line);
        long long u, v;
        std::string extra;
        if (!(ls >> u >> v) || (ls >> extra))
            throw CavityError(ErrCode::ParseError,
                              "edge list: malformed line " + std::to_string(lineno));
        if (u < 0 || v < 0)
            throw CavityError(ErrCode::ParseError,
                              "edge list: negative vertex id at line " + std::to_string(lineno));
        if (u == v)
            throw CavityError(ErrCode::ParseError,
                              "edge list: self-loop at line " + std::to_string(lineno));
        edges.emplace_back(static_cast<int>(u), static_cast<int>(v));
        max_id = std::max<long long>(max_id, std::max(u, v));
    }
    if (edges.empty()) throw CavityError(ErrCode::ParseError, "edge list: no edges");
    return FiniteGraph::from_edges(static_cast<int>(max_id) + 1, std::move(edges));
}

FiniteGraph gen_random_regular(int n, int d, std::uint64_t seed) {
    if (n <= 0 || d <= 0 || d >= n || (static_cast<long long>(n) * d) % 2 != 0)
        throw CavityError(ErrCode::InvalidParameter,
                          "random regular: need 0 < d < n and n*d even");
    SplitMix64 rng(mix_stream(seed, /*stream=*/0xB0A7, /*counter=*/0));
    std::vector<int> stubs(static_cast<size_t>(n) * d);
    for (int restart = 0; restart < 1000000; ++restart) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) stubs[static_cast<size_t>(i) * d + j] = i;
        // Fisher-Yates
        for (size_t i = stubs.size() - 1; i > 0; --i) {
            size_t j = rng.next_below(i + 1);
            std::swap(stubs[i], stubs[j]);
        }
        std::set<std::pair<int, int>> seen;
        bool ok = true;
        for (size_t i = 0; i + 1 < stubs.size(); i += 2) {
            int u = stubs[i], v = stubs[i + 1];
            if (u == v) { ok = false; break; }
            auto key = std::minmax(u, v);
            if (!seen.insert(key).second) { ok = false; break; }
        }
        if (!ok) continue;
        std::vector<std::pair<int, int>> edges(seen.begin(), seen.end());
        return FiniteGraph::from_edges(n, std::move(edges));
    }
    throw CavityError(ErrCode::GenerationFailure, "random regular: too many restarts");
}

RootedTree gen_tree(const TreeKind& kind, int depth, std::uint64_t seed) {
    if (depth < 0) throw CavityError(ErrCode::InvalidParameter, "depth < 0");
    std::vector<std::pair<int, int>> edges;
    std::vector<int> frontier{0};
    int next_id = 1;
    std::uint64_t counter = 0;
    for (int level = 0; level < depth && !frontier.empty(); ++level) {
        std::vector<int> next;
        for (int v : frontier) {
            int nkids = 0;
            if (kind.tag == TreeKind::Tag::Regular) {
                nkids = (level == 0) ? kind.d : kind.d - 1;
            } else {
                SplitMix64 rng(mix_stream(seed, 0x7EEE, counter++));
                nkids = kind.law.sample(rng.next_double());
            }
            for (int c = 0; c < nkids; ++c) {
                edges.emplace_back(v, next_id);
                next.push_back(next_id++);
            }
        }
        frontier = std::move(next);
    }
    return RootedTree::from_graph(FiniteGraph::from_edges(next_id, std::move(edges)), 0);
}

Neighborhood neighborhood(const FiniteGraph& g, int v, int t) {
    if (v < 0 || v >= g.n()) throw CavityError(ErrCode::InvalidParameter, "vertex out of range");
    if (t < 0) throw CavityError(ErrCode::InvalidParameter, "radius < 0");
    std::vector<int> dist(g.n(), -1);
    std::deque<int> bfs{v};
    dist[v] = 0;
    std::vector<int> keep{v};
    while (!bfs.empty()) {
        int u = bfs.front();
        bfs.pop_front();
        if (dist[u] == t) continue;
        for (int w : g.neighbors(u))
            if (dist[w] < 0) {
                dist[w] = dist[u] + 1;
                keep.push_back(w);
                bfs.push_back(w);
            }
    }
    std::sort(keep.begin(), keep.end());
    std::vector<int> relabel(g.n(), -1);
    for (size_t i = 0; i < keep.size(); ++i) relabel[keep[i]] = static_cast<int>(i);
    std::vector<std::pair<int, int>> edges;
    for (auto [a, b] : g.edges())
        if (relabel[a] >= 0 && relabel[b] >= 0) edges.emplace_back(relabel[a], relabel[b]);
    Neighborhood nb;
    nb.graph = FiniteGraph::from_edges(static_cast<int>(keep.size()), std::move(edges));
    nb.root = relabel[v];
    nb.original_vertex = std::move(keep);
    // acyclic iff |E| = |V| - #components; the ball is connected by construction
    nb.is_tree = nb.graph.m() == nb.graph.n() - 1;
    return nb;
}

}  // namespace cavitylab
