#include "cavitylab/exact_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cavitylab {

namespace {

double config_log_weight(const FiniteGraph& g, const FactorSpec& spec,
                         const std::vector<int>& sigma) {
    double lw = 0.0;
    for (auto [u, v] : g.edges()) {
        double x = spec.xi(sigma[u], sigma[v]);
        if (x == neg_inf) return neg_inf;
        lw += x;
    }
    for (int v = 0; v < g.n(); ++v) lw += spec.xibar(sigma[v]);
    return lw;
}

bool advance(std::vector<int>& sigma, int q) {
    for (size_t i = 0; i < sigma.size(); ++i) {
        if (++sigma[i] < q) return true;
        sigma[i] = 0;
    }
    return false;
}

}  // namespace

ExactResult exact_log_z(const FiniteGraph& g, const FactorSpec& spec, bool want_marginals) {
    const int n = g.n(), q = spec.q();
    if (n * std::log(static_cast<double>(q)) > std::log(1e8))
        throw CavityError(ErrCode::TooLarge, "exact_log_z: q^n exceeds 1e8");

    std::vector<int> sigma(n, 0);
    LogSumAcc acc;
    do {
        acc.add(config_log_weight(g, spec, sigma));
    } while (advance(sigma, q));
    ExactResult res;
    res.log_z = acc.value();
    res.free_energy_density = res.log_z / n;
    if (!want_marginals) return res;
    if (res.log_z == neg_inf)
        throw CavityError(ErrCode::DegenerateMeasure, "exact_log_z: Z = 0, no marginals");

    res.vertex_marginals.assign(n, std::vector<double>(q, 0.0));
    res.edge_marginals.assign(g.m(), std::vector<double>(static_cast<size_t>(q) * q, 0.0));
    std::fill(sigma.begin(), sigma.end(), 0);
    do {
        double lw = config_log_weight(g, spec, sigma);
        if (lw == neg_inf) continue;
        double p = std::exp(lw - res.log_z);
        for (int v = 0; v < n; ++v) res.vertex_marginals[v][sigma[v]] += p;
        for (int e = 0; e < g.m(); ++e) {
            auto [u, v] = g.edges()[e];
            res.edge_marginals[e][sigma[u] * q + sigma[v]] += p;
        }
    } while (advance(sigma, q));
    return res;
}

namespace {

// log of sum_t psi(s,t) * exp(lmsg(t)) for each s.
std::vector<double> log_convolve(const FactorSpec& spec, const std::vector<double>& lmsg) {
    int q = spec.q();
    std::vector<double> out(q);
    std::vector<double> tmp(q);
    for (int s = 0; s < q; ++s) {
        for (int t = 0; t < q; ++t) tmp[t] = spec.xi(s, t) + lmsg[t];
        out[s] = log_sum_exp(tmp);
    }
    return out;
}

// Per-vertex boundary factor in log domain (phantom children contributions).
std::vector<double> boundary_log_factor(const RootedTree& tree, const FactorSpec& spec,
                                        const BoundaryCondition& bc, int v) {
    int q = spec.q();
    std::vector<double> f(q, 0.0);
    if (bc.kind == BoundaryCondition::Kind::Free) return f;
    if (tree.depth_of[v] != tree.depth) return f;
    int phantom;
    if (!bc.phantom_counts.empty()) {
        phantom = bc.phantom_counts[v];
    } else {
        if (bc.full_degree < 0)
            throw CavityError(ErrCode::InvalidParameter,
                              "boundary: full_degree or phantom_counts required");
        phantom = bc.full_degree - tree.graph.degree(v);
    }
    if (phantom <= 0) return f;
    if (bc.kind == BoundaryCondition::Kind::Fixed) {
        if (bc.sigma0 < 0 || bc.sigma0 >= q)
            throw CavityError(ErrCode::InvalidParameter, "boundary: sigma0 out of range");
        for (int s = 0; s < q; ++s) f[s] = phantom * spec.xi(s, bc.sigma0);
    } else {
        if (static_cast<int>(bc.message.size()) != q)
            throw CavityError(ErrCode::InvalidParameter, "boundary: message size != q");
        std::vector<double> lmsg(q);
        for (int t = 0; t < q; ++t)
            lmsg[t] = bc.message[t] > 0.0 ? std::log(bc.message[t]) : neg_inf;
        auto conv = log_convolve(spec, lmsg);
        for (int s = 0; s < q; ++s) f[s] = phantom * conv[s];
    }
    return f;
}

}  // namespace

ExactResult tree_log_z(const RootedTree& tree, const FactorSpec& spec,
                       const BoundaryCondition& boundary) {
    const int n = tree.graph.n(), q = spec.q();
    // Upward tables: U[v](s) = log weight of the subtree at v given sigma_v = s,
    // including psibar(v) and the boundary factor. msg_to_parent[v] = conv of U[v].
    std::vector<std::vector<double>> U(n), msg_up(n);
    // post-order = reverse BFS order; BFS order is by construction parent-first
    std::vector<int> order;
    order.reserve(n);
    {
        std::vector<int> bfs{tree.root};
        for (size_t i = 0; i < bfs.size(); ++i) {
            order.push_back(bfs[i]);
            for (int c : tree.children[bfs[i]]) bfs.push_back(c);
        }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        int v = *it;
        std::vector<double> u(q);
        auto bf = boundary_log_factor(tree, spec, boundary, v);
        for (int s = 0; s < q; ++s) u[s] = spec.xibar(s) + bf[s];
        for (int c : tree.children[v])
            for (int s = 0; s < q; ++s) u[s] += msg_up[c][s];
        U[v] = u;
        msg_up[v] = log_convolve(spec, u);
    }
    ExactResult res;
    res.log_z = log_sum_exp(U[tree.root]);
    res.free_energy_density = res.log_z / n;
    if (res.log_z == neg_inf)
        throw CavityError(ErrCode::DegenerateMeasure, "tree_log_z: Z = 0");

    // Downward pass: D[v](s) = log weight of everything outside v's subtree.
    std::vector<std::vector<double>> D(n, std::vector<double>(q, 0.0));
    res.vertex_marginals.assign(n, std::vector<double>(q, 0.0));
    res.edge_marginals.assign(tree.graph.m(), {});
    for (int v : order) {
        std::vector<double> lv(q);
        for (int s = 0; s < q; ++s) lv[s] = U[v][s] + D[v][s];
        double lz = log_sum_exp(lv);
        for (int s = 0; s < q; ++s) res.vertex_marginals[v][s] = std::exp(lv[s] - lz);
        for (int c : tree.children[v]) {
            std::vector<double> rest(q);  // U[v] + D[v] with child c's message removed
            for (int s = 0; s < q; ++s) rest[s] = U[v][s] + D[v][s] - msg_up[c][s];
            D[c] = log_convolve(spec, rest);
            // edge marginal over (sigma_v, sigma_c)
            int e = tree.graph.directed_index(v, c) >> 1;
            auto [a, b] = tree.graph.edges()[e];
            std::vector<double> em(static_cast<size_t>(q) * q, 0.0);
            std::vector<double> flat(static_cast<size_t>(q) * q);
            for (int s = 0; s < q; ++s)
                for (int t = 0; t < q; ++t)
                    flat[s * q + t] = rest[s] + spec.xi(s, t) + U[c][t];
            double lze = log_sum_exp(flat);
            for (int s = 0; s < q; ++s)
                for (int t = 0; t < q; ++t) {
                    double p = std::exp(flat[s * q + t] - lze);
                    // edges are stored with a < b; (v,c) may be either orientation
                    if (a == v)
                        em[s * q + t] += p;
                    else
                        em[t * q + s] += p;
                }
            res.edge_marginals[e] = std::move(em);
        }
    }
    return res;
}

double rc_log_z(const FiniteGraph& g, int q, double beta) {
    if (q < 1) throw CavityError(ErrCode::InvalidParameter, "rc_log_z: q < 1");
    if (beta < 0.0) throw CavityError(ErrCode::InvalidParameter, "rc_log_z: beta < 0");
    const int m = g.m(), n = g.n();
    if (m > 30) throw CavityError(ErrCode::TooLarge, "rc_log_z: more than 30 edges");
    const double log_w = beta > 0.0 ? std::log(std::expm1(beta)) : neg_inf;
    const double log_q = std::log(static_cast<double>(q));
    LogSumAcc acc;
    std::vector<int> parent(n);
    for (std::uint32_t F = 0; F < (1u << m); ++F) {
        int bits = __builtin_popcount(F);
        if (beta == 0.0 && bits > 0) continue;  // e^0 - 1 = 0
        // union-find rebuilt per subset
        std::iota(parent.begin(), parent.end(), 0);
        auto find = [&](int x) {
            while (parent[x] != x) x = parent[x] = parent[parent[x]];
            return x;
        };
        int comps = n;
        for (int e = 0; e < m; ++e) {
            if (!(F & (1u << e))) continue;
            int a = find(g.edges()[e].first), b = find(g.edges()[e].second);
            if (a != b) {
                parent[a] = b;
                --comps;
            }
        }
        acc.add((bits > 0 ? bits * log_w : 0.0) + comps * log_q);
    }
    return acc.value();
}

TransferRate transfer_matrix_rate(const FactorSpec& spec) {
    const int q = spec.q();
    std::vector<double> tilde(static_cast<size_t>(q) * q);
    for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b)
            tilde[a * q + b] =
                spec.psi(a, b) * std::sqrt(spec.psibar(a)) * std::sqrt(spec.psibar(b));
    // irreducibility: the support graph (with self-edges) must be strongly
    // connected; symmetric, so plain reachability suffices.
    {
        std::vector<char> seen(q, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            int a = stack.back();
            stack.pop_back();
            for (int b = 0; b < q; ++b)
                if (!seen[b] && tilde[a * q + b] > 0.0) {
                    seen[b] = 1;
                    stack.push_back(b);
                }
        }
        for (int a = 0; a < q; ++a)
            if (!seen[a])
                throw CavityError(ErrCode::ReducibleMatrix,
                                  "transfer_matrix_rate: psi~ is reducible");
    }
    std::vector<double> v(q, 1.0 / std::sqrt(static_cast<double>(q))), w(q);
    double rho = 0.0, prev = neg_inf;
    for (int it = 0; it < 1000000; ++it) {
        for (int a = 0; a < q; ++a) {
            double s = 0.0;
            for (int b = 0; b < q; ++b) s += tilde[a * q + b] * v[b];
            w[a] = s;
        }
        double norm = 0.0;
        for (int a = 0; a < q; ++a) norm += w[a] * w[a];
        norm = std::sqrt(norm);
        if (norm == 0.0)
            throw CavityError(ErrCode::ReducibleMatrix, "transfer_matrix_rate: zero iterate");
        for (int a = 0; a < q; ++a) v[a] = w[a] / norm;
        // Rayleigh quotient of the symmetric matrix
        rho = 0.0;
        for (int a = 0; a < q; ++a)
            for (int b = 0; b < q; ++b) rho += v[a] * tilde[a * q + b] * v[b];
        if (prev != neg_inf && std::fabs(rho - prev) <= 1e-13 * std::fabs(rho) && it >= 8) break;
        prev = rho;
    }
    TransferRate res;
    res.log_rho = std::log(rho);
    res.pair_belief.assign(static_cast<size_t>(q) * q, 0.0);
    res.marginal.assign(q, 0.0);
    for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b) {
            double p = tilde[a * q + b] * v[a] * v[b] / rho;
            res.pair_belief[a * q + b] = p;
            res.marginal[a] += p;
        }
    return res;
}

}  // namespace cavitylab
