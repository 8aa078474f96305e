#include "cavitylab/bp_engine.hpp"

#include <algorithm>
#include <cmath>

namespace cavitylab {

namespace {

// log sum_t psi(s,t) h(t) for each s; h in linear domain.
void log_convolve_linear(const FactorSpec& spec, const double* h, std::vector<double>& out) {
    const int q = spec.q();
    out.resize(q);
    std::vector<double> tmp(q);
    for (int s = 0; s < q; ++s) {
        for (int t = 0; t < q; ++t)
            tmp[t] = h[t] > 0.0 ? spec.xi(s, t) + std::log(h[t]) : neg_inf;
        out[s] = log_sum_exp(tmp);
    }
}

}  // namespace

std::vector<double> bp_update(const FactorSpec& spec,
                              const std::vector<const double*>& incoming) {
    const int q = spec.q();
    std::vector<double> lw(q);
    for (int s = 0; s < q; ++s) lw[s] = spec.xibar(s);
    std::vector<double> conv;
    for (const double* h : incoming) {
        log_convolve_linear(spec, h, conv);
        for (int s = 0; s < q; ++s) lw[s] += conv[s];
    }
    if (!softmax_inplace(lw))
        throw CavityError(ErrCode::DegenerateUpdate, "bp_update: zero normalizer");
    return lw;
}

std::vector<double> belief_from_incoming(const FactorSpec& spec,
                                         const std::vector<const double*>& incoming) {
    // Same functional form as the message update with no excluded neighbor.
    return bp_update(spec, incoming);
}

std::vector<double> bp_map_regular(const FactorSpec& spec, int d, const std::vector<double>& h) {
    std::vector<const double*> in(static_cast<size_t>(d - 1), h.data());
    return bp_update(spec, in);
}

namespace {

void init_messages(MessageSet& ms, const FiniteGraph& g, const FactorSpec& spec,
                   const BPInit& init) {
    const int q = spec.q();
    ms.q = q;
    ms.h.assign(static_cast<size_t>(2) * g.m() * q, 0.0);
    for (int de = 0; de < 2 * g.m(); ++de) {
        double* h = ms.at(de);
        switch (init.kind) {
            case BPInit::Kind::Uniform:
                for (int s = 0; s < q; ++s) h[s] = 1.0 / q;
                break;
            case BPInit::Kind::FixedSpin:
                h[init.sigma0] = 1.0;
                break;
            case BPInit::Kind::Random: {
                // i.i.d. uniform on the simplex via normalized exponentials
                SplitMix64 rng(mix_stream(init.seed, 0xB9, de));
                double sum = 0.0;
                for (int s = 0; s < q; ++s) {
                    double u = rng.next_double();
                    h[s] = -std::log(1.0 - u);
                    sum += h[s];
                }
                for (int s = 0; s < q; ++s) h[s] /= sum;
                break;
            }
        }
    }
}

struct EdgeContext {
    int target_vertex;               // the u of u->v
    std::vector<int> incoming_ids;   // directed ids w->u for w != v
};

}  // namespace

BPResult bp_run_graph(const FiniteGraph& g, const FactorSpec& spec, const BPOptions& opts) {
    const int q = spec.q(), m = g.m();
    BPResult res;
    init_messages(res.messages, g, spec, opts.init);

    // Precompute, for each directed edge u->v, the incoming directed ids w->u.
    std::vector<EdgeContext> ctx(static_cast<size_t>(2) * m);
    for (int de = 0; de < 2 * m; ++de) {
        auto [u, v] = g.directed_endpoints(de);
        ctx[de].target_vertex = u;
        const auto& nbrs = g.neighbors(u);
        const auto& ins = g.in_edge_ids(u);
        for (size_t i = 0; i < nbrs.size(); ++i)
            if (nbrs[i] != v) ctx[de].incoming_ids.push_back(ins[i]);
    }

    MessageSet next = res.messages;
    double damping = opts.damping;
    double prev_resid = neg_inf;
    int grow_streak = 0;
    std::vector<const double*> in;
    bool converged = false;
    int iter = 0;
    for (iter = 1; iter <= opts.max_iter; ++iter) {
        double resid = 0.0;
        MessageSet& src = res.messages;
        MessageSet& dst = (opts.schedule == Schedule::Synchronous) ? next : res.messages;
        for (int de = 0; de < 2 * m; ++de) {
            in.clear();
            for (int id : ctx[de].incoming_ids) in.push_back(src.at(id));
            std::vector<double> fresh;
            try {
                fresh = bp_update(spec, in);
            } catch (const CavityError&) {
                throw CavityError(ErrCode::DegenerateUpdate,
                                  "bp_run_graph: zero normalizer on directed edge " +
                                      std::to_string(de));
            }
            double* out = dst.at(de);
            const double* old = res.messages.at(de);
            for (int s = 0; s < q; ++s) {
                double nv = (1.0 - damping) * fresh[s] + damping * old[s];
                resid = std::max(resid, std::fabs(nv - old[s]));
                out[s] = nv;
            }
        }
        if (opts.schedule == Schedule::Synchronous) std::swap(res.messages.h, next.h);
        res.messages.iterations = iter;
        res.messages.last_linf = resid;
        if (resid < opts.tol) {
            converged = true;
            break;
        }
        // oscillation guard: damping 0.5 after 10 consecutive residual increases
        if (resid > prev_resid) {
            if (++grow_streak >= 10 && damping == 0.0) {
                damping = 0.5;
                grow_streak = 0;
            }
        } else {
            grow_streak = 0;
        }
        prev_resid = resid;
    }
    res.converged = converged;
    res.iterations = res.messages.iterations;
    res.residual = res.messages.last_linf;

    // Beliefs and Bethe value from the final messages, always.
    res.vertex_beliefs.assign(g.n(), {});
    double phi_vx_sum = 0.0, phi_edge_sum = 0.0;
    std::vector<double> conv;
    for (int v = 0; v < g.n(); ++v) {
        std::vector<double> lw(q);
        for (int s = 0; s < q; ++s) lw[s] = spec.xibar(s);
        const auto& ins = g.in_edge_ids(v);
        for (int id : ins) {
            log_convolve_linear(spec, res.messages.at(id), conv);
            for (int s = 0; s < q; ++s) lw[s] += conv[s];
        }
        phi_vx_sum += log_sum_exp(lw);
        if (!softmax_inplace(lw))
            throw CavityError(ErrCode::DegenerateUpdate,
                              "bp_run_graph: zero belief normalizer at vertex " +
                                  std::to_string(v));
        res.vertex_beliefs[v] = std::move(lw);
    }
    res.pair_beliefs.assign(m, {});
    for (int e = 0; e < m; ++e) {
        const double* huv = res.messages.at(2 * e);      // u->v
        const double* hvu = res.messages.at(2 * e + 1);  // v->u
        std::vector<double> lw(static_cast<size_t>(q) * q);
        for (int s = 0; s < q; ++s)
            for (int t = 0; t < q; ++t) {
                double lu = huv[s] > 0.0 ? std::log(huv[s]) : neg_inf;
                double lv = hvu[t] > 0.0 ? std::log(hvu[t]) : neg_inf;
                lw[s * q + t] = spec.xi(s, t) + lu + lv;
            }
        phi_edge_sum += log_sum_exp(lw);
        softmax_inplace(lw);
        res.pair_beliefs[e] = std::move(lw);
    }
    res.bethe_value = (phi_vx_sum - phi_edge_sum) / g.n();
    return res;
}

std::vector<double> bp_tree_boundary(const RootedTree& tree, const FactorSpec& spec,
                                     const BoundaryCondition& bc) {
    const int q = spec.q();
    const int n = tree.graph.n();
    std::vector<std::vector<double>> msg_up(n);  // message v -> parent(v), linear

    std::vector<int> order;
    order.reserve(n);
    {
        std::vector<int> bfs{tree.root};
        for (size_t i = 0; i < bfs.size(); ++i) {
            order.push_back(bfs[i]);
            for (int c : tree.children[bfs[i]]) bfs.push_back(c);
        }
    }
    std::vector<double> conv;
    // boundary phantom message, shared by all boundary vertices
    std::vector<double> phantom(q, 0.0);
    if (bc.kind == BoundaryCondition::Kind::Fixed) {
        phantom[bc.sigma0] = 1.0;
    } else if (bc.kind == BoundaryCondition::Kind::Message) {
        phantom = bc.message;
    }
    auto phantom_count = [&](int v) -> int {
        if (bc.kind == BoundaryCondition::Kind::Free) return 0;
        if (tree.depth_of[v] != tree.depth) return 0;
        if (!bc.phantom_counts.empty()) return bc.phantom_counts[v];
        if (bc.full_degree < 0)
            throw CavityError(ErrCode::InvalidParameter,
                              "boundary: full_degree or phantom_counts required");
        return std::max(0, bc.full_degree - tree.graph.degree(v));
    };

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        int v = *it;
        std::vector<double> lw(q);
        for (int s = 0; s < q; ++s) lw[s] = spec.xibar(s);
        int ph = phantom_count(v);
        if (ph > 0) {
            log_convolve_linear(spec, phantom.data(), conv);
            for (int s = 0; s < q; ++s) lw[s] += ph * conv[s];
        }
        for (int c : tree.children[v]) {
            log_convolve_linear(spec, msg_up[c].data(), conv);
            for (int s = 0; s < q; ++s) lw[s] += conv[s];
        }
        if (v == tree.root) {
            if (!softmax_inplace(lw))
                throw CavityError(ErrCode::DegenerateUpdate,
                                  "bp_tree_boundary: zero root normalizer");
            return lw;
        }
        if (!softmax_inplace(lw))
            throw CavityError(ErrCode::DegenerateUpdate,
                              "bp_tree_boundary: zero normalizer below vertex " +
                                  std::to_string(v));
        msg_up[v] = std::move(lw);
    }
    throw CavityError(ErrCode::InternalError, "bp_tree_boundary: unreachable");
}

RegularFixedPoint bp_fixed_point_regular(int d, const FactorSpec& spec, Branch branch,
                                         double tol, int max_iter) {
    if (d < 2) throw CavityError(ErrCode::InvalidParameter, "bp_fixed_point_regular: d < 2");
    const int q = spec.q();
    const bool hardcore = spec.family() == ModelFamily::HardCore;

    std::vector<double> h(q, 1.0 / q);
    if (hardcore) {
        // 0-boundary (Free) starts from the point mass on sigma=0, 1-boundary
        // (Ordered) from the point mass on sigma=1; double map keeps parity.
        h.assign(q, 0.0);
        h[branch == Branch::Free ? 0 : 1] = 1.0;
    } else if (branch == Branch::Ordered) {
        h.assign(q, 0.0);
        h[0] = 1.0;
    }

    RegularFixedPoint res;
    const bool monotone_family =
        (spec.family() == ModelFamily::Potts || spec.family() == ModelFamily::Ising) &&
        spec.beta() >= 0.0 && spec.B() >= 0.0;
    double prev_mass = h[0];
    for (int it = 1; it <= max_iter; ++it) {
        std::vector<double> hn = bp_map_regular(spec, d, h);
        if (hardcore) hn = bp_map_regular(spec, d, hn);  // double map
        double diff = 0.0;
        for (int s = 0; s < q; ++s) diff = std::max(diff, std::fabs(hn[s] - h[s]));
        h = std::move(hn);
        res.iterations = it;
        if (monotone_family) {
            // free branch climbs, ordered branch descends in the spin-1 mass
            double slack = 1e-13;
            bool ok = branch == Branch::Free ? h[0] >= prev_mass - slack
                                             : h[0] <= prev_mass + slack;
            if (!ok)
                throw CavityError(ErrCode::InternalError,
                                  "bp_fixed_point_regular: monotonicity violated");
            prev_mass = h[0];
        }
        if (diff < tol) {
            res.converged = true;
            break;
        }
    }
    std::vector<double> img = bp_map_regular(spec, d, h);
    if (hardcore) img = bp_map_regular(spec, d, img);
    double r = 0.0;
    for (int s = 0; s < q; ++s) r = std::max(r, std::fabs(img[s] - h[s]));
    res.residual = r;
    res.h = std::move(h);
    return res;
}

}  // namespace cavitylab
