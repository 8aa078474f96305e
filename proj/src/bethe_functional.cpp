#include "cavitylab/bethe_functional.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace cavitylab {

namespace {

double safe_log(double x) { return x > 0.0 ? std::log(x) : neg_inf; }

// log sum_t psi(s,t) h(t) for each s.
std::vector<double> conv_log(const FactorSpec& spec, const std::vector<double>& h) {
    const int q = spec.q();
    std::vector<double> out(q), tmp(q);
    for (int s = 0; s < q; ++s) {
        for (int t = 0; t < q; ++t) tmp[t] = spec.xi(s, t) + safe_log(h[t]);
        out[s] = log_sum_exp(tmp);
    }
    return out;
}

}  // namespace

BetheBreakdown phi_regular(int d, const FactorSpec& spec, const std::vector<double>& h) {
    const int q = spec.q();
    auto conv = conv_log(spec, h);
    std::vector<double> vx(q);
    for (int s = 0; s < q; ++s) vx[s] = spec.xibar(s) + d * conv[s];
    BetheBreakdown out;
    out.phi_vx = log_sum_exp(vx);
    std::vector<double> ew(static_cast<size_t>(q) * q);
    for (int s = 0; s < q; ++s)
        for (int t = 0; t < q; ++t)
            ew[s * q + t] = spec.xi(s, t) + safe_log(h[s]) + safe_log(h[t]);
    out.phi_edge = (d / 2.0) * log_sum_exp(ew);
    out.phi_total = out.phi_vx - out.phi_edge;
    out.degenerate = !(std::isfinite(out.phi_vx) && std::isfinite(out.phi_edge));
    return out;
}

std::vector<double> PairBelief::marginal() const {
    std::vector<double> m(q, 0.0);
    for (int s = 0; s < q; ++s)
        for (int t = 0; t < q; ++t) m[s] += joint[s * q + t];
    return m;
}

double PairBelief::row_col_mismatch() const {
    double worst = 0.0;
    for (int s = 0; s < q; ++s) {
        double r = 0.0, c = 0.0;
        for (int t = 0; t < q; ++t) {
            r += joint[s * q + t];
            c += joint[t * q + s];
        }
        worst = std::max(worst, std::fabs(r - c));
    }
    return worst;
}

PairBelief embed_message(const FactorSpec& spec, const std::vector<double>& h) {
    const int q = spec.q();
    std::vector<double> lw(static_cast<size_t>(q) * q);
    for (int s = 0; s < q; ++s)
        for (int t = 0; t < q; ++t)
            lw[s * q + t] = spec.xi(s, t) + safe_log(h[s]) + safe_log(h[t]);
    if (!softmax_inplace(lw))
        throw CavityError(ErrCode::DegenerateUpdate, "embed_message: zero normalizer");
    PairBelief b;
    b.q = q;
    b.joint = std::move(lw);
    return b;
}

double phi_local_polytope(int d, const FactorSpec& spec, const PairBelief& b) {
    const int q = spec.q();
    if (b.q != q)
        throw CavityError(ErrCode::InvalidPolytopePoint, "pair belief alphabet mismatch");
    if (b.row_col_mismatch() > 1e-8)
        throw CavityError(ErrCode::InvalidPolytopePoint,
                          "pair belief marginals inconsistent beyond 1e-8");
    auto hbar = b.marginal();
    // D(hbar || psibar), unnormalized reference; 0 log 0 = 0.
    double d_vx = 0.0;
    for (int s = 0; s < q; ++s)
        if (hbar[s] > 0.0) d_vx += hbar[s] * (std::log(hbar[s]) - spec.xibar(s));
    // (d/2) D(b || hbar x_psi hbar); support mask realizes the conventions.
    double d_e = 0.0;
    for (int s = 0; s < q; ++s)
        for (int t = 0; t < q; ++t) {
            double v = b.joint[s * q + t];
            if (v <= 0.0) continue;
            if (!spec.supported(s, t)) return neg_inf;  // mass off supp(psi)
            d_e += v * (std::log(v) - std::log(hbar[s]) - spec.xi(s, t) - std::log(hbar[t]));
        }
    return -d_vx - (d / 2.0) * d_e;
}

namespace {

std::vector<char> support_mask(const FactorSpec& spec) {
    const int q = spec.q();
    std::vector<char> mask(static_cast<size_t>(q) * q, 0);
    for (int s = 0; s < q; ++s)
        for (int t = 0; t < q; ++t) mask[s * q + t] = spec.supported(s, t) ? 1 : 0;
    return mask;
}

void symmetrize(std::vector<double>& x, int q) {
    for (int s = 0; s < q; ++s)
        for (int t = s + 1; t < q; ++t) {
            double v = 0.5 * (x[s * q + t] + x[t * q + s]);
            x[s * q + t] = x[t * q + s] = v;
        }
}

// Gradient of the polytope functional at interior b (entries clamped away
// from zero inside the logs).
void polytope_gradient(int d, const FactorSpec& spec, const std::vector<double>& b,
                       std::vector<double>& grad) {
    const int q = spec.q();
    std::vector<double> hbar(q, 0.0);
    for (int s = 0; s < q; ++s)
        for (int t = 0; t < q; ++t) hbar[s] += b[s * q + t];
    grad.assign(static_cast<size_t>(q) * q, 0.0);
    for (int s = 0; s < q; ++s)
        for (int t = 0; t < q; ++t) {
            if (!spec.supported(s, t)) continue;
            double lb = std::log(std::max(b[s * q + t], 1e-300));
            double lhs = std::log(std::max(hbar[s], 1e-300));
            double lht = std::log(std::max(hbar[t], 1e-300));
            grad[s * q + t] = 0.5 * (spec.xibar(s) + spec.xibar(t)) +
                              (d / 2.0) * spec.xi(s, t) - (d / 2.0) * (lb + 1.0) +
                              0.5 * (d - 1.0) * (lhs + lht + 2.0);
        }
}

double phi_poly_raw(int d, const FactorSpec& spec, const std::vector<double>& joint, int q) {
    PairBelief b;
    b.q = q;
    b.joint = joint;
    return phi_local_polytope(d, spec, b);
}

}  // namespace

PolytopeOptimum optimize_local_polytope(int d, const FactorSpec& spec, int n_starts,
                                        std::uint64_t seed, double tol) {
    const int q = spec.q();
    auto mask = support_mask(spec);
    auto project = [&](std::vector<double>& x) {
        symmetrize(x, q);
        project_simplex_masked(x, mask);
    };

    std::vector<std::vector<double>> starts;
    // uniform on the support
    {
        std::vector<double> u(static_cast<size_t>(q) * q, 1.0);
        project(u);
        starts.push_back(std::move(u));
    }
    // the two branch fixed points, embedded
    for (Branch br : {Branch::Free, Branch::Ordered}) {
        auto fp = bp_fixed_point_regular(d, spec, br);
        starts.push_back(embed_message(spec, fp.h).joint);
    }
    for (int k = 0; k < n_starts; ++k) {
        SplitMix64 rng(mix_stream(seed, 0x0b7, k));
        std::vector<double> x(static_cast<size_t>(q) * q, 0.0);
        for (size_t i = 0; i < x.size(); ++i)
            if (mask[i]) x[i] = -std::log(1.0 - rng.next_double());
        project(x);
        starts.push_back(std::move(x));
    }

    PolytopeOptimum best;
    std::vector<double> grad;
    for (auto& x : starts) {
        double fx = phi_poly_raw(d, spec, x, q);
        double step = 0.05;
        for (int it = 0; it < 50000; ++it) {
            polytope_gradient(d, spec, x, grad);
            std::vector<double> y = x;
            for (size_t i = 0; i < y.size(); ++i) y[i] += step * grad[i];
            project(y);
            double fy = phi_poly_raw(d, spec, y, q);
            if (fy > fx) {
                double move = 0.0;
                for (size_t i = 0; i < y.size(); ++i)
                    move = std::max(move, std::fabs(y[i] - x[i]));
                x.swap(y);
                fx = fy;
                step = std::min(step * 1.3, 1.0);
                if (move < tol * 1e-3) break;
            } else {
                step *= 0.5;
                if (step < 1e-14) break;
            }
        }
        if (fx > best.value) {
            best.value = fx;
            best.best.q = q;
            best.best.joint = x;
        }
    }
    return best;
}

namespace {

// Random symmetric zero-sum direction scaled relative to b, so that b stays
// feasible under small steps and higher-order difference terms stay bounded:
// delta = b .* g with g symmetric, recentered so sum(delta) = 0, normalized
// to max |delta/b| = 1. Supported only where b is strictly positive.
std::vector<double> random_tangent(const FactorSpec& spec, const std::vector<double>& b,
                                   std::uint64_t seed, int k) {
    const int q = spec.q();
    SplitMix64 rng(mix_stream(seed, 0x7a6, k));
    std::vector<char> live(static_cast<size_t>(q) * q, 0);
    for (int s = 0; s < q; ++s)
        for (int t = 0; t < q; ++t)
            if (spec.supported(s, t) && b[s * q + t] > 0.0) live[s * q + t] = 1;
    std::vector<double> delta(static_cast<size_t>(q) * q, 0.0);
    for (int attempt = 0; attempt < 64; ++attempt) {
        for (int s = 0; s < q; ++s)
            for (int t = s; t < q; ++t) {
                if (!live[s * q + t]) continue;
                double g = 2.0 * rng.next_double() - 1.0;
                delta[s * q + t] = b[s * q + t] * g;
                delta[t * q + s] = b[t * q + s] * g;
            }
        // recenter along b itself: sum(b) = 1, so delta - (sum delta) b is
        // zero-sum and keeps the delta/b ratio bounded
        double total = 0.0;
        for (size_t i = 0; i < delta.size(); ++i)
            if (live[i]) total += delta[i];
        double norm = 0.0;
        for (size_t i = 0; i < delta.size(); ++i) {
            if (!live[i]) continue;
            delta[i] -= total * b[i];
            norm = std::max(norm, std::fabs(delta[i]) / b[i]);
        }
        if (norm > 1e-12) {
            for (auto& v : delta) v /= norm;
            return delta;
        }
    }
    throw CavityError(ErrCode::InternalError, "random_tangent: degenerate support");
}

}  // namespace

double stationarity_check(int d, const FactorSpec& spec, const std::vector<double>& h,
                          int directions, std::uint64_t seed) {
    const int q = spec.q();
    auto b = embed_message(spec, h);
    const double step = 1e-5;
    double worst = 0.0;
    for (int k = 0; k < directions; ++k) {
        auto delta = random_tangent(spec, b.joint, seed, k);
        // keep b +/- step*delta inside the polytope
        double scale = 1.0;
        for (int i = 0; i < q * q; ++i)
            if (delta[i] != 0.0)
                scale = std::min(scale, b.joint[i] / (2.0 * step * std::fabs(delta[i])));
        std::vector<double> plus = b.joint, minus = b.joint;
        for (int i = 0; i < q * q; ++i) {
            plus[i] += step * scale * delta[i];
            minus[i] -= step * scale * delta[i];
        }
        double fp = phi_poly_raw(d, spec, plus, q);
        double fm = phi_poly_raw(d, spec, minus, q);
        double dd = (fp - fm) / (2.0 * step * scale);
        worst = std::max(worst, std::fabs(dd));
    }
    return worst;
}

SecondOrderCheck second_order_check(int d, const FactorSpec& spec, const std::vector<double>& h,
                                    const std::vector<double>& delta) {
    const int q = spec.q();
    if (static_cast<int>(delta.size()) != q * q)
        throw CavityError(ErrCode::InvalidDirection, "delta must be q*q");
    auto b = embed_message(spec, h);
    for (int i = 0; i < q * q; ++i)
        if (std::fabs(delta[i]) > b.joint[i] + 1e-15)
            throw CavityError(ErrCode::InvalidDirection, "|delta| must be <= embed(h)");

    std::vector<double> dbar(q, 0.0), hbar = b.marginal();
    for (int s = 0; s < q; ++s)
        for (int t = 0; t < q; ++t) dbar[s] += delta[s * q + t];
    double a = 0.0;
    for (int s = 0; s < q; ++s)
        if (hbar[s] > 0.0) a += dbar[s] * dbar[s] / hbar[s];
    double e = 0.0;
    for (int i = 0; i < q * q; ++i)
        if (b.joint[i] > 0.0) e += delta[i] * delta[i] / b.joint[i];
    SecondOrderCheck out;
    out.analytic = (d - 1.0) * a - (d / 2.0) * e;

    const double eps = 1e-4;
    std::vector<double> plus = b.joint, minus = b.joint;
    for (int i = 0; i < q * q; ++i) {
        plus[i] += eps * delta[i];
        minus[i] -= eps * delta[i];
    }
    double f0 = phi_poly_raw(d, spec, b.joint, q);
    double fp = phi_poly_raw(d, spec, plus, q);
    double fm = phi_poly_raw(d, spec, minus, q);
    out.numeric = (fp - 2.0 * f0 + fm) / (eps * eps);
    return out;
}

InterpolationFunctionals interpolation_functionals(int d, const FactorSpec& spec,
                                                   const std::vector<double>& h) {
    const int q = spec.q();
    auto b = embed_message(spec, h);
    InterpolationFunctionals out;
    for (int s = 0; s < q; ++s)
        for (int t = 0; t < q; ++t)
            out.a_edge += b.joint[s * q + t] * spec.dxi_dbeta(s, t);
    out.a_edge *= d / 2.0;
    // root belief on T_d: d incoming copies of h
    auto conv = conv_log(spec, h);
    std::vector<double> lw(q);
    for (int s = 0; s < q; ++s) lw[s] = spec.xibar(s) + d * conv[s];
    softmax_inplace(lw);
    for (int s = 0; s < q; ++s) out.a_vertex += lw[s] * spec.dxibar_dB(s);
    return out;
}

namespace {

template <class F>
void chunked_for(long n, int threads, F&& body) {
    if (threads <= 1 || n < 1024) {
        for (long i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    long chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
        long lo = t * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (long i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace

PopDynEstimate phi_popdyn(const OffspringLaw& root_law, const OffspringLaw& offspring_law,
                          const FactorSpec& spec, long pool, int sweeps, std::uint64_t seed,
                          int threads) {
    if (pool < 1000)
        throw CavityError(ErrCode::InvalidParameter, "phi_popdyn: pool must be >= 1e3");
    if (!validate_permissive(spec).permissive)
        throw CavityError(ErrCode::InvalidParameter,
                          "phi_popdyn: spec must be permissive (sweep normalizers can vanish)");
    const int q = spec.q();
    std::vector<double> cur(static_cast<size_t>(pool) * q), nxt(cur.size());
    {
        std::vector<double> h0(q);
        for (int s = 0; s < q; ++s) h0[s] = spec.xibar(s);
        softmax_inplace(h0);
        for (long i = 0; i < pool; ++i)
            std::copy(h0.begin(), h0.end(), cur.begin() + i * q);
    }

    for (int sw = 0; sw < sweeps; ++sw) {
        chunked_for(pool, threads, [&](long i) {
            SplitMix64 rng(mix_stream(seed, 2 * static_cast<std::uint64_t>(sw) + 1, i));
            int k = offspring_law.sample(rng.next_double());
            std::vector<const double*> in(k);
            for (int j = 0; j < k; ++j)
                in[j] = cur.data() + rng.next_below(static_cast<std::uint64_t>(pool)) * q;
            auto h = bp_update(spec, in);
            std::copy(h.begin(), h.end(), nxt.begin() + i * q);
        });
        cur.swap(nxt);
    }

    // Evaluation: one Bethe-term sample per pool slot.
    std::vector<double> samples(pool);
    std::vector<char> ok(pool, 0);
    chunked_for(pool, threads, [&](long j) {
        SplitMix64 rng(mix_stream(seed, 0xE7A1, j));
        int D = root_law.sample(rng.next_double());
        std::vector<const double*> in(D);
        for (int i = 0; i < D; ++i)
            in[i] = cur.data() + rng.next_below(static_cast<std::uint64_t>(pool)) * q;
        // Phi_vx with D incoming messages
        std::vector<double> lw(q), tmp(q);
        for (int s = 0; s < q; ++s) lw[s] = spec.xibar(s);
        for (int i = 0; i < D; ++i) {
            for (int s = 0; s < q; ++s) {
                for (int t = 0; t < q; ++t)
                    tmp[t] = spec.xi(s, t) + (in[i][t] > 0.0 ? std::log(in[i][t]) : neg_inf);
                lw[s] += log_sum_exp(tmp);
            }
        }
        double phi_vx = log_sum_exp(lw);
        // Edge terms: outgoing message excludes the receiving edge.
        double phi_e2 = 0.0;  // sum of Phi^{(oj)}
        std::vector<const double*> others;
        std::vector<double> ew(static_cast<size_t>(q) * q);
        for (int i = 0; i < D && std::isfinite(phi_e2); ++i) {
            others.clear();
            for (int l = 0; l < D; ++l)
                if (l != i) others.push_back(in[l]);
            std::vector<double> hout;
            try {
                hout = bp_update(spec, others);
            } catch (const CavityError&) {
                phi_e2 = neg_inf;
                break;
            }
            for (int s = 0; s < q; ++s)
                for (int t = 0; t < q; ++t)
                    ew[s * q + t] = spec.xi(s, t) +
                                    (hout[s] > 0.0 ? std::log(hout[s]) : neg_inf) +
                                    (in[i][t] > 0.0 ? std::log(in[i][t]) : neg_inf);
            phi_e2 += log_sum_exp(ew);
        }
        double val = phi_vx - 0.5 * phi_e2;
        if (std::isfinite(val)) {
            samples[j] = val;
            ok[j] = 1;
        }
    });

    PopDynEstimate est;
    est.pool = pool;
    est.sweeps = sweeps;
    est.seed = seed;
    // 16 contiguous batches, Kahan-compensated sums so that a collapsed pool
    // yields bit-identical batch means and an exactly vanishing stderr.
    const int nb = 16;
    std::vector<double> bmean;
    double grand_sum = 0.0, grand_c = 0.0;
    long accepted = 0;
    for (int b = 0; b < nb; ++b) {
        long lo = b * pool / nb, hi = (b + 1) * pool / nb;
        double s = 0.0, comp = 0.0;
        long c = 0;
        for (long j = lo; j < hi; ++j) {
            if (!ok[j]) continue;
            double y = samples[j] - comp;
            double t = s + y;
            comp = (t - s) - y;
            s = t;
            ++c;
        }
        if (c > 0) bmean.push_back(s / c);
        double y = s - grand_c;
        double t = grand_sum + y;
        grand_c = (t - grand_sum) - y;
        grand_sum = t;
        accepted += c;
    }
    est.rejected = pool - accepted;
    est.unreliable = est.rejected > pool / 100;
    if (accepted == 0) {
        est.mean = neg_inf;
        est.unreliable = true;
        return est;
    }
    est.mean = grand_sum / accepted;
    double var = 0.0;
    for (double x : bmean) var += (x - est.mean) * (x - est.mean);
    if (bmean.size() > 1) var /= (bmean.size() - 1);
    est.stderr_ = std::sqrt(var / bmean.size());
    return est;
}

}  // namespace cavitylab
