#include "cavitylab/verify.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>

#include "cavitylab/bethe_functional.hpp"
#include "cavitylab/bp_engine.hpp"
#include "cavitylab/exact_oracle.hpp"
#include "cavitylab/factor_spec.hpp"
#include "cavitylab/graph_store.hpp"
#include "cavitylab/phase_regular.hpp"

namespace cavitylab::verify {

namespace {

using Clock = std::chrono::steady_clock;

struct Check {
    bool ok = true;
    std::ostringstream detail;
    double worst = 0.0;

    void expect(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (detail.tellp() > 0) detail << "; ";
            detail << what;
        }
    }
    void track(double err) { worst = std::max(worst, err); }
};

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << x;
    return os.str();
}

FiniteGraph triangle() { return FiniteGraph::from_edges(3, {{0, 1}, {1, 2}, {0, 2}}); }
FiniteGraph four_cycle() { return FiniteGraph::from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}); }
FiniteGraph k4() {
    return FiniteGraph::from_edges(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
}

// ---- criterion 1: tree exactness --------------------------------------

CriterionResult tree_exactness() {
    Check c;
    std::vector<RootedTree> trees;
    for (int i = 0; i < 10; ++i) {
        int d = 2 + i % 3;           // 2..4
        int depth = 1 + i % 4;       // 1..4
        trees.push_back(gen_tree(TreeKind::regular(d), depth, 100 + i));
    }
    for (int i = 0; i < 10; ++i) {
        auto law = OffspringLaw::explicit_pmf({0.15, 0.3, 0.3, 0.15, 0.1});
        trees.push_back(gen_tree(TreeKind::galton_watson(law), 1 + i % 4, 200 + i));
    }
    std::vector<FactorSpec> specs = {
        FactorSpec::make_potts(3, 0.4, 0.0), FactorSpec::make_potts(3, 1.2, 0.3),
        FactorSpec::make_potts(3, 2.5, 0.1), FactorSpec::make_ising(0.3, 0.0),
        FactorSpec::make_ising(1.0, 0.2),    FactorSpec::make_ising(2.0, 0.05),
        FactorSpec::make_hardcore(0.5),      FactorSpec::make_hardcore(1.0),
        FactorSpec::make_hardcore(3.0)};
    for (const auto& tree : trees) {
        auto exact = [&](const FactorSpec& s) {
            return tree_log_z(tree, s, BoundaryCondition::free()).log_z;
        };
        for (const auto& s : specs) {
            BPOptions opts;
            opts.tol = 1e-12;
            opts.max_iter = 4 * tree.depth + 50;
            auto bp = bp_run_graph(tree.graph, s, opts);
            double err = std::fabs(tree.graph.n() * bp.bethe_value - exact(s));
            c.track(err);
            c.expect(err <= 1e-8, "tree " + std::to_string(tree.graph.n()) + " " + s.describe() +
                                      " err=" + fmt(err));
        }
    }
    CriterionResult r{"1 tree exactness (n*bethe == log Z on 20 trees x 9 specs)", c.ok,
                      "max |n*phi_bethe - log Z| = " + fmt(c.worst) +
                          (c.ok ? "" : " :: " + c.detail.str()),
                      0.0};
    return r;
}

// ---- criterion 2: random-cluster identity ------------------------------

CriterionResult random_cluster_identity() {
    Check c;
    std::vector<std::pair<std::string, FiniteGraph>> graphs;
    graphs.emplace_back("triangle", triangle());
    graphs.emplace_back("4-cycle", four_cycle());
    graphs.emplace_back("K4", k4());
    for (int q : {2, 3})
        for (double beta : {0.5, 1.0, 2.0})
            for (auto& [name, g] : graphs) {
                double rc = rc_log_z(g, q, beta);
                double ex = exact_log_z(g, FactorSpec::make_potts(q, beta, 0.0), false).log_z;
                double err = std::fabs(rc - ex);
                c.track(err);
                c.expect(err <= 1e-9, name + " q=" + std::to_string(q) + " err=" + fmt(err));
            }
    return {"2 random-cluster identity (rc_log_z == exact_log_z)", c.ok,
            "max discrepancy = " + fmt(c.worst) + (c.ok ? "" : " :: " + c.detail.str()), 0.0};
}

// ---- criterion 3: closed-form thresholds -------------------------------

CriterionResult closed_form_thresholds() {
    Check c;
    auto close = [&](double got, double want, const std::string& what) {
        double err = std::fabs(got - want);
        c.track(err);
        c.expect(err <= 1e-12, what + " err=" + fmt(err));
    };
    close(hardcore_lambda_c(3), 4.0, "lambda_c(3)");
    close(hardcore_lambda_c(4), 27.0 / 16.0, "lambda_c(4)");
    close(hardcore_lambda_c(6), 3125.0 / 4096.0, "lambda_c(6)");
    close(potts_thresholds(3, 3).beta_plus, std::log(4.0), "beta_plus(3,3)");
    close(potts_thresholds(3, 4).beta_plus, std::log(2.5), "beta_plus(3,4)");
    close(potts_thresholds(2, 3).beta_minus, std::log(3.0), "beta_minus(2,3)");
    close(potts_thresholds(2, 4).beta_minus, std::log(2.0), "beta_minus(2,4)");
    return {"3 closed-form thresholds (lambda_c, beta_plus, beta_minus)", c.ok,
            "max |got - formula| = " + fmt(c.worst) + (c.ok ? "" : " :: " + c.detail.str()), 0.0};
}

// ---- criterion 4: beta = 0 exactness -----------------------------------

CriterionResult beta_zero_exactness() {
    Check c;
    for (int q : {2, 3, 5})
        for (double B : {0.0, 0.5, 2.0}) {
            double want = std::log(std::exp(B) + q - 1.0);
            auto spec = FactorSpec::make_potts(q, 0.0, B);
            auto fp = bp_fixed_point_regular(3, spec, Branch::Free);
            double phi = phi_regular(3, spec, fp.h).phi_total;
            double err = std::fabs(phi - want);
            c.track(err);
            c.expect(err <= 1e-12, "phi_regular q=" + std::to_string(q) + " err=" + fmt(err));
            for (const auto& g : {triangle(), four_cycle()}) {
                double fed = exact_log_z(g, spec, false).free_energy_density;
                double err2 = std::fabs(fed - want);
                c.track(err2);
                c.expect(err2 <= 1e-10, "exact fed q=" + std::to_string(q) + " err=" + fmt(err2));
            }
        }
    return {"4 beta=0 exactness (phi == log(e^B+q-1))", c.ok,
            "max error = " + fmt(c.worst) + (c.ok ? "" : " :: " + c.detail.str()), 0.0};
}

// ---- criterion 5: line-graph Perron-Frobenius --------------------------

CriterionResult line_perron_frobenius() {
    Check c;
    std::vector<FactorSpec> specs = {
        FactorSpec::make_potts(3, 0.7, 0.2), FactorSpec::make_potts(3, 1.4, 0.0),
        FactorSpec::make_potts(4, 0.5, 0.5), FactorSpec::make_ising(0.4, 0.0),
        FactorSpec::make_ising(1.1, 0.3),    FactorSpec::make_ising(2.0, 0.1),
        FactorSpec::make_hardcore(0.5),      FactorSpec::make_hardcore(1.0),
        FactorSpec::make_hardcore(2.5)};
    for (const auto& s : specs) {
        double rate = transfer_matrix_rate(s).log_rho;
        double opt = optimize_local_polytope(2, s, 6, 17).value;
        double err = std::fabs(rate - opt);
        c.track(err);
        c.expect(err <= 1e-6, s.describe() + " err=" + fmt(err));
    }
    double golden = std::fabs(transfer_matrix_rate(FactorSpec::make_hardcore(1.0)).log_rho -
                              std::log((1.0 + std::sqrt(5.0)) / 2.0));
    c.expect(golden <= 1e-9, "hardcore lam=1 golden-ratio err=" + fmt(golden));
    return {"5 line Perron-Frobenius (optimize d=2 == transfer matrix)", c.ok,
            "max |opt - log rho| = " + fmt(c.worst) + ", golden err = " + fmt(golden) +
                (c.ok ? "" : " :: " + c.detail.str()),
            0.0};
}

// ---- criterion 6: stationarity and second order ------------------------

CriterionResult stationarity_second_order() {
    Check c;
    {
        auto spec = FactorSpec::make_potts(3, 1.2, 0.1);
        auto fp = bp_fixed_point_regular(3, spec, Branch::Free);
        double s = stationarity_check(3, spec, fp.h, 32, 4242);
        c.track(s);
        c.expect(s <= 1e-6, "potts stationarity = " + fmt(s));
    }
    {
        auto spec = FactorSpec::make_ising(0.8, 0.15);
        auto fp = bp_fixed_point_regular(3, spec, Branch::Ordered);
        double s = stationarity_check(3, spec, fp.h, 32, 77);
        c.track(s);
        c.expect(s <= 1e-6, "ising stationarity = " + fmt(s));
    }
    // analytic vs numeric second derivative
    double worst_rel = 0.0;
    {
        auto spec = FactorSpec::make_ising(0.6, 0.1);
        auto fp = bp_fixed_point_regular(3, spec, Branch::Free);
        auto b = embed_message(spec, fp.h);
        // symmetric zero-sum direction scaled inside |delta| <= b
        std::vector<double> delta = {1.0, -0.5, -0.5, 0.0};
        double scale = 1e9;
        for (int i = 0; i < 4; ++i)
            if (delta[i] != 0.0) scale = std::min(scale, 0.5 * b.joint[i] / std::fabs(delta[i]));
        for (auto& v : delta) v *= scale;
        auto so = second_order_check(3, spec, fp.h, delta);
        double rel = std::fabs(so.analytic - so.numeric) / (1.0 + std::fabs(so.analytic));
        worst_rel = std::max(worst_rel, rel);
        c.expect(rel <= 1e-4, "second-order mismatch rel=" + fmt(rel));
    }
    // sign flip of the uniform Ising fixed point across the threshold
    double a03 = 0.0, a15 = 0.0;
    for (double beta : {0.3, 1.5}) {
        auto spec = FactorSpec::make_ising(beta, 0.0);
        std::vector<double> h = {0.5, 0.5};  // uniform fixed point at B=0
        auto b = embed_message(spec, h);
        double m = 0.25 * std::min(b.joint[0], b.joint[3]);
        std::vector<double> delta = {m, 0.0, 0.0, -m};  // magnetization direction
        auto so = second_order_check(3, spec, h, delta);
        double rel = std::fabs(so.analytic - so.numeric) / (1.0 + std::fabs(so.analytic));
        worst_rel = std::max(worst_rel, rel);
        c.expect(rel <= 1e-4, "uniform ising rel=" + fmt(rel));
        (beta < 1.0 ? a03 : a15) = so.analytic;
    }
    c.expect(a03 < 0.0, "uniform ising beta=0.3 should be a local max (analytic < 0)");
    c.expect(a15 > 0.0, "uniform ising beta=1.5 should be unstable (analytic > 0)");
    return {"6 stationarity & second order at embedded fixed points", c.ok,
            "max directional derivative = " + fmt(c.worst) +
                ", worst 2nd-order rel err = " + fmt(worst_rel) +
                (c.ok ? "" : " :: " + c.detail.str()),
            0.0};
}

// ---- criterion 7: integral identity ------------------------------------

CriterionResult integral_identity() {
    Check c;
    struct Cfg {
        int q, d;
        double B, b0, b1;
    };
    std::vector<Cfg> cfgs = {{3, 3, 0.2, 0.0, 0.5},
                             {3, 3, 0.0, 0.0, 1.0},
                             {4, 3, 0.3, 0.0, 0.6},
                             {3, 4, 0.1, 0.0, 0.5},
                             {5, 5, 0.4, 0.0, 0.4}};
    for (const auto& cfg : cfgs) {
        auto a_edge_at = [&](double beta) {
            auto fps = potts_fixed_points({cfg.q, cfg.d, beta, cfg.B});
            auto spec = FactorSpec::make_potts(cfg.q, beta, cfg.B);
            auto h = potts_message_from_r(cfg.q, fps.r_free);
            return interpolation_functionals(cfg.d, spec, h).a_edge;
        };
        auto phi_at = [&](double beta) {
            auto fps = potts_fixed_points({cfg.q, cfg.d, beta, cfg.B});
            auto spec = FactorSpec::make_potts(cfg.q, beta, cfg.B);
            return phi_regular(cfg.d, spec, potts_message_from_r(cfg.q, fps.r_free)).phi_total;
        };
        double integral = simpson(a_edge_at, cfg.b0, cfg.b1, 256);
        double diff = phi_at(cfg.b1) - phi_at(cfg.b0);
        double err = std::fabs(integral - diff);
        c.track(err);
        c.expect(err <= 1e-6, "q=" + std::to_string(cfg.q) + ",d=" + std::to_string(cfg.d) +
                                  " err=" + fmt(err));
    }
    return {"7 integral identity (Simpson of a_edge == Phi difference)", c.ok,
            "max |integral - dPhi| = " + fmt(c.worst) + (c.ok ? "" : " :: " + c.detail.str()),
            0.0};
}

// ---- criteria 8 & 9: region grid and bounds sandwich -------------------

CriterionResult region_consistency() {
    Check c;
    const int q = 3, d = 3;
    auto rc0 = potts_region(q, d, 0.0);
    const double B_cap = rc0.B_cap;
    int mismatches = 0;
    for (int i = 0; i < 40; ++i) {
        double beta = 0.1 + (2.6 - 0.1) * i / 39.0;
        for (int j = 0; j < 40; ++j) {
            double B = B_cap * 1.15 * j / 39.0;
            auto fps = potts_fixed_points({q, d, beta, B});
            bool disagree = fps.r_ordered - fps.r_free > 1e-8;
            bool member = potts_in_R_ne(q, d, beta, B);
            if (member != disagree) ++mismatches;
        }
    }
    c.expect(mismatches == 0, std::to_string(mismatches) + " membership mismatches");
    // strict monotonicity of both curves and meeting at B_cap
    double prev_f = 1e300, prev_p = 1e300;
    bool mono = true;
    for (int j = 0; j <= 20; ++j) {
        double B = B_cap * 0.9999 * j / 20.0;
        auto rc = potts_region(q, d, B);
        if (rc.beta_f_of_B >= prev_f || rc.beta_plus_of_B >= prev_p) mono = false;
        prev_f = rc.beta_f_of_B;
        prev_p = rc.beta_plus_of_B;
    }
    c.expect(mono, "curves not strictly decreasing");
    auto rce = potts_region(q, d, B_cap * (1.0 - 1e-9));
    double meet = std::fabs(rce.beta_f_of_B - rce.beta_plus_of_B);
    c.expect(meet <= 1e-6, "curves meet gap = " + fmt(meet));
    return {"8 region consistency (curves vs fixed-point disagreement, 40x40)", c.ok,
            "mismatches = " + std::to_string(mismatches) + ", meet gap = " + fmt(meet) +
                (c.ok ? "" : " :: " + c.detail.str()),
            0.0};
}

CriterionResult bounds_sandwich() {
    Check c;
    const int q = 3, d = 3;
    double B_cap = potts_region(q, d, 0.0).B_cap;
    double worst_out = 0.0;
    for (int i = 0; i < 40; ++i) {
        double beta = 0.1 + (2.6 - 0.1) * i / 39.0;
        for (int j = 0; j < 40; ++j) {
            double B = B_cap * 1.15 * j / 39.0;
            auto rep = potts_free_energy_bounds(q, d, beta, B);
            c.expect(rep.lower <= rep.upper + 1e-12,
                     "lower > upper at beta=" + std::to_string(beta) + " B=" + std::to_string(B));
            if (rep.region == PhaseRegion::Unique)
                worst_out = std::max(worst_out, std::fabs(rep.upper - rep.lower));
        }
    }
    c.expect(worst_out <= 1e-9, "outside R_ne equality violated: " + fmt(worst_out));
    auto rep = potts_free_energy_bounds(3, 3, 1.45, 0.0);
    double gap = rep.upper - rep.lower;
    c.expect(gap > 1e-4, "gap at (3,3,0,1.45) = " + fmt(gap));
    return {"9 bounds sandwich (lower <= upper; tight outside; gap inside)", c.ok,
            "outside max |up-lo| = " + fmt(worst_out) + ", gap at beta=1.45: " + fmt(gap) +
                (c.ok ? "" : " :: " + c.detail.str()),
            0.0};
}

// ---- criterion 10: monotonicity suite ----------------------------------

CriterionResult monotonicity_suite() {
    Check c;
    auto tree = gen_tree(TreeKind::regular(3), 3, 1);
    auto root_mass = [&](const FactorSpec& spec, const BoundaryCondition& bc) {
        return tree_log_z(tree, spec, bc).vertex_marginals[0][0];
    };
    auto run_grid = [&](const std::string& name, std::function<FactorSpec(double)> mk,
                        double lo, double hi) {
        for (auto bc : {BoundaryCondition::free(), BoundaryCondition::fixed(0, 3)}) {
            double prev = -1.0;
            for (int i = 0; i < 10; ++i) {
                double p = lo + (hi - lo) * i / 9.0;
                double m = root_mass(mk(p), bc);
                c.expect(m >= prev - 1e-12, name + " non-monotone at " + std::to_string(p));
                prev = m;
            }
        }
    };
    run_grid("potts beta", [](double b) { return FactorSpec::make_potts(3, b, 0.2); }, 0.0, 2.5);
    run_grid("potts B", [](double B) { return FactorSpec::make_potts(3, 0.8, B); }, 0.0, 2.0);
    run_grid("ising beta", [](double b) { return FactorSpec::make_ising(b, 0.1); }, 0.0, 2.0);
    run_grid("ising B", [](double B) { return FactorSpec::make_ising(0.6, B); }, 0.0, 1.5);
    // hard-core double-map parity monotonicity over t = 1..6
    auto spec = FactorSpec::make_hardcore(1.0);
    double prev1 = -1.0, prev0 = 2.0;
    for (int t = 1; t <= 6; ++t) {
        auto tt = gen_tree(TreeKind::regular(3), 2 * t - 1, 1);
        double u1 = bp_tree_boundary(tt, spec, BoundaryCondition::fixed(1, 3))[0];
        double u0 = bp_tree_boundary(tt, spec, BoundaryCondition::fixed(0, 3))[0];
        c.expect(u1 >= prev1 - 1e-13, "hardcore 1-boundary not increasing at t=" + std::to_string(t));
        c.expect(u0 <= prev0 + 1e-13, "hardcore 0-boundary not decreasing at t=" + std::to_string(t));
        prev1 = u1;
        prev0 = u0;
    }
    return {"10 monotonicity (DP marginals in beta/B; hardcore parity in t)", c.ok,
            c.ok ? "all grids monotone" : c.detail.str(), 0.0};
}

// ---- criterion 11: finite-n trend --------------------------------------

CriterionResult finite_n_trend() {
    Check c;
    auto spec = FactorSpec::make_ising(0.2, 0.1);
    double phi = ising_phase(3, 0.2, 0.1).phi_plus;
    std::vector<double> gaps;
    for (int n : {8, 12, 16}) {
        double acc = 0.0;
        for (int s = 0; s < 20; ++s) {
            auto g = gen_random_regular(n, 3, 1000 + s);
            acc += exact_log_z(g, spec, false).free_energy_density;
        }
        gaps.push_back(std::fabs(acc / 20.0 - phi));
    }
    c.expect(gaps[1] < gaps[0] && gaps[2] < gaps[1],
             "gaps not decreasing: " + fmt(gaps[0]) + ", " + fmt(gaps[1]) + ", " + fmt(gaps[2]));
    c.expect(gaps[2] < 0.05, "final gap = " + fmt(gaps[2]));
    return {"11 finite-n trend toward the Bethe value (ising, d=3)", c.ok,
            "mean-fed gaps at n=8,12,16: " + fmt(gaps[0]) + ", " + fmt(gaps[1]) + ", " +
                fmt(gaps[2]) + (c.ok ? "" : " :: " + c.detail.str()),
            0.0};
}

// ---- criterion 12: population-dynamics degeneracy ----------------------

CriterionResult popdyn_degeneracy(int threads) {
    Check c;
    auto det = OffspringLaw::deterministic(3);
    auto off = OffspringLaw::deterministic(2);
    for (const auto& spec :
         {FactorSpec::make_ising(0.3, 0.2), FactorSpec::make_hardcore(1.0)}) {
        auto est = phi_popdyn(det, off, spec, 100000, 300, 7, threads);
        auto fp = bp_fixed_point_regular(3, spec, Branch::Free, 1e-15, 1000000);
        double target = phi_regular(3, spec, fp.h).phi_total;
        double diff = std::fabs(est.mean - target);
        c.track(diff);
        c.expect(diff <= std::max(3.0 * est.stderr_, 1e-12),
                 spec.describe() + " |mean - phi| = " + fmt(diff) +
                     " vs 3se = " + fmt(3.0 * est.stderr_));
        c.expect(est.stderr_ < 1e-3, spec.describe() + " stderr = " + fmt(est.stderr_));
    }
    return {"12 popdyn degeneracy (deterministic laws match phi_regular)", c.ok,
            "max |mean - phi_regular| = " + fmt(c.worst) + (c.ok ? "" : " :: " + c.detail.str()),
            0.0};
}

CriterionResult timed(std::function<CriterionResult()> body, double budget_seconds) {
    auto t0 = Clock::now();
    CriterionResult r = body();
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    if (budget_seconds > 0.0 && r.seconds > budget_seconds) {
        r.pass = false;
        r.detail += " [runtime " + std::to_string(r.seconds) + "s exceeds " +
                    std::to_string(budget_seconds) + "s]";
    }
    return r;
}

}  // namespace

std::vector<CriterionResult> run_all(int threads) {
    std::vector<CriterionResult> out;
    out.push_back(timed(tree_exactness, 5.0));
    out.push_back(timed(random_cluster_identity, 1.0));
    out.push_back(timed(closed_form_thresholds, 0.0));
    out.push_back(timed(beta_zero_exactness, 0.0));
    out.push_back(timed(line_perron_frobenius, 0.0));
    out.push_back(timed(stationarity_second_order, 0.0));
    out.push_back(timed(integral_identity, 0.0));
    out.push_back(timed(region_consistency, 0.0));
    out.push_back(timed(bounds_sandwich, 0.0));
    out.push_back(timed(monotonicity_suite, 0.0));
    out.push_back(timed(finite_n_trend, 120.0));
    out.push_back(timed([threads] { return popdyn_degeneracy(threads); }, 60.0));
    return out;
}

}  // namespace cavitylab::verify
