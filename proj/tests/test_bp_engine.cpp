#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cavitylab/bp_engine.hpp"
#include "cavitylab/exact_oracle.hpp"
#include "cavitylab/graph_store.hpp"

using namespace cavitylab;

TEST_CASE("beta=0 converges in one sweep to psibar-proportional messages") {
    auto g = gen_random_regular(8, 3, 3);
    auto spec = FactorSpec::make_potts(3, 0.0, 0.7);
    BPOptions opts;
    opts.tol = 1e-14;
    auto res = bp_run_graph(g, spec, opts);
    CHECK(res.converged);
    CHECK(res.iterations <= 2);
    double w0 = std::exp(0.7) / (std::exp(0.7) + 2.0);
    for (int de = 0; de < 2 * g.m(); ++de)
        CHECK(res.messages.at(de)[0] == doctest::Approx(w0).epsilon(1e-12));
    for (const auto& b : res.vertex_beliefs) CHECK(b[0] == doctest::Approx(w0).epsilon(1e-12));
}

TEST_CASE("messages stay normalized") {
    auto g = gen_random_regular(10, 3, 9);
    auto spec = FactorSpec::make_ising(0.9, 0.1);
    BPOptions opts;
    opts.init = BPInit::random(5);
    auto res = bp_run_graph(g, spec, opts);
    for (int de = 0; de < 2 * g.m(); ++de) {
        double s = 0.0;
        for (int k = 0; k < 2; ++k) {
            CHECK(res.messages.at(de)[k] >= 0.0);
            s += res.messages.at(de)[k];
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("tree exactness: BP reproduces DP marginals and log Z") {
    // 20 seeded trees, all three families
    int checked = 0;
    for (int seed = 1; seed <= 20; ++seed) {
        TreeKind kind = seed % 2 == 0
                            ? TreeKind::regular(2 + seed % 3)
                            : TreeKind::galton_watson(
                                  OffspringLaw::explicit_pmf({0.2, 0.3, 0.3, 0.1, 0.1}));
        auto tree = gen_tree(kind, 1 + seed % 4, seed);
        for (const auto& spec :
             {FactorSpec::make_potts(3, 1.1, 0.2), FactorSpec::make_ising(0.8, 0.1),
              FactorSpec::make_hardcore(1.2)}) {
            BPOptions opts;
            opts.tol = 1e-12;
            opts.max_iter = 500;
            auto bp = bp_run_graph(tree.graph, spec, opts);
            auto dp = tree_log_z(tree, spec, BoundaryCondition::free());
            REQUIRE(bp.converged);
            CHECK(std::fabs(tree.graph.n() * bp.bethe_value - dp.log_z) <= 1e-8);
            for (int v = 0; v < tree.graph.n(); ++v)
                for (int s = 0; s < spec.q(); ++s)
                    CHECK(std::fabs(bp.vertex_beliefs[v][s] - dp.vertex_marginals[v][s]) <= 1e-9);
            ++checked;
        }
    }
    CHECK(checked == 60);
}

TEST_CASE("loopy BP on the 4-cycle is close to exact") {
    auto g = FiniteGraph::from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}});
    auto spec = FactorSpec::make_ising(0.2, 0.1);
    BPOptions opts;
    opts.tol = 1e-12;
    auto bp = bp_run_graph(g, spec, opts);
    auto ex = exact_log_z(g, spec, true);
    REQUIRE(bp.converged);
    for (int v = 0; v < 4; ++v)
        for (int s = 0; s < 2; ++s)
            CHECK(std::fabs(bp.vertex_beliefs[v][s] - ex.vertex_marginals[v][s]) < 2e-3);
}

TEST_CASE("pair beliefs have consistent marginals and support") {
    auto g = gen_random_regular(8, 3, 4);
    auto spec = FactorSpec::make_hardcore(0.8);
    BPOptions opts;
    opts.tol = 1e-12;
    auto res = bp_run_graph(g, spec, opts);
    REQUIRE(res.converged);
    double tol = 10 * res.residual + 1e-10;
    for (int e = 0; e < g.m(); ++e) {
        auto [u, v] = g.edges()[e];
        // support: pair belief vanishes exactly where psi does
        CHECK(res.pair_beliefs[e][3] == 0.0);  // (1,1) forbidden
        for (int a = 0; a < 2; ++a) {
            double row = res.pair_beliefs[e][a * 2] + res.pair_beliefs[e][a * 2 + 1];
            CHECK(std::fabs(row - res.vertex_beliefs[u][a]) <= tol);
            double col = res.pair_beliefs[e][a] + res.pair_beliefs[e][2 + a];
            CHECK(std::fabs(col - res.vertex_beliefs[v][a]) <= tol);
        }
    }
}

TEST_CASE("bp_tree_boundary equals the DP root marginal") {
    for (int depth : {1, 2, 3}) {
        auto tree = gen_tree(TreeKind::regular(3), depth, 1);
        for (const auto& spec :
             {FactorSpec::make_potts(3, 0.9, 0.1), FactorSpec::make_hardcore(1.4)}) {
            for (auto bc : {BoundaryCondition::free(), BoundaryCondition::fixed(0, 3)}) {
                auto root = bp_tree_boundary(tree, spec, bc);
                auto dp = tree_log_z(tree, spec, bc);
                for (int s = 0; s < spec.q(); ++s)
                    CHECK(std::fabs(root[s] - dp.vertex_marginals[tree.root][s]) <= 1e-12);
            }
        }
    }
}

TEST_CASE("free boundary root marginal is uniform for potts at B=0") {
    auto tree = gen_tree(TreeKind::regular(3), 2, 1);
    auto root = bp_tree_boundary(tree, FactorSpec::make_potts(3, 1.2, 0.0),
                                 BoundaryCondition::free());
    for (int s = 0; s < 3; ++s) CHECK(root[s] == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("hardcore parity-ordered boundary marginals") {
    auto spec = FactorSpec::make_hardcore(1.0);
    double prev1 = -1.0, prev0 = 2.0;
    for (int t = 1; t <= 6; ++t) {
        auto tree = gen_tree(TreeKind::regular(3), 2 * t - 1, 1);
        double u1 = bp_tree_boundary(tree, spec, BoundaryCondition::fixed(1, 3))[0];
        double u0 = bp_tree_boundary(tree, spec, BoundaryCondition::fixed(0, 3))[0];
        CHECK(u1 >= prev1 - 1e-13);
        CHECK(u0 <= prev0 + 1e-13);
        CHECK(u0 >= u1 - 1e-13);
        prev1 = u1;
        prev0 = u0;
    }
}

TEST_CASE("ising plus boundary dominates free boundary magnetization") {
    auto tree = gen_tree(TreeKind::regular(3), 3, 1);
    auto spec = FactorSpec::make_ising(1.0, 0.2);
    auto plus = bp_tree_boundary(tree, spec, BoundaryCondition::fixed(0, 3));
    auto free = bp_tree_boundary(tree, spec, BoundaryCondition::free());
    CHECK(plus[0] - plus[1] >= free[0] - free[1] - 1e-13);
}

TEST_CASE("regular fixed point: potts beta=0") {
    auto spec = FactorSpec::make_potts(3, 0.0, 0.6);
    auto fp = bp_fixed_point_regular(3, spec, Branch::Free);
    REQUIRE(fp.converged);
    CHECK(fp.h[0] == doctest::Approx(std::exp(0.6) / (std::exp(0.6) + 2)).epsilon(1e-12));
}

TEST_CASE("regular fixed point: hardcore lam=1, d=3 solves u^3+u=1") {
    // independent scalar oracle: bisection on u(1+u^2) - 1
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (mid * (1 + mid * mid) < 1.0 ? lo : hi) = mid;
    }
    double u_star = 0.5 * (lo + hi);
    auto spec = FactorSpec::make_hardcore(1.0);
    auto f = bp_fixed_point_regular(3, spec, Branch::Free);
    auto o = bp_fixed_point_regular(3, spec, Branch::Ordered);
    CHECK(std::fabs(f.h[0] - u_star) < 1e-12);
    CHECK(std::fabs(o.h[0] - u_star) < 1e-12);  // lam below lambda_c: branches agree
    CHECK(f.residual <= 1e-12);
}

TEST_CASE("regular fixed point: potts branches disagree past beta_plus") {
    auto spec = FactorSpec::make_potts(3, 1.6, 0.0);  // beta_plus = log 4 ~ 1.386
    auto f = bp_fixed_point_regular(3, spec, Branch::Free);
    auto o = bp_fixed_point_regular(3, spec, Branch::Ordered);
    CHECK(f.h[0] == doctest::Approx(1.0 / 3).epsilon(1e-12));  // stays uniform
    CHECK(o.h[0] > 1.0 / 3 + 0.1);
}

TEST_CASE("ising free/plus magnetization gap shrinks in t at B > 0") {
    auto spec = FactorSpec::make_ising(1.5, 0.1);
    double prev_gap = 1e300;
    std::vector<double> hf = {0.5, 0.5}, hp = {1.0, 0.0};
    for (int t = 1; t <= 60; ++t) {
        hf = bp_map_regular(spec, 3, hf);
        hp = bp_map_regular(spec, 3, hp);
        double gap = std::fabs((hp[0] - hp[1]) - (hf[0] - hf[1]));
        CHECK(gap <= prev_gap + 1e-14);
        prev_gap = gap;
    }
    CHECK(prev_gap < 1e-8);
}

TEST_CASE("degenerate update is reported") {
    // hard anti-ferromagnetic constraint on K4: a sequential sweep from the
    // all-0 point mass mixes delta_0 and delta_1 messages into one update,
    // which kills every state.
    auto raw = FactorSpec::make_raw({{0.0, 1.0}, {1.0, 0.0}}, {1.0, 1.0});
    auto g = FiniteGraph::from_edges(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
    BPOptions opts;
    opts.init = BPInit::fixed(0);
    opts.schedule = Schedule::Sequential;
    bool threw = false;
    try {
        bp_run_graph(g, raw, opts);
    } catch (const CavityError& e) {
        threw = e.code() == ErrCode::DegenerateUpdate;
    }
    CHECK(threw);
}

TEST_CASE("degree-0 vertex belief is psibar") {
    auto g = FiniteGraph::from_edges(3, {{0, 1}});  // vertex 2 isolated
    auto spec = FactorSpec::make_potts(2, 0.5, 0.9);
    BPOptions opts;
    auto res = bp_run_graph(g, spec, opts);
    double w = std::exp(0.9) / (std::exp(0.9) + 1.0);
    CHECK(res.vertex_beliefs[2][0] == doctest::Approx(w).epsilon(1e-12));
}
