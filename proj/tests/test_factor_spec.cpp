#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cavitylab/exact_oracle.hpp"
#include "cavitylab/factor_spec.hpp"
#include "cavitylab/graph_store.hpp"

using namespace cavitylab;

namespace {

// Independent brute-force enumerator used as the oracle for this file; kept
// deliberately separate from exact_oracle.
double brute_log_z(const FiniteGraph& g, const FactorSpec& spec) {
    int n = g.n(), q = spec.q();
    long total = 1;
    for (int i = 0; i < n; ++i) total *= q;
    double best = -1e300;
    std::vector<double> lws;
    std::vector<int> sigma(n);
    for (long c = 0; c < total; ++c) {
        long x = c;
        for (int i = 0; i < n; ++i) {
            sigma[i] = static_cast<int>(x % q);
            x /= q;
        }
        double lw = 0.0;
        bool dead = false;
        for (auto [u, v] : g.edges()) {
            if (!spec.supported(sigma[u], sigma[v])) {
                dead = true;
                break;
            }
            lw += spec.xi(sigma[u], sigma[v]);
        }
        if (dead) continue;
        for (int i = 0; i < n; ++i) lw += spec.xibar(sigma[i]);
        lws.push_back(lw);
        best = std::max(best, lw);
    }
    double s = 0.0;
    for (double lw : lws) s += std::exp(lw - best);
    return best + std::log(s);
}

FiniteGraph triangle() { return FiniteGraph::from_edges(3, {{0, 1}, {1, 2}, {0, 2}}); }

}  // namespace

TEST_CASE("potts at beta=0 is the independent-spin spec") {
    auto s = FactorSpec::make_potts(3, 0.0, 0.0);
    for (int a = 0; a < 3; ++a) {
        CHECK(s.psibar(a) == 1.0);
        for (int b = 0; b < 3; ++b) CHECK(s.psi(a, b) == 1.0);
    }
}

TEST_CASE("potts diagonal weights are e^beta") {
    auto s = FactorSpec::make_potts(3, 1.0, 0.0);
    CHECK(s.psi(0, 0) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
    CHECK(s.psi(0, 1) == 1.0);
    CHECK(s.psi(2, 2) == doctest::Approx(std::exp(1.0)).epsilon(1e-15));
}

TEST_CASE("potts rejects q < 2") {
    CHECK_THROWS_AS(FactorSpec::make_potts(1, 1.0, 0.0), CavityError);
}

TEST_CASE("ising weights and single-edge partition function") {
    auto s = FactorSpec::make_ising(1.0, 0.0);
    CHECK(s.psi(0, 0) == doctest::Approx(std::exp(1.0)));
    CHECK(s.psi(0, 1) == doctest::Approx(std::exp(-1.0)));
    // single edge: Z = 2 e^beta + 2 e^{-beta}, enumerated over 4 configurations
    auto g = FiniteGraph::from_edges(2, {{0, 1}});
    for (double beta : {0.3, 1.0, 2.2}) {
        double want = std::log(2.0 * std::exp(beta) + 2.0 * std::exp(-beta));
        CHECK(brute_log_z(g, FactorSpec::make_ising(beta, 0.0)) ==
              doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("potts(q=2) / ising correspondence on the triangle") {
    // log Z_potts(beta,B) = log Z_ising(beta/2,B/2) + beta|E|/2 + B n/2
    auto g = triangle();
    for (double beta : {0.4, 1.3})
        for (double B : {0.0, 0.7}) {
            double zp = brute_log_z(g, FactorSpec::make_potts(2, beta, B));
            double zi = brute_log_z(g, FactorSpec::make_ising(beta / 2, B / 2));
            CHECK(zp - zi == doctest::Approx(beta * 3 / 2 + B * 3 / 2).epsilon(1e-10));
        }
}

TEST_CASE("hardcore support and small-graph counts") {
    auto s = FactorSpec::make_hardcore(1.0);
    CHECK(s.psi(1, 1) == 0.0);
    CHECK(s.xi(1, 1) == neg_inf);
    CHECK(s.psibar(1) == 1.0);
    // triangle: independent sets are {} and the three singletons => Z = 4
    CHECK(brute_log_z(triangle(), s) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    // 3-leaf star: Z = 9 and P(center occupied) = 1/9
    auto star = FiniteGraph::from_edges(4, {{0, 1}, {0, 2}, {0, 3}});
    CHECK(brute_log_z(star, s) == doctest::Approx(std::log(9.0)).epsilon(1e-12));
    auto res = exact_log_z(star, s, true);
    CHECK(res.vertex_marginals[0][1] == doctest::Approx(1.0 / 9.0).epsilon(1e-10));
    CHECK_THROWS_AS(FactorSpec::make_hardcore(0.0), CavityError);
}

TEST_CASE("validate_permissive") {
    auto rep = validate_permissive(FactorSpec::make_hardcore(1.0));
    CHECK(rep.permissive);
    CHECK(rep.permitted_state == 0);

    rep = validate_permissive(FactorSpec::make_potts(3, 2.0, 0.0));
    CHECK(rep.permissive);
    CHECK(rep.permitted_state == 0);

    // one full zero row+column kills every candidate column
    auto raw = FactorSpec::make_raw({{0.0, 0.0, 0.0}, {0.0, 1.0, 1.0}, {0.0, 1.0, 1.0}},
                                    {1.0, 1.0, 1.0});
    rep = validate_permissive(raw);
    CHECK_FALSE(rep.permissive);
    CHECK_FALSE(rep.permitted_state.has_value());
    REQUIRE_FALSE(rep.failing_rows.empty());
    CHECK(rep.failing_rows[0] == 0);
}

TEST_CASE("regeneration reproduces weights bit-exactly") {
    auto specs = {FactorSpec::make_potts(4, 1.234567, -0.25), FactorSpec::make_ising(0.77, 0.11),
                  FactorSpec::make_hardcore(2.5)};
    for (const auto& s : specs) {
        auto r = s.regenerate();
        REQUIRE(r.q() == s.q());
        for (int a = 0; a < s.q(); ++a) {
            CHECK(r.xibar(a) == s.xibar(a));
            for (int b = 0; b < s.q(); ++b) CHECK(r.xi(a, b) == s.xi(a, b));
        }
    }
}

TEST_CASE("potts symmetry is exact") {
    auto s = FactorSpec::make_potts(5, 1.7, 0.4);
    for (int a = 0; a < 5; ++a)
        for (int b = 0; b < 5; ++b) CHECK(s.xi(a, b) == s.xi(b, a));
}

TEST_CASE("spec json round trip") {
    auto s = spec_from_json(R"({"model":"potts","q":3,"beta":0.5,"B":0.25})");
    CHECK(s.q() == 3);
    CHECK(s.beta() == 0.5);
    auto hc = spec_from_json(R"({"model":"hardcore","lambda":2.0})");
    CHECK(hc.psi(1, 1) == 0.0);
    auto raw = spec_from_json(R"({"model":"raw","psi":[[1.0,2.0],[2.0,0.0]],"psibar":[1.0,3.0]})");
    CHECK(raw.psi(0, 1) == doctest::Approx(2.0));
    CHECK(raw.psi(1, 1) == 0.0);
    CHECK_THROWS_AS(spec_from_json("{"), CavityError);
    CHECK_THROWS_AS(spec_from_json(R"({"model":"nope"})"), CavityError);
}
