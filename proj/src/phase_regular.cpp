#include "cavitylab/phase_regular.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cavitylab/bethe_functional.hpp"

namespace cavitylab {

double PottsRecursion::f(double r) const {
    if (r > 500.0) {
        double num = beta + std::log1p((q - 1.0) * std::exp(-beta - r));
        double den = std::log1p((std::exp(beta) + q - 2.0) * std::exp(-r));
        return B + (d - 1) * (num - den);
    }
    if (r < -500.0) {
        double num = std::log(q - 1.0) + std::log1p(std::exp(beta + r) / (q - 1.0));
        double c = std::exp(beta) + q - 2.0;
        double den = std::log(c) + std::log1p(std::exp(r) / c);
        return B + (d - 1) * (num - den);
    }
    return B + (d - 1) * std::log1p(std::expm1(r) * std::expm1(beta) /
                                    (std::exp(r) + std::exp(beta) + q - 2.0));
}

double PottsRecursion::fprime(double r) const {
    // (d-1) e^r (e^b-1)(q+e^b-1) / ((q+e^r+e^b-2)(q+e^{r+b}-1)), in logs for
    // large |r|.
    double eb = std::exp(beta);
    if (std::fabs(r) < 500.0) {
        double er = std::exp(r);
        return (d - 1) * er * (eb - 1.0) * (q + eb - 1.0) /
               ((q + er + eb - 2.0) * (q + er * eb - 1.0));
    }
    if (beta == 0.0) return 0.0;
    double lnum = std::log(d - 1.0) + r + std::log(eb - 1.0) + std::log(q + eb - 1.0);
    double lden = log_exp_plus(r, q + eb - 2.0) + log_exp_plus(r + beta, q - 1.0);
    return std::exp(lnum - lden);
}

double PottsRecursion::alpha() const { return (q - 1.0) * (1.0 + (q - 2.0) * std::exp(-beta)); }

double PottsRecursion::gamma() const {
    double eb = std::exp(beta);
    return eb + q - 2.0 - (d / 2.0) * (1.0 - std::exp(-beta)) * (eb + q - 1.0);
}

std::optional<std::pair<double, double>> PottsRecursion::rho_pm() const {
    double al = alpha(), ga = gamma();
    if (!(ga < -std::sqrt(al))) return std::nullopt;
    double s = std::sqrt(ga * ga - al);
    return std::make_pair(std::log(-ga - s), std::log(-ga + s));
}

namespace {

double newton_polish(const PottsRecursion& rec, double r0) {
    double r = r0;
    for (int it = 0; it < 200; ++it) {
        double g = rec.f(r) - r;
        if (std::fabs(g) < 1e-16) break;
        double gp = rec.fprime(r) - 1.0;
        if (gp == 0.0) break;
        double step = g / gp;
        if (!std::isfinite(step) || std::fabs(step) > 1.0) break;  // stay local
        r -= step;
    }
    return r;
}

double iterate_from(const PottsRecursion& rec, double r0, bool increasing) {
    double r = r0;
    for (int it = 0; it < 100000; ++it) {
        double rn = rec.f(r);
        // monotone by construction; guard against numerical inversion
        if (increasing ? rn < r - 1e-12 : rn > r + 1e-12)
            throw CavityError(ErrCode::InternalError, "potts iteration not monotone");
        if (std::fabs(rn - r) < 1e-16) return rn;
        r = rn;
    }
    return r;
}

}  // namespace

PottsFixedPoints potts_fixed_points(const PottsRecursion& rec) {
    if (rec.beta < 0.0 || rec.B < 0.0)
        throw CavityError(ErrCode::InvalidParameter, "potts_fixed_points: beta, B >= 0 required");
    PottsFixedPoints out;
    out.r_free = newton_polish(rec, iterate_from(rec, 0.0, true));
    double top = rec.B + (rec.d - 1) * rec.beta + 1.0;
    out.r_ordered = newton_polish(rec, iterate_from(rec, top, false));
    if (out.r_ordered - out.r_free > 1e-10) {
        // middle fixed point: g = f(r)-r changes sign from - to + inside
        double lo = out.r_free, hi = out.r_ordered;
        // find a strictly interior bracket by scanning
        const int grid = 400;
        double a = lo, b = hi;
        bool found = false;
        double ga = -1.0;
        for (int i = 1; i < grid && !found; ++i) {
            double r = lo + (hi - lo) * i / grid;
            double g = rec.f(r) - r;
            if (ga < 0.0 && g >= 0.0 && r > lo && r < hi) {
                a = lo + (hi - lo) * (i - 1) / grid;
                b = r;
                found = true;
            }
            ga = g;
        }
        if (found) {
            for (int it = 0; it < 200; ++it) {
                double mid = 0.5 * (a + b);
                if (rec.f(mid) - mid < 0.0)
                    a = mid;
                else
                    b = mid;
            }
            out.r_middle = newton_polish(rec, 0.5 * (a + b));
        }
    }
    return out;
}

namespace {

// Existence of a positive fixed point at B = 0: g(r) = f(r) - r attains its
// maximum over r > 0 at rho_plus (the larger solution of f' = 1), so the
// predicate reduces to g(rho_plus) >= 0.
bool positive_fixed_point_exists(int q, int d, double beta) {
    PottsRecursion rec{q, d, beta, 0.0};
    auto rho = rec.rho_pm();
    if (!rho) return false;
    double rp = rho->second;
    if (rp <= 0.0) return false;
    return rec.f(rp) - rp >= 0.0;
}

}  // namespace

std::optional<std::pair<double, double>> potts_tangency_fields(int q, int d, double beta) {
    PottsRecursion rec{q, d, beta, 0.0};
    auto rho = rec.rho_pm();
    if (!rho) return std::nullopt;
    auto [rm, rp] = *rho;
    double Bminus = rp - rec.f(rp);
    double Bplus = rm - rec.f(rm);
    return std::make_pair(Bminus, Bplus);
}

PottsThresholds potts_thresholds(int q, int d) {
    if (d < 2 || q < 2)
        throw CavityError(ErrCode::InvalidParameter, "potts_thresholds: need q >= 2, d >= 2");
    PottsThresholds th;
    th.beta_plus = std::log(1.0 + static_cast<double>(q) / (d - 2));  // +inf at d = 2
    th.beta_plus_form = "log(1+q/(d-2))";
    if (d == 2) {
        th.beta_minus = std::numeric_limits<double>::infinity();
        th.beta_f = std::numeric_limits<double>::infinity();
        th.beta_minus_form = "inf (d=2)";
        return th;
    }
    if (q == 2) {
        // quadratic reduces symbolically to b = d/(d-2)
        th.beta_minus = std::log(static_cast<double>(d) / (d - 2));
        th.beta_minus_form = "log(d/(d-2))";
        th.beta_f = th.beta_minus;  // q=2: thresholds coincide
        return th;
    }
    double a = static_cast<double>(d - 2) * (d - 2);
    double b = a * (q - 2.0);
    double c = -static_cast<double>(d) * d * (q - 1.0);
    th.beta_minus = std::log((-b + std::sqrt(b * b - 4.0 * a * c)) / (2.0 * a));
    th.beta_minus_form = "log of positive root of (d-2)^2 b^2 + (d-2)^2 (q-2) b - d^2 (q-1)";
    // beta_f by bisection on existence of a positive fixed point at B = 0
    double lo = th.beta_minus, hi = th.beta_plus;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (positive_fixed_point_exists(q, d, mid))
            hi = mid;
        else
            lo = mid;
    }
    th.beta_f = 0.5 * (lo + hi);
    return th;
}

PottsRegionCurves potts_region(int q, int d, double B) {
    if (q <= 2 || d <= 2)
        throw CavityError(ErrCode::InvalidParameter,
                          "potts_region: q > 2 and d > 2 required (see ising_phase for q=2)");
    if (B < 0.0) throw CavityError(ErrCode::InvalidParameter, "potts_region: B >= 0");
    auto th = potts_thresholds(q, d);
    PottsRegionCurves rc;
    rc.beta_minus = th.beta_minus;
    rc.beta_f0 = th.beta_f;
    rc.beta_plus0 = th.beta_plus;
    {
        // at beta_minus the tangencies coincide at rho = (log alpha)/2
        PottsRecursion rec{q, d, th.beta_minus, 0.0};
        double rho = 0.5 * std::log(rec.alpha());
        rc.B_cap = rho - rec.f(rho);
    }
    if (B > rc.B_cap) {
        rc.unique_for_all_beta = true;
        return rc;
    }
    auto bis = [&](auto field, double lo, double hi) {
        // field(beta) decreasing in beta; solve field(beta) = B
        for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            auto v = potts_tangency_fields(q, d, mid);
            double val = v ? field(*v) : std::numeric_limits<double>::infinity();
            if (val > B)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    };
    rc.beta_f_of_B =
        bis([](const std::pair<double, double>& v) { return v.first; },
            th.beta_minus * (1.0 + 1e-14), th.beta_f + 1e-12);
    rc.beta_plus_of_B =
        bis([](const std::pair<double, double>& v) { return v.second; },
            th.beta_minus * (1.0 + 1e-14), th.beta_plus);
    return rc;
}

bool potts_in_R_ne(int q, int d, double beta, double B) {
    if (d == 2) return false;
    if (q == 2) {
        auto th = potts_thresholds(2, d);
        return B == 0.0 && beta > th.beta_minus;
    }
    auto rc = potts_region(q, d, B);
    if (rc.unique_for_all_beta) return false;
    if (B == 0.0) return beta >= rc.beta_f0;
    return beta >= rc.beta_f_of_B && beta <= rc.beta_plus_of_B;
}

std::vector<double> potts_message_from_r(int q, double r) {
    std::vector<double> lw(q, 0.0);
    lw[0] = r;
    softmax_inplace(lw);
    return lw;
}

namespace {

double phi_at_r(int q, int d, double beta, double B, double r) {
    auto spec = FactorSpec::make_potts(q, beta, B);
    return phi_regular(d, spec, potts_message_from_r(q, r)).phi_total;
}

double phi_branch(int q, int d, double beta, double B, Branch br) {
    auto fps = potts_fixed_points({q, d, beta, B});
    return phi_at_r(q, d, beta, B, br == Branch::Free ? fps.r_free : fps.r_ordered);
}

}  // namespace

PhaseReport potts_free_energy_bounds(int q, int d, double beta, double B) {
    if (beta < 0.0 || B < 0.0)
        throw CavityError(ErrCode::InvalidParameter, "potts bounds: beta, B >= 0 required");
    PhaseReport rep;
    rep.q = q;
    rep.d = d;
    rep.beta = beta;
    rep.B = B;
    auto fps = potts_fixed_points({q, d, beta, B});
    rep.r_free = fps.r_free;
    rep.r_ordered = fps.r_ordered;
    rep.r_middle = fps.r_middle;
    rep.phi_free = phi_at_r(q, d, beta, B, fps.r_free);
    rep.phi_ordered = phi_at_r(q, d, beta, B, fps.r_ordered);

    if (q == 2 || d == 2) {
        auto th = potts_thresholds(q, d);
        rep.beta_minus = th.beta_minus;
        rep.beta_f = th.beta_f;
        rep.beta_plus = th.beta_plus;
        bool in_ne = potts_in_R_ne(q, d, beta, B);
        rep.region = in_ne ? PhaseRegion::Nonunique : PhaseRegion::Unique;
        rep.lower = std::max(rep.phi_free, rep.phi_ordered);
        rep.upper = in_ne ? rep.phi_ordered : rep.lower;  // q=2: prediction is the + branch
        return rep;
    }

    auto rc = potts_region(q, d, B);
    rep.beta_minus = rc.beta_minus;
    rep.beta_f = rc.beta_f0;
    rep.beta_plus = rc.beta_plus0;
    rep.B_cap = rc.B_cap;
    const double curve_tol = 1e-9;
    bool in_ne;
    if (rc.unique_for_all_beta) {
        in_ne = false;
    } else if (B == 0.0) {
        in_ne = beta >= rc.beta_f0;
    } else {
        in_ne = beta >= rc.beta_f_of_B && beta <= rc.beta_plus_of_B;
    }
    if (!in_ne) {
        rep.region = PhaseRegion::Unique;
        rep.lower = rep.upper = std::max(rep.phi_free, rep.phi_ordered);
        return rep;
    }
    double bf_B = (B == 0.0) ? rc.beta_f0 : rc.beta_f_of_B;
    double bp_B = (B == 0.0) ? rc.beta_plus0 : rc.beta_plus_of_B;
    if (std::fabs(beta - bf_B) <= curve_tol)
        rep.region = PhaseRegion::BoundaryF;
    else if (beta >= bp_B - curve_tol)
        rep.region = PhaseRegion::BoundaryPlus;
    else
        rep.region = PhaseRegion::Nonunique;

    rep.lower = std::max(rep.phi_free, rep.phi_ordered);
    // One-sided interpolation bounds; evaluate branch values a hair inside the
    // region so the branch fixed points are well-defined at the curve.
    const double nudge = 2e-9;
    double upper = std::numeric_limits<double>::infinity();
    {
        // Phi~1: exact at beta_f(B) with h^f, then interpolate up with h^1.
        double base = phi_branch(q, d, bf_B + nudge, B, Branch::Free);
        double corr = rep.phi_ordered - phi_branch(q, d, bf_B + nudge, B, Branch::Ordered);
        upper = std::min(upper, base + corr);
    }
    if (beta <= bp_B) {
        // Phi~f: exact at beta_plus(B) with h^1, interpolate down with h^f.
        double base = phi_branch(q, d, bp_B - nudge, B, Branch::Ordered);
        double corr = phi_branch(q, d, bp_B - nudge, B, Branch::Free) - rep.phi_free;
        upper = std::min(upper, base - corr);
    }
    rep.upper = upper;
    return rep;
}

double hardcore_lambda_c(int d) {
    if (d < 3)
        throw CavityError(ErrCode::InvalidParameter,
                          "hardcore_lambda_c: d >= 3 (the line is always unique)");
    return std::pow(d - 1.0, d - 1) / std::pow(d - 2.0, d);
}

HardcorePhi hardcore_phi(int d, double lambda) {
    if (d < 2 || !(lambda > 0.0))
        throw CavityError(ErrCode::InvalidParameter, "hardcore_phi: need d >= 2, lambda > 0");
    // g(u) = u - 1/(1+lambda u^{d-1}) is strictly increasing on [0,1]
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        double g = mid - 1.0 / (1.0 + lambda * std::pow(mid, d - 1));
        if (g < 0.0)
            lo = mid;
        else
            hi = mid;
    }
    HardcorePhi out;
    out.u = 0.5 * (lo + hi);
    out.outside_uniqueness = d >= 3 && lambda > hardcore_lambda_c(d);
    auto spec = FactorSpec::make_hardcore(lambda);
    out.phi = phi_regular(d, spec, {out.u, 1.0 - out.u}).phi_total;
    return out;
}

IsingPhaseResult ising_phase(int d, double beta, double B) {
    if (d < 2) throw CavityError(ErrCode::InvalidParameter, "ising_phase: d >= 2");
    if (beta < 0.0 || B < 0.0)
        throw CavityError(ErrCode::InvalidParameter, "ising_phase: beta, B >= 0 required");
    IsingPhaseResult out;
    // Uniqueness threshold in the +/-1 spin convention: atanh(1/(d-1)),
    // i.e. half of log(d/(d-2)) from the q=2 quadratic in the Potts scaling.
    out.beta_minus = d == 2 ? std::numeric_limits<double>::infinity()
                            : 0.5 * std::log(static_cast<double>(d) / (d - 2));
    out.unique = B > 0.0 || beta <= out.beta_minus;
    auto spec = FactorSpec::make_ising(beta, B);
    auto fp_f = bp_fixed_point_regular(d, spec, Branch::Free);
    auto fp_p = bp_fixed_point_regular(d, spec, Branch::Ordered);
    auto llr = [](const std::vector<double>& h) {
        return std::log(h[0]) - std::log(h[1]);
    };
    out.r_free = llr(fp_f.h);
    out.r_plus = llr(fp_p.h);
    out.phi_free = phi_regular(d, spec, fp_f.h).phi_total;
    out.phi_plus = phi_regular(d, spec, fp_p.h).phi_total;
    return out;
}

TvDiagnostic tv_diagnostic(const FamilySweep& sweep) {
    if (sweep.grid.size() > 1) {
        bool incr = true, decr = true;
        for (size_t i = 1; i < sweep.grid.size(); ++i) {
            if (sweep.grid[i] < sweep.grid[i - 1]) incr = false;
            if (sweep.grid[i] > sweep.grid[i - 1]) decr = false;
        }
        if (!incr && !decr)
            throw CavityError(ErrCode::InvalidParameter, "tv_diagnostic: grid must be monotone");
    }
    auto fixed_point_at = [&](double p) -> std::vector<double> {
        FactorSpec spec = [&] {
            switch (sweep.family) {
                case ModelFamily::Potts:
                    return sweep.param == "beta"
                               ? FactorSpec::make_potts(sweep.q, p, sweep.fixed_B)
                               : FactorSpec::make_potts(sweep.q, sweep.fixed_beta, p);
                case ModelFamily::Ising:
                    return sweep.param == "beta" ? FactorSpec::make_ising(p, sweep.fixed_B)
                                                 : FactorSpec::make_ising(sweep.fixed_beta, p);
                case ModelFamily::HardCore:
                    return FactorSpec::make_hardcore(p);
                default:
                    throw CavityError(ErrCode::InvalidParameter,
                                      "tv_diagnostic: raw specs have no parameter sweep");
            }
        }();
        return bp_fixed_point_regular(sweep.d, spec, sweep.branch).h;
    };
    TvDiagnostic out;
    if (sweep.grid.empty()) return out;
    auto prev = fixed_point_at(sweep.grid[0]);
    for (size_t i = 1; i < sweep.grid.size(); ++i) {
        auto cur = fixed_point_at(sweep.grid[i]);
        double l1 = 0.0;
        for (size_t s = 0; s < cur.size(); ++s) l1 += std::fabs(cur[s] - prev[s]);
        out.total_variation += l1;
        if (l1 > 0.1 && !out.jump) {
            out.jump = true;
            out.jump_index = i;
        }
        prev = std::move(cur);
    }
    return out;
}

}  // namespace cavitylab
