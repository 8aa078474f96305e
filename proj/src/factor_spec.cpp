#include "cavitylab/factor_spec.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

namespace cavitylab {

// Convention: alphabet is 0-indexed. Potts "spin 1" is index 0; Ising "+1" is
// index 0, "-1" is index 1.

FactorSpec FactorSpec::make_potts(int q, double beta, double B) {
    if (q < 2) throw CavityError(ErrCode::InvalidParameter, "potts requires q >= 2");
    FactorSpec s;
    s.family_ = ModelFamily::Potts;
    s.q_ = q;
    s.beta_ = beta;
    s.B_ = B;
    s.xi_.assign(static_cast<size_t>(q) * q, 0.0);
    for (int a = 0; a < q; ++a) s.xi_[a * q + a] = beta;
    s.xibar_.assign(q, 0.0);
    s.xibar_[0] = B;
    return s;
}

FactorSpec FactorSpec::make_ising(double beta, double B) {
    FactorSpec s;
    s.family_ = ModelFamily::Ising;
    s.q_ = 2;
    s.beta_ = beta;
    s.B_ = B;
    // spins: index 0 -> +1, index 1 -> -1
    s.xi_ = {beta, -beta, -beta, beta};
    s.xibar_ = {B, -B};
    return s;
}

FactorSpec FactorSpec::make_hardcore(double lambda) {
    if (!(lambda > 0.0))
        throw CavityError(ErrCode::InvalidParameter, "hardcore requires lambda > 0");
    FactorSpec s;
    s.family_ = ModelFamily::HardCore;
    s.q_ = 2;
    s.lambda_ = lambda;
    s.B_ = std::log(lambda);
    // sigma in {0,1}; psi(1,1) = 0 exactly
    s.xi_ = {0.0, 0.0, 0.0, neg_inf};
    s.xibar_ = {0.0, std::log(lambda)};
    return s;
}

FactorSpec FactorSpec::make_raw(const std::vector<std::vector<double>>& psi,
                                const std::vector<double>& psibar) {
    int q = static_cast<int>(psibar.size());
    if (q < 1) throw CavityError(ErrCode::InvalidParameter, "raw spec requires q >= 1");
    if (static_cast<int>(psi.size()) != q)
        throw CavityError(ErrCode::InvalidParameter, "psi must be q x q");
    FactorSpec s;
    s.family_ = ModelFamily::Raw;
    s.q_ = q;
    s.xi_.assign(static_cast<size_t>(q) * q, 0.0);
    s.xibar_.assign(q, 0.0);
    for (int a = 0; a < q; ++a) {
        if (static_cast<int>(psi[a].size()) != q)
            throw CavityError(ErrCode::InvalidParameter, "psi must be q x q");
        if (!(psibar[a] > 0.0) || !std::isfinite(psibar[a]))
            throw CavityError(ErrCode::InvalidParameter, "psibar must be positive and finite");
        s.xibar_[a] = std::log(psibar[a]);
        for (int b = 0; b < q; ++b) {
            double w = psi[a][b];
            if (std::isnan(w) || w < 0.0 || std::isinf(w))
                throw CavityError(ErrCode::InvalidParameter, "psi entries must be finite and >= 0");
            if (std::fabs(w - psi[b][a]) != 0.0)
                throw CavityError(ErrCode::InvalidParameter, "psi must be symmetric");
            s.xi_[a * q + b] = (w == 0.0) ? neg_inf : std::log(w);
        }
    }
    return s;
}

double FactorSpec::dxi_dbeta(int a, int b) const {
    switch (family_) {
        case ModelFamily::Potts: return a == b ? 1.0 : 0.0;
        case ModelFamily::Ising: return (a == b) ? 1.0 : -1.0;  // sigma_a * sigma_b
        case ModelFamily::HardCore: return 0.0;  // psi carries no beta dependence
        case ModelFamily::Raw: return 0.0;
    }
    return 0.0;
}

double FactorSpec::dxibar_dB(int a) const {
    switch (family_) {
        case ModelFamily::Potts: return a == 0 ? 1.0 : 0.0;
        case ModelFamily::Ising: return a == 0 ? 1.0 : -1.0;
        case ModelFamily::HardCore: return a == 1 ? 1.0 : 0.0;  // B = log(lambda)
        case ModelFamily::Raw: return 0.0;
    }
    return 0.0;
}

FactorSpec FactorSpec::regenerate() const {
    switch (family_) {
        case ModelFamily::Potts: return make_potts(q_, beta_, B_);
        case ModelFamily::Ising: return make_ising(beta_, B_);
        case ModelFamily::HardCore: return make_hardcore(lambda_);
        case ModelFamily::Raw: return *this;
    }
    return *this;
}

FactorSpec FactorSpec::with_beta(double beta) const {
    switch (family_) {
        case ModelFamily::Potts: return make_potts(q_, beta, B_);
        case ModelFamily::Ising: return make_ising(beta, B_);
        default:
            throw CavityError(ErrCode::InvalidParameter, "family has no beta parameter");
    }
}

FactorSpec FactorSpec::with_B(double B) const {
    switch (family_) {
        case ModelFamily::Potts: return make_potts(q_, beta_, B);
        case ModelFamily::Ising: return make_ising(beta_, B);
        case ModelFamily::HardCore: return make_hardcore(std::exp(B));
        default:
            throw CavityError(ErrCode::InvalidParameter, "family has no B parameter");
    }
}

std::string FactorSpec::describe() const {
    std::ostringstream os;
    switch (family_) {
        case ModelFamily::Potts: os << "potts(q=" << q_ << ",beta=" << beta_ << ",B=" << B_ << ")"; break;
        case ModelFamily::Ising: os << "ising(beta=" << beta_ << ",B=" << B_ << ")"; break;
        case ModelFamily::HardCore: os << "hardcore(lambda=" << lambda_ << ")"; break;
        case ModelFamily::Raw: os << "raw(q=" << q_ << ")"; break;
    }
    return os.str();
}

PermitReport validate_permissive(const FactorSpec& spec) {
    PermitReport rep;
    int q = spec.q();
    // psibar > 0 holds by construction (log domain, finite), but check anyway
    // for robustness against future raw extensions.
    for (int a = 0; a < q; ++a)
        if (spec.xibar(a) == neg_inf) return rep;
    for (int c = 0; c < q; ++c) {
        bool all_pos = true;
        for (int a = 0; a < q; ++a)
            if (!spec.supported(a, c)) { all_pos = false; break; }
        if (all_pos) {
            rep.permissive = true;
            rep.permitted_state = c;
            return rep;
        }
    }
    for (int a = 0; a < q; ++a) {
        bool has_partner = false;
        for (int c = 0; c < q; ++c)
            if (spec.supported(a, c)) { has_partner = true; break; }
        if (!has_partner) rep.failing_rows.push_back(a);
    }
    // If no row fails outright, every row has some partner but no single
    // column works for all rows; report the rows blocking each column.
    if (rep.failing_rows.empty()) {
        for (int c = 0; c < q; ++c)
            for (int a = 0; a < q; ++a)
                if (!spec.supported(a, c)) { rep.failing_rows.push_back(a); break; }
    }
    return rep;
}

FactorSpec spec_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const std::exception& e) {
        throw CavityError(ErrCode::ParseError, std::string("spec json: ") + e.what());
    }
    const std::string model = j.value("model", "");
    if (model == "potts")
        return FactorSpec::make_potts(j.at("q").get<int>(), j.at("beta").get<double>(),
                                      j.value("B", 0.0));
    if (model == "ising")
        return FactorSpec::make_ising(j.at("beta").get<double>(), j.value("B", 0.0));
    if (model == "hardcore")
        return FactorSpec::make_hardcore(j.at("lambda").get<double>());
    if (model == "raw") {
        auto psi = j.at("psi").get<std::vector<std::vector<double>>>();
        auto psibar = j.at("psibar").get<std::vector<double>>();
        return FactorSpec::make_raw(psi, psibar);
    }
    throw CavityError(ErrCode::ParseError, "spec json: unknown model '" + model + "'");
}

}  // namespace cavitylab
