#include "poprec/prony.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace poprec {

HankelSystem HankelSystem::from_moments(std::span<const Complex> b, int ell_prime) {
    if (ell_prime < 1) throw ParameterError("Hankel system needs l' >= 1");
    const auto l = static_cast<Eigen::Index>(ell_prime);
    if (b.size() < static_cast<std::size_t>(2 * ell_prime)) {
        throw ParameterError("Hankel system needs power sums b_0..b_{2l'-1}");
    }
    HankelSystem sys;
    sys.ell_prime = ell_prime;
    sys.B.resize(l, l);
    sys.v.resize(l);
    for (Eigen::Index i = 0; i < l; ++i) {
        for (Eigen::Index j = 0; j < l; ++j) sys.B(i, j) = b[static_cast<std::size_t>(i + j)];
        sys.v(i) = b[static_cast<std::size_t>(l + i)];
    }
    return sys;
}

PronyThresholds::PronyThresholds(double alpha, double beta, double delta, double eta)
    : alpha_(alpha), beta_(beta), delta_(delta), eta_(eta) {
    for (double v : {alpha, beta, delta, eta}) {
        if (!(v > 0.0 && v <= 1.0)) throw ParameterError("Prony thresholds must lie in (0,1]");
    }
}

double theoretical_delta(int n, int ell, double p, double C) {
    if (n < 2 || ell < 1 || !(p > 0.0 && p < 1.0)) throw ParameterError("theoretical_delta: bad parameters");
    const double ln = std::log(double(n));
    return std::exp(-4.0 * C * std::cbrt(double(n)) * std::pow(ln, 2.0 / 3.0) * ell * ell * std::pow(p, -2.0 / 3.0));
}

std::string to_string(GateResult g) {
    switch (g) {
        case GateResult::Yes: return "yes";
        case GateResult::NoSingular: return "no:singular";
        case GateResult::NoDet: return "no:det";
    }
    return "no:singular";
}

GateResult gate_from_string(const std::string& s) {
    if (s == "yes") return GateResult::Yes;
    if (s == "no:singular") return GateResult::NoSingular;
    if (s == "no:det") return GateResult::NoDet;
    throw ParameterError("unknown gate value '" + s + "'");
}

double smallest_singular_value(const Eigen::MatrixXcd& m) {
    if (m.size() == 0) throw ParameterError("smallest_singular_value: empty matrix");
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m);
    return svd.singularValues().minCoeff();
}

GateResult conditioning_gate(const HankelSystem& sys, const PronyThresholds& th) {
    if (smallest_singular_value(sys.B) < 0.75 * th.alpha() * th.delta()) return GateResult::NoSingular;
    if (std::abs(sys.B.determinant()) < th.beta() * th.gamma() / 2.0) return GateResult::NoDet;
    return GateResult::Yes;
}

Eigen::VectorXcd solve_hankel(const HankelSystem& sys) {
    Eigen::FullPivLU<Eigen::MatrixXcd> lu(sys.B);
    if (!lu.isInvertible()) {
        throw InconsistencyError("Hankel matrix is numerically singular although the gate passed");
    }
    return lu.solve(sys.v);
}

std::vector<Complex> sigma_from_w(const Eigen::VectorXcd& w) {
    const auto l = w.size();
    std::vector<Complex> sigma(static_cast<std::size_t>(l));
    for (Eigen::Index j = 1; j <= l; ++j) {
        const double sign = (j % 2 == 1) ? 1.0 : -1.0;
        sigma[static_cast<std::size_t>(j - 1)] = sign * w(l - j);
    }
    return sigma;
}

std::vector<Complex> solve_sigma(const HankelSystem& sys, const PronyThresholds& th) {
    (void)th;
    return sigma_from_w(solve_hankel(sys));
}

double recurrence_check(std::span<const Complex> b, std::span<const Complex> r) {
    const std::size_t l = r.size();
    if (l == 0 || b.size() != 2 * l) throw ParameterError("recurrence_check: need |b| = 2 |r| > 0");
    double worst = 0.0;
    for (std::size_t k = 0; k < l; ++k) {
        Complex s = b[k + l];
        for (std::size_t j = 1; j <= l; ++j) s -= r[j - 1] * b[k + l - j];
        worst = std::max(worst, std::abs(s));
    }
    return worst;
}

SigmaRecord estimate_sigma_at_point(const MomentEstimates& est, std::size_t z_index, int ell_prime,
                                    const PronyThresholds& th) {
    if (ell_prime < 1) throw ParameterError("l' must be at least 1");
    if (2 * ell_prime - 1 > est.k_max) {
        throw ParameterError("moment estimates stop at k = " + std::to_string(est.k_max) +
                             " but l' = " + std::to_string(ell_prime) + " needs k = " +
                             std::to_string(2 * ell_prime - 1));
    }
    std::vector<Complex> b, se;
    for (int k = 0; k < 2 * ell_prime; ++k) {
        const auto& e = est.at(z_index, k);
        b.push_back(e.mean);
        se.push_back(e.std_error);
    }
    SigmaRecord rec;
    rec.point = est.points[z_index].point;
    rec.ell_prime = ell_prime;
    const auto sys = HankelSystem::from_moments(b, ell_prime);
    rec.gate = conditioning_gate(sys, th);
    if (rec.gate != GateResult::Yes) return rec;
    const auto w = solve_hankel(sys);
    rec.sigma = sigma_from_w(w);

    const auto noise = HankelSystem::from_moments(se, ell_prime);
    const double inv_norm = 1.0 / smallest_singular_value(sys.B);
    const double e_norm = noise.v.cwiseAbs().norm();
    const double E_norm = noise.B.cwiseAbs().norm();
    rec.noise_scale = inv_norm * (e_norm + E_norm * w.norm());
    return rec;
}

namespace {
nlohmann::json cjson(Complex z) { return {z.real(), z.imag()}; }
Complex cfrom(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }
}  // namespace

nlohmann::json sigma_record_to_json(const SigmaRecord& r) {
    nlohmann::json j;
    j["z"] = cjson(r.point.z);
    j["grid_kind"] = to_string(r.point.kind);
    j["index"] = r.point.index;
    j["ell_prime"] = r.ell_prime;
    j["gate"] = to_string(r.gate);
    auto& s = j["sigma"] = nlohmann::json::array();
    for (const auto& v : r.sigma) s.push_back(cjson(v));
    j["noise_scale"] = r.noise_scale;
    return j;
}

SigmaRecord sigma_record_from_json(const nlohmann::json& j) {
    try {
        SigmaRecord r;
        r.point = {cfrom(j.at("z")), grid_kind_from_string(j.value("grid_kind", std::string("arc"))),
                   j.value("index", 0)};
        r.ell_prime = j.at("ell_prime").get<int>();
        r.gate = gate_from_string(j.at("gate").get<std::string>());
        for (const auto& v : j.at("sigma")) r.sigma.push_back(cfrom(v));
        r.noise_scale = j.value("noise_scale", 0.0);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError(std::string("malformed sigma record: ") + e.what());
    }
}

}  // namespace poprec
