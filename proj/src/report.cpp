#include "poprec/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace poprec {

namespace {

nlohmann::json cjson(Complex z) { return {z.real(), z.imag()}; }

Complex cparse(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

nlohmann::json point_json(const GridPoint& p) {
    return {{"z", cjson(p.z)}, {"grid_kind", to_string(p.kind)}, {"index", p.index}};
}

GridPoint point_parse(const nlohmann::json& j) {
    return {cparse(j.at("z")), grid_kind_from_string(j.at("grid_kind").get<std::string>()), j.at("index").get<int>()};
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

nlohmann::json result_to_json(const RecoveryResult& r) {
    const auto& d = r.diagnostics;
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& c : d.candidates) {
        cands.push_back({{"ell_prime", c.enumeration.ell_prime},
                         {"m1", c.enumeration.m1},
                         {"m2", c.enumeration.m2},
                         {"outcome", c.outcome},
                         {"usable_points", c.usable_points},
                         {"support", c.support}});
    }
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : d.points) {
        nlohmann::json by_k = nlohmann::json::array();
        for (const auto& e : p.by_k) {
            by_k.push_back({{"k", e.k}, {"estimate", cjson(e.estimate)}, {"fitted", cjson(e.fitted)},
                            {"residual", e.residual}});
        }
        points.push_back({{"point", point_json(p.point)},
                          {"usable", p.usable},
                          {"gate_yes", p.gate_yes},
                          {"gate_total", p.gate_total},
                          {"by_k", std::move(by_k)}});
    }
    return {{"distribution", distribution_to_json(r.distribution)},
            {"seed", r.seed},
            {"config", config_to_json(r.config)},
            {"diagnostics",
             {{"sample_count", d.sample_count},
              {"k_max", d.k_max},
              {"small_p", d.small_p},
              {"threshold_t", d.threshold_t},
              {"effective_p", d.effective_p},
              {"fit_tau", d.fit_tau},
              {"validation_ratio", d.validation_ratio},
              {"selected", d.selected},
              {"candidates", std::move(cands)},
              {"points", std::move(points)}}}};
}

RecoveryResult result_from_json(const nlohmann::json& j) {
    try {
        Diagnostics d;
        const auto& jd = j.at("diagnostics");
        d.sample_count = jd.at("sample_count").get<std::size_t>();
        d.k_max = jd.at("k_max").get<int>();
        d.small_p = jd.at("small_p").get<bool>();
        d.threshold_t = jd.at("threshold_t").get<int>();
        d.effective_p = jd.at("effective_p").get<double>();
        d.fit_tau = jd.at("fit_tau").get<double>();
        d.validation_ratio = jd.at("validation_ratio").get<double>();
        d.selected = jd.at("selected").get<int>();
        for (const auto& c : jd.at("candidates")) {
            d.candidates.push_back({{c.at("ell_prime").get<int>(), c.at("m1").get<int>(), c.at("m2").get<int>()},
                                    c.at("outcome").get<std::string>(),
                                    c.at("usable_points").get<int>(),
                                    c.at("support").get<std::vector<std::string>>()});
        }
        for (const auto& p : jd.at("points")) {
            PointDiagnostics pd;
            pd.point = point_parse(p.at("point"));
            pd.usable = p.at("usable").get<bool>();
            pd.gate_yes = p.at("gate_yes").get<int>();
            pd.gate_total = p.at("gate_total").get<int>();
            for (const auto& e : p.at("by_k")) {
                pd.by_k.push_back({e.at("k").get<int>(), cparse(e.at("estimate")), cparse(e.at("fitted")),
                                   e.at("residual").get<double>()});
            }
            d.points.push_back(std::move(pd));
        }
        return {distribution_from_json(j.at("distribution")), std::move(d), j.at("seed").get<std::uint64_t>(),
                config_from_json(j.at("config"))};
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError(std::string("malformed recovery result: ") + e.what());
    }
}

std::string diagnostics_csv(const Diagnostics& d) {
    std::ostringstream os;
    os << "point,re_z,im_z,arg_z,usable,gate_yes,gate_total,gate_rate,k,re_estimate,im_estimate,re_fitted,"
          "im_fitted,residual\n";
    for (std::size_t i = 0; i < d.points.size(); ++i) {
        const auto& p = d.points[i];
        const double rate = p.gate_total > 0 ? double(p.gate_yes) / p.gate_total : 0.0;
        for (int k = 0; k <= d.k_max; ++k) {
            os << i << ',' << num(p.point.z.real()) << ',' << num(p.point.z.imag()) << ',' << num(std::arg(p.point.z))
               << ',' << (p.usable ? 1 : 0) << ',' << p.gate_yes << ',' << p.gate_total << ',' << num(rate) << ','
               << k;
            const ResidualEntry* e = nullptr;
            for (const auto& r : p.by_k) {
                if (r.k == k) e = &r;
            }
            if (e) {
                os << ',' << num(e->estimate.real()) << ',' << num(e->estimate.imag()) << ','
                   << num(e->fitted.real()) << ',' << num(e->fitted.imag()) << ',' << num(e->residual);
            } else {
                os << ",,,,,";
            }
            os << '\n';
        }
    }
    return os.str();
}

std::filesystem::path csv_path_for(const std::filesystem::path& json_path) {
    auto p = json_path;
    return p.replace_extension(".csv");
}

void emit_report(const RecoveryResult& r, const std::filesystem::path& path) {
    std::ofstream js(path);
    if (!js) throw IoError("cannot write " + path.string());
    js << result_to_json(r).dump(2) << '\n';
    if (!js) throw IoError("write failed for " + path.string());
    const auto csv = csv_path_for(path);
    std::ofstream cs(csv);
    if (!cs) throw IoError("cannot write " + csv.string());
    cs << diagnostics_csv(r.diagnostics);
    if (!cs) throw IoError("write failed for " + csv.string());
}

}  // namespace poprec
