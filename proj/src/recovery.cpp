#include "poprec/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "poprec/coeffs.hpp"
#include "poprec/lp.hpp"
#include "poprec/support.hpp"

namespace poprec {

namespace {

constexpr double kDropWeight = 1e-12;

std::string render(MarginRule r) { return r == MarginRule::EpsOverFour ? "eps/4" : "3/(4M)"; }

MarginRule margin_rule_from(const std::string& s) {
    if (s == "eps/4") return MarginRule::EpsOverFour;
    if (s == "3/(4M)") return MarginRule::ThreeOverFourM;
    throw ParameterError("unknown margin rule '" + s + "'");
}

std::string render(ArcWidth w) { return w == ArcWidth::TwoPiOverL ? "2pi/L" : "1/L"; }

ArcWidth arc_width_from(const std::string& s) {
    if (s == "2pi/L") return ArcWidth::TwoPiOverL;
    if (s == "1/L") return ArcWidth::OneOverL;
    throw ParameterError("unknown arc width mode '" + s + "' (expected 1/L or 2pi/L)");
}

std::vector<int> m1_range(const ProblemParams& params, const std::optional<double>& alpha_known,
                          const RecoveryConfig& config) {
    if (alpha_known) {
        if (!(*alpha_known > 0.0 && *alpha_known <= 1.0)) throw ParameterError("alpha must lie in (0,1]");
        return {std::max(1, static_cast<int>(std::lround(std::log2(1.0 / *alpha_known))))};
    }
    const int base = static_cast<int>(std::ceil(std::log2(1.0 / params.eps()) - 1e-12));
    const int m = std::clamp(base + config.m_slack, 1, std::max(1, config.m_cap));
    std::vector<int> out;
    for (int m1 = 1; m1 <= m; ++m1) out.push_back(m1);
    return out;
}

double component_ratio(double diff, double scale) {
    diff = std::abs(diff);
    if (scale > 0.0) return diff / scale;
    return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

struct GateTally {
    std::map<std::size_t, std::pair<int, int>> by_point;  // point -> (yes, total)
};

std::vector<SupportCandidate> run_candidates(const MomentEstimates& estimates, const ProblemParams& params,
                                             std::optional<double> alpha_known, const RecoveryConfig& config,
                                             std::vector<CandidateRecord>* log, GateTally* tally) {
    std::vector<std::size_t> arc;
    for (auto idx : estimates.usable_indices()) {
        if (estimates.points[idx].point.kind == GridKind::Arc) arc.push_back(idx);
    }
    const auto m1s = m1_range(params, alpha_known, config);

    struct Outcome {
        std::string message;
        std::vector<BitString> support;
    };
    std::map<std::pair<int, std::vector<std::size_t>>, Outcome> cache;
    std::set<std::vector<BitString>> seen;
    std::vector<SupportCandidate> found;
    std::vector<CandidateRecord> records;

    for (int lp = 1; lp <= params.ell(); ++lp) {
        if (2 * lp - 1 > estimates.k_max) break;
        const ProblemParams sub(params.n(), lp, params.p(), params.eps());
        for (int m1 : m1s) {
            for (int m2 = 1; m2 <= lp * m1; ++m2) {
                const PronyThresholds th(std::ldexp(1.0, -m1), std::ldexp(1.0, -m2), config.delta, config.eta);
                std::vector<std::size_t> chosen;
                std::vector<std::vector<Complex>> sigmas;
                for (auto idx : arc) {
                    const auto rec = estimate_sigma_at_point(estimates, idx, lp, th);
                    if (tally) {
                        auto& t = tally->by_point[idx];
                        t.second += 1;
                        if (rec.gate == GateResult::Yes) t.first += 1;
                    }
                    if (rec.gate != GateResult::Yes) continue;
                    if (config.point_z * rec.noise_scale > config.coeff_tol) continue;
                    chosen.push_back(idx);
                    sigmas.push_back(rec.sigma);
                }
                CandidateRecord record{{lp, m1, m2}, "", static_cast<int>(chosen.size()), {}};
                auto key = std::make_pair(lp, chosen);
                auto it = cache.find(key);
                if (it == cache.end()) {
                    Outcome out;
                    if (chosen.empty()) {
                        out.message = "no usable grid points";
                    } else {
                        try {
                            std::vector<SymmetricPolynomial> polys;
                            for (int k = 1; k <= lp; ++k) {
                                std::vector<SigmaPoint> pts;
                                for (std::size_t r = 0; r < chosen.size(); ++r) {
                                    pts.push_back({estimates.points[chosen[r]].point.z, sigmas[r][k - 1]});
                                }
                                polys.push_back(recover_polynomial(k, pts, config.coeff_tol, sub));
                            }
                            out.support = decode_support(polys, params.n());
                            out.message = "ok";
                        } catch (const RecoveryError& e) {
                            out.message = e.what();
                        } catch (const ParameterError& e) {
                            out.message = e.what();
                        }
                    }
                    it = cache.emplace(std::move(key), std::move(out)).first;
                }
                record.outcome = it->second.message;
                if (record.outcome == "ok") {
                    for (const auto& x : it->second.support) record.support.push_back(x.to_string());
                    if (seen.insert(it->second.support).second) {
                        found.push_back({{lp, m1, m2}, it->second.support});
                    } else {
                        record.outcome = "duplicate";
                    }
                }
                records.push_back(std::move(record));
            }
        }
    }
    if (log) *log = records;
    if (found.empty()) {
        std::string msg = "no candidate support could be recovered (" + std::to_string(records.size()) + " attempts";
        if (!records.empty()) msg += "; last: " + records.back().outcome;
        throw RecoveryError(msg + ")");
    }
    return found;
}

SparseDistribution make_distribution(const std::vector<BitString>& support, const std::vector<double>& weights) {
    std::vector<BitString> s;
    std::vector<double> w;
    double total = 0.0;
    for (std::size_t i = 0; i < support.size(); ++i) {
        if (weights[i] <= kDropWeight) continue;
        s.push_back(support[i]);
        w.push_back(weights[i]);
        total += weights[i];
    }
    if (s.empty()) throw RecoveryError("fitted weights are all zero");
    for (double& v : w) v /= total;
    // Put any rounding left over on the largest weight.
    double sum = 0.0;
    for (double v : w) sum += v;
    *std::max_element(w.begin(), w.end()) += 1.0 - sum;
    return SparseDistribution(std::move(s), std::move(w));
}

}  // namespace

double RecoveryConfig::margin_abs(const ProblemParams& params) const {
    if (margin_rule == MarginRule::EpsOverFour) return params.eps() / 4.0;
    const double M = magnitude_bound > 0.0 ? magnitude_bound
                                           : std::pow(double(params.n()), 2.0 * params.ell() - 1.0);
    return 3.0 / (4.0 * M);
}

nlohmann::json config_to_json(const RecoveryConfig& c) {
    nlohmann::json j;
    j["L"] = c.L;
    j["arc_width"] = render(c.width_mode);
    j["grid_points"] = c.grid_points;
    j["delta"] = c.delta;
    j["eta"] = c.eta;
    j["coeff_tol"] = c.coeff_tol;
    j["point_z"] = c.point_z;
    j["noise_z"] = c.noise_z;
    j["alpha_known"] = c.alpha_known ? nlohmann::json(*c.alpha_known) : nlohmann::json(nullptr);
    j["m_slack"] = c.m_slack;
    j["m_cap"] = c.m_cap;
    j["margin_rule"] = render(c.margin_rule);
    j["magnitude_bound"] = c.magnitude_bound;
    j["sample_count"] = c.sample_count;
    j["seed"] = c.seed;
    j["workers"] = c.workers;
    j["subsample_budget"] = c.subsample_budget;
    return j;
}

RecoveryConfig config_from_json(const nlohmann::json& j) {
    try {
        RecoveryConfig c;
        c.L = j.value("L", c.L);
        c.width_mode = arc_width_from(j.value("arc_width", render(c.width_mode)));
        c.grid_points = j.value("grid_points", c.grid_points);
        c.delta = j.value("delta", c.delta);
        c.eta = j.value("eta", c.eta);
        c.coeff_tol = j.value("coeff_tol", c.coeff_tol);
        c.point_z = j.value("point_z", c.point_z);
        c.noise_z = j.value("noise_z", c.noise_z);
        if (j.contains("alpha_known") && !j.at("alpha_known").is_null()) c.alpha_known = j.at("alpha_known").get<double>();
        c.m_slack = j.value("m_slack", c.m_slack);
        c.m_cap = j.value("m_cap", c.m_cap);
        c.margin_rule = margin_rule_from(j.value("margin_rule", render(c.margin_rule)));
        c.magnitude_bound = j.value("magnitude_bound", c.magnitude_bound);
        c.sample_count = j.value("sample_count", c.sample_count);
        c.seed = j.value("seed", c.seed);
        c.workers = j.value("workers", c.workers);
        c.subsample_budget = j.value("subsample_budget", c.subsample_budget);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError(std::string("malformed recovery config: ") + e.what());
    }
}

std::vector<GridPoint> recovery_grid(const ProblemParams& params, const RecoveryConfig& config) {
    const int L = config.L > 0 ? config.L : (params.n() >= 2 ? default_L(params.n(), params.p()) : 1);
    return build_arc_grid(equispaced_arc(L, config.width_mode, config.grid_points));
}

std::vector<SupportCandidate> recover_support_candidates(const MomentEstimates& estimates,
                                                         const ProblemParams& params,
                                                         std::optional<double> alpha_known,
                                                         const RecoveryConfig& config,
                                                         std::vector<CandidateRecord>* log) {
    return run_candidates(estimates, params, alpha_known, config, log, nullptr);
}

std::optional<WeightFit> minimax_weights(const std::vector<BitString>& support, const MomentEstimates& estimates,
                                         bool standardized, double margin_abs, double noise_z) {
    const int s = static_cast<int>(support.size());
    if (s == 0) throw ParameterError("weight fit needs a non-empty support");
    for (int i = 1; i < s; ++i) {
        if (std::find(support.begin(), support.begin() + i, support[i]) != support.begin() + i) {
            throw ParameterError("weight fit needs distinct support strings");
        }
    }
    LinearProgram lp(s + 1);
    std::vector<double> ones(s + 1, 1.0);
    ones[s] = 0.0;
    lp.add_row(ones, 1.0, 1.0);
    lp.objective.assign(s + 1, 0.0);
    lp.objective[s] = 1.0;
    for (auto idx : estimates.usable_indices()) {
        const auto& pm = estimates.points[idx];
        std::vector<Complex> u(s);
        for (int i = 0; i < s; ++i) u[i] = eval_poly(support[i], pm.point.z);
        std::vector<Complex> power(s, Complex{1.0, 0.0});
        for (int k = 1; k <= estimates.k_max; ++k) {
            for (int i = 0; i < s; ++i) power[i] *= u[i];
            const auto& e = pm.by_k[static_cast<std::size_t>(k)];
            for (int part = 0; part < 2; ++part) {
                const double target = part == 0 ? e.mean.real() : e.mean.imag();
                const double se = part == 0 ? e.std_error.real() : e.std_error.imag();
                const double scale = standardized ? margin_abs + noise_z * se : 1.0;
                if (!(scale > 0.0)) throw ParameterError("standardized weight fit needs a positive margin");
                std::vector<double> a(s + 1);
                for (int i = 0; i < s; ++i) a[i] = part == 0 ? power[i].real() : power[i].imag();
                a[s] = -scale;
                lp.add_row(a, -LinearProgram::kInf, target);
                a[s] = scale;
                lp.add_row(std::move(a), target, LinearProgram::kInf);
            }
        }
    }
    const auto res = solve_lp(lp);
    if (res.status != LpStatus::Optimal) return std::nullopt;
    WeightFit fit;
    fit.weights.assign(res.x.begin(), res.x.begin() + s);
    for (double& w : fit.weights) w = std::max(0.0, w);
    fit.tau = res.x[s];
    return fit;
}

std::optional<std::vector<double>> fit_weights(const std::vector<BitString>& support,
                                               const MomentEstimates& estimates, double tol) {
    auto fit = minimax_weights(support, estimates);
    if (!fit || fit->tau > tol) return std::nullopt;
    return fit->weights;
}

double validation_ratio(const SparseDistribution& d, const MomentEstimates& estimates, double margin_abs,
                        double noise_z) {
    double worst = 0.0;
    for (auto idx : estimates.usable_indices()) {
        const auto& pm = estimates.points[idx];
        for (int k = 1; k <= estimates.k_max; ++k) {
            const auto& e = pm.by_k[static_cast<std::size_t>(k)];
            const Complex diff = power_sum(d, pm.point.z, k) - e.mean;
            worst = std::max(worst, component_ratio(diff.real(), margin_abs + noise_z * e.std_error.real()));
            worst = std::max(worst, component_ratio(diff.imag(), margin_abs + noise_z * e.std_error.imag()));
        }
    }
    return worst;
}

RecoveryResult recover_from_moments(const MomentEstimates& estimates, const ProblemParams& params,
                                    const RecoveryConfig& config) {
    if (estimates.k_max < 1) throw ParameterError("moment estimates need k_max >= 1");
    Diagnostics diag;
    diag.sample_count = estimates.sample_count;
    diag.k_max = estimates.k_max;
    diag.effective_p = params.p();
    GateTally tally;
    const auto candidates =
        run_candidates(estimates, params, config.alpha_known, config, &diag.candidates, &tally);

    const double margin = config.margin_abs(params);
    std::optional<SparseDistribution> chosen;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (const auto& cand : candidates) {
        const auto fit = minimax_weights(cand.support, estimates, true, margin, config.noise_z);
        if (!fit) continue;
        SparseDistribution d = make_distribution(cand.support, fit->weights);
        // A truncated candidate (strings dropped by the fit) is held to eps/2 when alpha is unknown.
        const bool truncated = d.size() < cand.support.size();
        const double m = (!config.alpha_known && truncated) ? std::max(margin, params.eps() / 2.0) : margin;
        const double ratio = validation_ratio(d, estimates, m, config.noise_z);
        best_ratio = std::min(best_ratio, ratio);
        if (ratio <= 1.0) {
            diag.fit_tau = fit->tau;
            diag.validation_ratio = ratio;
            for (std::size_t i = 0; i < diag.candidates.size(); ++i) {
                if (diag.candidates[i].enumeration == cand.enumeration) diag.selected = static_cast<int>(i);
            }
            chosen = std::move(d);
            break;
        }
    }
    if (!chosen) {
        throw RecoveryError("no candidate support passed moment validation (best ratio " +
                            std::to_string(best_ratio) + ")");
    }

    for (std::size_t idx = 0; idx < estimates.points.size(); ++idx) {
        const auto& pm = estimates.points[idx];
        PointDiagnostics pd;
        pd.point = pm.point;
        pd.usable = pm.usable;
        if (auto it = tally.by_point.find(idx); it != tally.by_point.end()) {
            pd.gate_yes = it->second.first;
            pd.gate_total = it->second.second;
        }
        if (pm.usable) {
            for (int k = 0; k <= estimates.k_max; ++k) {
                const Complex est = pm.by_k[static_cast<std::size_t>(k)].mean;
                const Complex fit = power_sum(*chosen, pm.point.z, k);
                const Complex d = fit - est;
                pd.by_k.push_back({k, est, fit, std::max(std::abs(d.real()), std::abs(d.imag()))});
            }
        }
        diag.points.push_back(std::move(pd));
    }
    return {std::move(*chosen), std::move(diag), config.seed, config};
}

RecoveryResult recover(const TraceSource& source, const ProblemParams& params, const RecoveryConfig& config) {
    if (source.length() != static_cast<std::size_t>(params.n())) {
        throw ParameterError("trace length differs from n");
    }
    if (config.sample_count == 0) throw ParameterError("at least one trace is required");
    const int k_max = 2 * params.ell() - 1;
    const double n = params.n();
    const bool small_p = params.p() < 0.5 / std::sqrt(n);

    if (!small_p) {
        const auto grid = recovery_grid(params, config);
        const auto est = accumulate_moments(source, grid, k_max, params, config.sample_count, config.workers);
        auto result = recover_from_moments(est, params, config);
        return result;
    }

    const int t = choose_threshold(params.n(), config.subsample_budget);
    const SubsampleConfig sub(params.n(), t);
    const ProblemParams eff = params.with_retention(sub.target_p());
    std::vector<Trace> kept;
    const std::size_t bs = source.block_size();
    const auto avail = source.available();
    const std::size_t raw_limit = avail ? *avail : config.sample_count * 10000;
    std::vector<Trace> buf;
    for (std::uint64_t b = 0; kept.size() < config.sample_count && b * bs < raw_limit; ++b) {
        buf.clear();
        source.draw_block(b, std::min<std::size_t>(bs, raw_limit - b * bs), buf);
        // Substream ids above 2^62 keep subsampling draws apart from channel draws.
        auto rng = make_stream(config.seed, (std::uint64_t{1} << 62) + b);
        for (const auto& raw : buf) {
            if (auto s = subsample_trace(raw, sub, rng)) {
                kept.push_back(std::move(*s));
                if (kept.size() == config.sample_count) break;
            }
        }
    }
    if (kept.empty()) throw RecoveryError("no raw trace reached the subsampling threshold t = " + std::to_string(t));
    const std::size_t count = kept.size();
    const VectorSource reduced(std::move(kept));
    const auto grid = recovery_grid(eff, config);
    const auto est = accumulate_moments(reduced, grid, k_max, eff, count, config.workers);
    auto result = recover_from_moments(est, eff, config);
    result.diagnostics.small_p = true;
    result.diagnostics.threshold_t = t;
    return result;
}

SparseDistribution exhaustive_distinguisher(const MomentEstimates& estimates, const ProblemParams& params,
                                            double weight_grid, double margin_abs, double noise_z) {
    if (params.n() > 8 || params.ell() > 2) throw ParameterError("exhaustive distinguisher needs n <= 8 and l <= 2");
    if (!(weight_grid > 0.0 && weight_grid <= 1.0)) throw ParameterError("weight grid pitch must lie in (0,1]");
    const int n = params.n();
    const std::size_t strings = std::size_t{1} << n;

    struct Slot {
        Complex target;
        double scale_re, scale_im;
        Complex z;
        int k;
    };
    std::vector<Slot> slots;
    for (auto idx : estimates.usable_indices()) {
        const auto& pm = estimates.points[idx];
        for (int k = 1; k <= estimates.k_max; ++k) {
            const auto& e = pm.by_k[static_cast<std::size_t>(k)];
            slots.push_back({e.mean, margin_abs + noise_z * e.std_error.real(),
                             margin_abs + noise_z * e.std_error.imag(), pm.point.z, k});
        }
    }
    if (slots.empty()) throw ParameterError("exhaustive distinguisher needs usable moment estimates");

    std::vector<BitString> all;
    std::vector<std::vector<Complex>> value(strings);
    for (std::size_t v = 0; v < strings; ++v) {
        std::vector<std::uint8_t> bits(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) bits[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((v >> (n - 1 - i)) & 1u);
        all.emplace_back(std::move(bits));
        for (const auto& s : slots) value[v].push_back(ipow(eval_poly(all.back(), s.z), static_cast<unsigned>(s.k)));
    }

    double best = std::numeric_limits<double>::infinity();
    std::vector<BitString> best_support;
    std::vector<double> best_weights;
    auto score = [&](auto&& mixed) {
        double worst = 0.0;
        for (std::size_t j = 0; j < slots.size(); ++j) {
            const Complex d = mixed(j) - slots[j].target;
            worst = std::max({worst, component_ratio(d.real(), slots[j].scale_re),
                              component_ratio(d.imag(), slots[j].scale_im)});
            if (worst >= best) return worst;
        }
        return worst;
    };
    for (std::size_t a = 0; a < strings; ++a) {
        const double r = score([&](std::size_t j) { return value[a][j]; });
        if (r < best) {
            best = r;
            best_support = {all[a]};
            best_weights = {1.0};
        }
    }
    if (params.ell() >= 2) {
        const int steps = static_cast<int>(std::floor((1.0 - 1e-12) / weight_grid));
        for (std::size_t a = 0; a < strings; ++a) {
            for (std::size_t b = a + 1; b < strings; ++b) {
                for (int s = 1; s <= steps; ++s) {
                    const double w = s * weight_grid;
                    if (w >= 1.0 - 1e-12) break;
                    const double r = score([&](std::size_t j) { return w * value[a][j] + (1.0 - w) * value[b][j]; });
                    if (r < best) {
                        best = r;
                        best_support = {all[a], all[b]};
                        best_weights = {w, 1.0 - w};
                    }
                }
            }
        }
    }
    if (!(best <= 1.0)) {
        throw MarginError("no distribution on the search grid matches the moments within the margin (best ratio " +
                          std::to_string(best) + ")");
    }
    return SparseDistribution(best_support, best_weights);
}

}  // namespace poprec
