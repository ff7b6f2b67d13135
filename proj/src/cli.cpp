#include "poprec/cli.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <Eigen/Core>
#include <gmp.h>
#include <nlohmann/json.hpp>

#include "poprec/channel.hpp"
#include "poprec/core.hpp"
#include "poprec/estimator.hpp"
#include "poprec/oracle.hpp"
#include "poprec/recovery.hpp"
#include "poprec/report.hpp"
#include "poprec/zgrid.hpp"

namespace poprec {

namespace {

constexpr const char* kVersion = "0.1.0";

struct OptionInfo {
    const char* name;
    const char* help;
};

// Every subcommand accepts the same flags; each mode reads what it needs.
constexpr OptionInfo kOptions[] = {
    {"seed", "64-bit seed for all randomness (default 0)"},
    {"samples", "number of traces (default 100000)"},
    {"p", "retention probability"},
    {"n", "string length"},
    {"ell", "sparsity bound (default 1)"},
    {"eps", "target TV error (default 0.25)"},
    {"grid-points", "arc grid size (default 33)"},
    {"workers", "worker threads (default 1)"},
    {"out", "output file"},
    {"dist", "distribution file (JSON)"},
    {"traces", "trace file"},
    {"moments", "moment estimates file (JSON)"},
    {"m", "oracle-check: largest power m (default 3)"},
    {"L", "arc parameter L (default: chosen from n and p)"},
    {"arc-width", "arc half-width convention: 2pi/L (default) or 1/L"},
    {"coeff-tol", "coefficient LP half-width (default 0.25)"},
    {"point-z", "noise multiplier of the grid point filter (default 1)"},
    {"noise-z", "noise multiplier of the validation margin (default 5)"},
    {"alpha", "known smallest weight"},
    {"margin-rule", "validation margin: eps/4 (default) or 3/(4M)"},
    {"subsample-budget", "small-p acceptance budget (default 0.5)"},
    {"pitch", "distinguish: weight grid pitch (default eps/(4 ell))"},
    {"margin", "distinguish: absolute margin (default from margin-rule)"},
};

using Options = std::map<std::string, std::string>;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool known_option(const std::string& key) {
    for (const auto& o : kOptions) {
        if (key == o.name) return true;
    }
    return false;
}

Options read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    Options out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParameterError(path + ":" + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (!known_option(key)) throw ParameterError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

template <class T>
T parse_integer(const std::string& key, const std::string& text) {
    T v{};
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ParameterError("--" + key + ": expected an integer, got '" + text + "'");
    return v;
}

double parse_double(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
        return v;
    } catch (const std::logic_error&) {
        throw ParameterError("--" + key + ": expected a number, got '" + text + "'");
    }
}

class Settings {
public:
    explicit Settings(Options o) : opts_(std::move(o)) {}

    bool has(const std::string& k) const { return opts_.count(k) > 0; }
    const Options& all() const { return opts_; }

    std::string str(const std::string& k) const {
        if (!has(k)) throw ParameterError("missing required option --" + k);
        return opts_.at(k);
    }
    int integer(const std::string& k) const { return parse_integer<int>(k, str(k)); }
    int integer(const std::string& k, int def) const { return has(k) ? integer(k) : def; }
    std::uint64_t u64(const std::string& k, std::uint64_t def) const {
        return has(k) ? parse_integer<std::uint64_t>(k, str(k)) : def;
    }
    double real(const std::string& k) const { return parse_double(k, str(k)); }
    double real(const std::string& k, double def) const { return has(k) ? real(k) : def; }

private:
    Options opts_;
};

RecoveryConfig recovery_config(const Settings& s) {
    RecoveryConfig c;
    c.L = s.integer("L", c.L);
    if (s.has("arc-width")) c.width_mode = config_from_json({{"arc_width", s.str("arc-width")}}).width_mode;
    c.grid_points = s.integer("grid-points", c.grid_points);
    c.coeff_tol = s.real("coeff-tol", c.coeff_tol);
    c.point_z = s.real("point-z", c.point_z);
    c.noise_z = s.real("noise-z", c.noise_z);
    if (s.has("alpha")) c.alpha_known = s.real("alpha");
    if (s.has("margin-rule")) c.margin_rule = config_from_json({{"margin_rule", s.str("margin-rule")}}).margin_rule;
    c.sample_count = s.u64("samples", c.sample_count);
    c.seed = s.u64("seed", c.seed);
    c.workers = static_cast<unsigned>(s.integer("workers", static_cast<int>(c.workers)));
    c.subsample_budget = s.real("subsample-budget", c.subsample_budget);
    if (c.grid_points < 1) throw ParameterError("--grid-points must be positive");
    if (c.workers < 1) throw ParameterError("--workers must be positive");
    if (c.L < 0) throw ParameterError("--L must be non-negative");
    return c;
}

nlohmann::json versions() {
    return {{"poprec", kVersion},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"gmp", gmp_version},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
            {"cli11", CLI11_VERSION}};
}

void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path);
}

void write_manifest(const std::string& mode, const Settings& s, const nlohmann::json& extra) {
    nlohmann::json m{{"mode", mode},
                     {"seed", s.u64("seed", 0)},
                     {"options", s.all()},
                     {"config", config_to_json(recovery_config(s))},
                     {"versions", versions()}};
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    write_json(s.str("out") + ".manifest.json", m);
}

// Trace input: a trace file, or fresh channel draws from a distribution file.
struct Input {
    std::unique_ptr<TraceSource> source;
    std::optional<SparseDistribution> truth;
    double p = 0.0;
    std::size_t count = 0;
};

Input open_traces(const Settings& s) {
    Input in;
    if (s.has("traces")) {
        TraceFileHeader h;
        auto traces = read_traces(s.str("traces"), &h);
        in.p = s.real("p", h.p);
        in.count = s.has("samples") ? std::min<std::size_t>(s.u64("samples", 0), traces.size()) : traces.size();
        in.source = std::make_unique<VectorSource>(std::move(traces));
    } else if (s.has("dist")) {
        in.truth = read_distribution(s.str("dist"));
        in.p = s.real("p");
        in.count = s.u64("samples", RecoveryConfig{}.sample_count);
        in.source = std::make_unique<ChannelSource>(*in.truth, ChannelConfig(in.p, s.u64("seed", 0)));
    } else {
        throw ParameterError("give --traces or --dist");
    }
    if (in.count == 0) throw ParameterError("at least one trace is required");
    return in;
}

ProblemParams problem(const Settings& s, int n, double p) {
    if (s.has("n") && s.integer("n") != n) throw ParameterError("--n disagrees with the input length");
    return ProblemParams(n, s.integer("ell", 1), p, s.real("eps", 0.25));
}

int cmd_simulate(const Settings& s) {
    const auto d = read_distribution(s.str("dist"));
    const ChannelConfig ch(s.real("p"), s.u64("seed", 0));
    const std::size_t count = s.u64("samples", RecoveryConfig{}.sample_count);
    if (count == 0) throw ParameterError("at least one trace is required");
    const ChannelSource src(d, ch);
    write_traces(s.str("out"), {static_cast<int>(d.n()), ch.p(), ch.seed()}, src, count);
    write_manifest("simulate", s, {{"outputs", {s.str("out")}}});
    std::cout << "wrote " << count << " traces to " << s.str("out") << '\n';
    return kExitOk;
}

int cmd_estimate(const Settings& s) {
    auto in = open_traces(s);
    const auto params = problem(s, static_cast<int>(in.source->length()), in.p);
    const auto cfg = recovery_config(s);
    const auto grid = recovery_grid(params, cfg);
    const auto est =
        accumulate_moments(*in.source, grid, 2 * params.ell() - 1, params, in.count, cfg.workers);
    write_json(s.str("out"), moments_to_json(est));
    write_manifest("estimate", s, {{"outputs", {s.str("out")}}});
    std::cout << "estimated moments at " << est.usable_indices().size() << " of " << est.points.size()
              << " grid points from " << est.sample_count << " traces\n";
    return kExitOk;
}

int cmd_recover(const Settings& s) {
    auto in = open_traces(s);
    const auto params = problem(s, static_cast<int>(in.source->length()), in.p);
    auto cfg = recovery_config(s);
    cfg.sample_count = in.count;
    const auto result = recover(*in.source, params, cfg);
    emit_report(result, s.str("out"));
    nlohmann::json extra{{"outputs", {s.str("out"), csv_path_for(s.str("out")).string()}}};
    if (in.truth) extra["tv_vs_truth"] = tv_distance(*in.truth, result.distribution);
    write_manifest("recover", s, extra);
    std::cout << distribution_to_json(result.distribution).dump() << '\n';
    if (in.truth) std::cout << "tv_vs_truth " << tv_distance(*in.truth, result.distribution) << '\n';
    return kExitOk;
}

int cmd_distinguish(const Settings& s) {
    MomentEstimates est;
    ProblemParams params(1, 1, 0.5, 0.25);
    auto cfg = recovery_config(s);
    std::optional<SparseDistribution> truth;
    if (s.has("moments")) {
        std::ifstream f(s.str("moments"));
        if (!f) throw IoError("cannot open moments file " + s.str("moments"));
        try {
            est = moments_from_json(nlohmann::json::parse(f));
        } catch (const nlohmann::json::exception& e) {
            throw IoError("cannot parse moments file: " + std::string(e.what()));
        }
        params = ProblemParams(s.integer("n"), s.integer("ell", 1), s.real("p", 0.5), s.real("eps", 0.25));
    } else {
        auto in = open_traces(s);
        truth = in.truth;
        params = problem(s, static_cast<int>(in.source->length()), in.p);
        const auto grid = recovery_grid(params, cfg);
        est = accumulate_moments(*in.source, grid, 2 * params.ell() - 1, params, in.count, cfg.workers);
    }
    const double pitch = s.real("pitch", params.eps() / (4.0 * params.ell()));
    const double margin = s.real("margin", cfg.margin_abs(params));
    const auto d = exhaustive_distinguisher(est, params, pitch, margin, cfg.noise_z);
    write_distribution(d, s.str("out"));
    nlohmann::json extra{{"outputs", {s.str("out")}}, {"pitch", pitch}, {"margin", margin}};
    if (truth) extra["tv_vs_truth"] = tv_distance(*truth, d);
    write_manifest("distinguish", s, extra);
    std::cout << distribution_to_json(d).dump() << '\n';
    return kExitOk;
}

int cmd_oracle_check(const Settings& s) {
    const int n = s.integer("n", 8);
    const int m_max = s.integer("m", 3);
    const double p = s.real("p", 0.5);
    const int count = s.integer("grid-points", 5);
    if (n < 1 || n > 12) throw ParameterError("oracle-check needs 1 <= n <= 12");
    if (m_max < 1) throw ParameterError("--m must be positive");
    const auto grid = build_arc_grid(equispaced_arc(1, ArcWidth::TwoPiOverL, count));
    double worst = 0.0;
    std::size_t cases = 0;
    for (std::uint32_t v = 0; v < (1u << n); ++v) {
        std::vector<std::uint8_t> bits(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) bits[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((v >> i) & 1u);
        const BitString x(std::move(bits));
        for (const auto& pt : grid) {
            const Complex u = eval_poly(x, pt.z);
            for (int m = 1; m <= m_max; ++m) {
                worst = std::max(worst, std::abs(exact_g_expectation(x, pt.z, m, p) - ipow(u, static_cast<unsigned>(m))));
                ++cases;
            }
        }
    }
    constexpr double kTolerance = 1e-8;
    const bool ok = worst <= kTolerance;
    const nlohmann::json report{{"n", n}, {"m", m_max}, {"p", p}, {"grid_points", grid.size()},
                                {"cases", cases}, {"max_deviation", worst}, {"tolerance", kTolerance},
                                {"pass", ok}};
    if (s.has("out")) {
        write_json(s.str("out"), report);
        write_manifest("oracle-check", s, {{"outputs", {s.str("out")}}});
    }
    std::cout << "max_deviation " << worst << " over " << cases << " cases: " << (ok ? "ok" : "FAILED") << '\n';
    return ok ? kExitOk : kExitRecovery;
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Population recovery of sparse string mixtures from deletion-channel traces"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path;
    Options given;
    std::map<std::string, std::vector<CLI::Option*>> handles;
    const std::pair<const char*, const char*> modes[] = {
        {"simulate", "sample traces from a distribution file"},
        {"estimate", "estimate moments on the recovery grid"},
        {"recover", "run the full recovery pipeline"},
        {"distinguish", "brute-force search for a matching distribution (n <= 8, ell <= 2)"},
        {"oracle-check", "check estimator unbiasedness against exact enumeration"},
    };
    for (const auto& [name, help] : modes) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "key = value file; flags override it");
        for (const auto& o : kOptions) handles[o.name].push_back(sub->add_option(std::string("--") + o.name, given[o.name], o.help));
    }

    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitParameter;
    }

    try {
        Options merged = config_path.empty() ? Options{} : read_config_file(config_path);
        for (const auto& [name, opts] : handles) {
            for (auto* o : opts) {
                if (o->count() > 0) merged[name] = given[name];
            }
        }
        const Settings s(std::move(merged));
        const std::string mode = app.get_subcommands().front()->get_name();
        if (mode == "simulate") return cmd_simulate(s);
        if (mode == "estimate") return cmd_estimate(s);
        if (mode == "recover") return cmd_recover(s);
        if (mode == "distinguish") return cmd_distinguish(s);
        return cmd_oracle_check(s);
    } catch (const ParameterError& e) {
        std::cerr << "parameter error: " << e.what() << '\n';
        return kExitParameter;
    } catch (const RecoveryError& e) {
        std::cerr << "recovery failed: " << e.what() << '\n';
        return kExitRecovery;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}

int run(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc)); }

}  // namespace poprec
