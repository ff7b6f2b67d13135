#include "poprec/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <thread>

#include <nlohmann/json.hpp>

namespace poprec {

namespace {

constexpr double kSingularMagnitude = 1e-12;

void compositions_into(int remaining, Composition& prefix, std::vector<Composition>& out) {
    if (remaining == 0) {
        out.push_back(prefix);
        return;
    }
    for (int part = 1; part <= remaining; ++part) {
        prefix.push_back(part);
        compositions_into(remaining - part, prefix, out);
        prefix.pop_back();
    }
}

// Runs fn(i) for i in [0, count) over `workers` threads in contiguous chunks.
template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn fn) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (count + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            const std::size_t lo = w * chunk, hi = std::min(count, lo + chunk);
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

nlohmann::json complex_json(Complex z) { return {z.real(), z.imag()}; }

Complex complex_from(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

}  // namespace

SingularPointError::SingularPointError(std::string composition, Complex z)
    : RecoveryError("estimator is singular at z = (" + std::to_string(z.real()) + ", " +
                    std::to_string(z.imag()) + ") for composition " + composition),
      composition_(std::move(composition)),
      z_(z) {}

std::vector<Composition> compositions(int m) {
    if (m < 1) throw ParameterError("compositions: m must be at least 1");
    if (m > 30) throw ParameterError("compositions: m too large");
    std::vector<Composition> out;
    out.reserve(std::size_t{1} << (m - 1));
    Composition prefix;
    compositions_into(m, prefix, out);
    return out;
}

std::string to_string(const Composition& b) {
    std::string s = "(";
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(b[i]);
    }
    return s + ")";
}

unsigned __int128 multinomial(const Composition& b) {
    using u128 = unsigned __int128;
    const u128 max = ~u128{0};
    u128 result = 1;
    int total = 0;
    for (int part : b) {
        // result *= binom(total + part, part), built one factor at a time.
        for (int i = 1; i <= part; ++i) {
            const u128 num = static_cast<u128>(total + i);
            if (result > max / num) throw ParameterError("multinomial coefficient overflows 128 bits");
            result = result * num / static_cast<u128>(i);
        }
        total += part;
    }
    return result;
}

Complex f_sum(std::span<const std::uint8_t> bits, std::span<const Complex> w) {
    const std::size_t k = w.size();
    if (k == 0) throw ParameterError("f_sum: weight vector is empty");
    const std::size_t n = bits.size();
    if (k > n) return {0.0, 0.0};
    // acc[r] = sum_{j' < j} S_{r}(j') w_{r+1}^{j-j'}, s[r] = S_{r+1}(j) (0-based r).
    std::vector<Complex> acc(k, Complex{}), s(k, Complex{});
    Complex power{1.0, 0.0};
    Complex total{0.0, 0.0};
    for (std::size_t j = 0; j < n; ++j) {
        power *= w[0];
        for (std::size_t r = 1; r < k; ++r) acc[r] = w[r] * (acc[r] + s[r - 1]);
        if (bits[j]) {
            s[0] = power;
            for (std::size_t r = 1; r < k; ++r) s[r] = acc[r];
            total += s[k - 1];
        } else {
            std::fill(s.begin(), s.end(), Complex{});
        }
    }
    return total;
}

Complex f_sum(const Trace& trace, std::span<const Complex> w) { return f_sum(trace.bits(), w); }

GEstimator::GEstimator(Complex z, int m, double p) : m_(m) {
    if (!(p > 0.0 && p < 1.0)) throw ParameterError("estimator: p must lie in (0,1)");
    const double q = 1.0 - p;
    for (const auto& b : compositions(m)) {
        const std::size_t k = b.size();
        Term term;
        term.w.resize(k);
        int suffix = 0;
        Complex denom{1.0, 0.0};
        for (std::size_t r = k; r-- > 0;) {
            suffix += b[r];
            term.w[r] = (ipow(z, static_cast<unsigned>(suffix)) - q) / p;
            if (std::abs(term.w[r]) < kSingularMagnitude) throw SingularPointError(to_string(b), z);
            denom *= term.w[r];
        }
        unsigned weighted = 0;
        for (std::size_t r = 0; r < k; ++r) weighted += static_cast<unsigned>((r + 1) * b[r]);
        const double mult = static_cast<double>(multinomial(b));
        term.coef = mult * std::pow(p, -static_cast<double>(k)) * ipow(z, weighted) / denom;
        terms_.push_back(std::move(term));
    }
}

Complex GEstimator::operator()(std::span<const std::uint8_t> bits) const {
    Complex total{0.0, 0.0};
    for (const auto& t : terms_) total += t.coef * f_sum(bits, t.w);
    return total;
}

Complex g_estimate(const Trace& trace, Complex z, int m, const ProblemParams& params) {
    if (trace.size() != static_cast<std::size_t>(params.n())) {
        throw ParameterError("g_estimate: trace length differs from n");
    }
    return GEstimator(z, m, params.p())(trace.bits());
}

const MomentEntry& MomentEstimates::at(std::size_t point, int k) const {
    if (point >= points.size()) throw ParameterError("moment estimates: grid index out of range");
    const auto& pm = points[point];
    if (!pm.usable) throw ParameterError("moment estimates: grid point was dropped (" + pm.flag + ")");
    if (k < 0 || static_cast<std::size_t>(k) >= pm.by_k.size()) {
        throw ParameterError("moment estimates: k = " + std::to_string(k) + " not available");
    }
    return pm.by_k[static_cast<std::size_t>(k)];
}

std::vector<std::size_t> MomentEstimates::usable_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].usable) out.push_back(i);
    }
    return out;
}

TraceHistogram histogram_traces(const TraceSource& source, std::size_t count, unsigned workers) {
    if (count == 0) throw ParameterError("at least one trace is required");
    if (auto avail = source.available(); avail && *avail < count) {
        throw ParameterError("requested " + std::to_string(count) + " traces but only " +
                             std::to_string(*avail) + " are available");
    }
    const std::size_t bs = source.block_size();
    const std::size_t blocks = (count + bs - 1) / bs;
    workers = std::max(1u, workers);
    std::vector<std::map<std::vector<std::uint8_t>, std::uint64_t>> partial(workers);
    parallel_for(workers, workers, [&](std::size_t w) {
        std::vector<Trace> buf;
        for (std::size_t b = w; b < blocks; b += workers) {
            buf.clear();
            source.draw_block(b, std::min(bs, count - b * bs), buf);
            for (const auto& t : buf) ++partial[w][std::vector<std::uint8_t>(t.bits().begin(), t.bits().end())];
        }
    });
    auto& merged = partial[0];
    for (unsigned w = 1; w < workers; ++w) {
        for (auto& [key, c] : partial[w]) merged[key] += c;
    }
    return {merged.begin(), merged.end()};
}

MomentEstimates moments_from_histogram(const TraceHistogram& hist, const std::vector<GridPoint>& grid,
                                       int k_max, const ProblemParams& params, unsigned workers) {
    if (k_max < 1) throw ParameterError("k_max must be at least 1");
    if (hist.empty()) throw ParameterError("at least one trace is required");
    std::uint64_t total = 0;
    for (const auto& [bits, c] : hist) {
        if (bits.size() != static_cast<std::size_t>(params.n())) {
            throw ParameterError("trace length differs from n");
        }
        total += c;
    }
    const double N = static_cast<double>(total);

    MomentEstimates out;
    out.k_max = k_max;
    out.sample_count = total;
    for (const auto& g : grid) {
        PointMoments pm;
        pm.point = g;
        std::vector<GEstimator> est;
        try {
            for (int k = 1; k <= k_max; ++k) est.emplace_back(g.z, k, params.p());
        } catch (const SingularPointError& e) {
            pm.usable = false;
            pm.flag = e.what();
            out.points.push_back(std::move(pm));
            continue;
        }
        const std::size_t K = static_cast<std::size_t>(k_max);
        std::vector<Complex> values(hist.size() * K);
        parallel_for(hist.size(), workers, [&](std::size_t i) {
            for (std::size_t k = 0; k < K; ++k) values[i * K + k] = est[k](hist[i].first);
        });
        pm.by_k.resize(K + 1);
        pm.by_k[0] = {{1.0, 0.0}, {0.0, 0.0}, total};
        for (std::size_t k = 0; k < K; ++k) {
            Complex sum{0.0, 0.0};
            for (std::size_t i = 0; i < hist.size(); ++i) sum += static_cast<double>(hist[i].second) * values[i * K + k];
            const Complex mean = sum / N;
            double var_re = 0.0, var_im = 0.0;
            for (std::size_t i = 0; i < hist.size(); ++i) {
                const Complex d = values[i * K + k] - mean;
                const double c = static_cast<double>(hist[i].second);
                var_re += c * d.real() * d.real();
                var_im += c * d.imag() * d.imag();
            }
            const double denom = total > 1 ? (N - 1.0) * N : 1.0;
            const Complex se = total > 1 ? Complex(std::sqrt(var_re / denom), std::sqrt(var_im / denom))
                                         : Complex(0.0, 0.0);
            pm.by_k[k + 1] = {mean, se, total};
        }
        out.points.push_back(std::move(pm));
    }
    return out;
}

MomentEstimates accumulate_moments(const TraceSource& source, const std::vector<GridPoint>& grid,
                                   int k_max, const ProblemParams& params, std::size_t sample_count,
                                   unsigned workers) {
    if (source.length() != static_cast<std::size_t>(params.n())) {
        throw ParameterError("trace source length differs from n");
    }
    return moments_from_histogram(histogram_traces(source, sample_count, workers), grid, k_max, params,
                                  workers);
}

nlohmann::json moments_to_json(const MomentEstimates& m) {
    nlohmann::json j;
    j["k_max"] = m.k_max;
    j["sample_count"] = m.sample_count;
    auto& entries = j["entries"] = nlohmann::json::array();
    auto& dropped = j["dropped"] = nlohmann::json::array();
    for (const auto& pm : m.points) {
        if (!pm.usable) {
            dropped.push_back({{"z", complex_json(pm.point.z)},
                               {"grid_kind", to_string(pm.point.kind)},
                               {"index", pm.point.index},
                               {"reason", pm.flag}});
            continue;
        }
        for (std::size_t k = 0; k < pm.by_k.size(); ++k) {
            const auto& e = pm.by_k[k];
            entries.push_back({{"z", complex_json(pm.point.z)},
                               {"grid_kind", to_string(pm.point.kind)},
                               {"index", pm.point.index},
                               {"k", k},
                               {"mean", complex_json(e.mean)},
                               {"stderr", complex_json(e.std_error)},
                               {"count", e.count}});
        }
    }
    return j;
}

MomentEstimates moments_from_json(const nlohmann::json& j) {
    try {
        MomentEstimates m;
        m.k_max = j.at("k_max").get<int>();
        m.sample_count = j.at("sample_count").get<std::size_t>();
        // Points are keyed by (grid kind, index); entries and dropped points interleave.
        std::map<std::pair<int, int>, PointMoments> by_index;
        for (const auto& e : j.at("entries")) {
            const int idx = e.at("index").get<int>();
            const auto kind = grid_kind_from_string(e.at("grid_kind").get<std::string>());
            auto& pm = by_index[{static_cast<int>(kind), idx}];
            pm.point = {complex_from(e.at("z")), kind, idx};
            const auto k = e.at("k").get<std::size_t>();
            if (pm.by_k.size() <= k) pm.by_k.resize(k + 1);
            MomentEntry entry;
            entry.mean = complex_from(e.at("mean"));
            if (e.contains("stderr")) entry.std_error = complex_from(e.at("stderr"));
            entry.count = e.at("count").get<std::size_t>();
            pm.by_k[k] = entry;
        }
        if (j.contains("dropped")) {
            for (const auto& d : j.at("dropped")) {
                const int idx = d.at("index").get<int>();
                const auto kind = grid_kind_from_string(d.at("grid_kind").get<std::string>());
                auto& pm = by_index[{static_cast<int>(kind), idx}];
                pm.point = {complex_from(d.at("z")), kind, idx};
                pm.usable = false;
                pm.flag = d.at("reason").get<std::string>();
            }
        }
        for (auto& [key, pm] : by_index) {
            if (pm.usable && pm.by_k.size() != static_cast<std::size_t>(m.k_max) + 1) {
                throw ParameterError("moment file is missing k entries at grid index " + std::to_string(key.second));
            }
            m.points.push_back(std::move(pm));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError(std::string("malformed moment JSON: ") + e.what());
    }
}

}  // namespace poprec
