#include "poprec/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace poprec {

namespace {

// Unbiased integer in [0, bound) by rejection on the top of the 64-bit range.
std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % bound;
}

double log_binomial_coefficient(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double log_binomial_pmf(int n, double p, int k) {
    return log_binomial_coefficient(n, k) + k * std::log(p) + (n - k) * std::log1p(-p);
}

const BitString& draw_string(const SparseDistribution& d, Rng& rng) {
    const double u = uniform01(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < d.size(); ++i) {
        acc += d.weights()[i];
        if (u < acc) return d.support()[i];
    }
    return d.support().back();
}

}  // namespace

Trace::Trace(std::vector<std::uint8_t> bits, std::size_t retained_count)
    : bits_(std::move(bits)), retained_(retained_count) {
    if (retained_ > bits_.size()) throw ParameterError("trace retained count exceeds its length");
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        if (bits_[i] > 1) throw ParameterError("trace bits must be 0 or 1");
        if (i >= retained_ && bits_[i] != 0) throw ParameterError("trace padding must be zero");
    }
}

Trace Trace::parse(std::string_view text) {
    std::vector<std::uint8_t> bits;
    bits.reserve(text.size());
    std::size_t last_one = 0;
    for (char c : text) {
        if (c != '0' && c != '1') throw ParameterError("invalid character in trace line");
        bits.push_back(static_cast<std::uint8_t>(c - '0'));
        if (c == '1') last_one = bits.size();
    }
    return Trace(std::move(bits), last_one);
}

std::string Trace::to_string() const {
    std::string s(bits_.size(), '0');
    for (std::size_t i = 0; i < bits_.size(); ++i) s[i] = static_cast<char>('0' + bits_[i]);
    return s;
}

ChannelConfig::ChannelConfig(double p, std::uint64_t seed) : p_(p), seed_(seed) {
    if (!(p > 0.0 && p < 1.0)) throw ParameterError("channel retention p must lie in (0,1)");
}

SubsampleConfig::SubsampleConfig(int n, int t) : n_(n), t_(t), target_p_(1.0 / std::sqrt(double(n))) {
    if (n < 1) throw ParameterError("subsample: n must be positive");
    if (t < 1) throw ParameterError("subsample: threshold t must be positive");
    if (t > n) throw ParameterError("subsample: threshold t exceeds n");
}

Rng make_stream(std::uint64_t seed, std::uint64_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32)};
    return Rng(seq);
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Trace transmit(const BitString& x, double p, Rng& rng) {
    std::vector<std::uint8_t> out(x.size(), 0);
    std::size_t kept = 0;
    for (auto b : x.bits()) {
        if (uniform01(rng) < p) out[kept++] = b;
    }
    return Trace(std::move(out), kept);
}

Trace sample_trace(const SparseDistribution& d, const ChannelConfig& cfg, Rng& rng) {
    return transmit(draw_string(d, rng), cfg.p(), rng);
}

Trace project(std::span<const std::uint8_t> source, std::span<const std::size_t> positions) {
    if (positions.size() > source.size()) throw ParameterError("project: too many positions");
    std::vector<std::uint8_t> out(source.size(), 0);
    for (std::size_t i = 0; i < positions.size(); ++i) {
        if (positions[i] >= source.size()) throw ParameterError("project: position out of range");
        if (i > 0 && positions[i] <= positions[i - 1]) {
            throw ParameterError("project: positions must be strictly increasing");
        }
        out[i] = source[positions[i]];
    }
    return Trace(std::move(out), positions.size());
}

double binomial_pmf(int n, double p, int k) {
    if (!(p > 0.0 && p < 1.0)) throw ParameterError("binomial: p must lie in (0,1)");
    if (k < 0 || k > n) return 0.0;
    return std::exp(log_binomial_pmf(n, p, k));
}

double binomial_log_pmf(int n, double p, int k) {
    if (!(p > 0.0 && p < 1.0)) throw ParameterError("binomial: p must lie in (0,1)");
    if (k < 0 || k > n) throw ParameterError("binomial_log_pmf: need 0 <= k <= n");
    return log_binomial_pmf(n, p, k);
}

double binomial_tail(int n, double p, int t) {
    if (!(p > 0.0 && p < 1.0)) throw ParameterError("binomial_tail: p must lie in (0,1)");
    if (n < 0 || t < 0 || t > n) throw ParameterError("binomial_tail: need 0 <= t <= n");
    if (t == 0) return 1.0;
    std::vector<double> logs;
    logs.reserve(static_cast<std::size_t>(n - t + 1));
    for (int k = t; k <= n; ++k) logs.push_back(log_binomial_pmf(n, p, k));
    const double top = *std::max_element(logs.begin(), logs.end());
    double sum = 0.0;
    for (double l : logs) sum += std::exp(l - top);
    return std::min(1.0, std::exp(top) * sum);
}

int choose_threshold(int n, double budget) {
    if (!(budget > 0.0 && budget <= 1.0)) throw ParameterError("choose_threshold: budget must lie in (0,1]");
    if (n < 1) throw ParameterError("choose_threshold: n must be positive");
    const int floor_t = static_cast<int>(std::ceil(2.0 * std::sqrt(double(n)) - 1e-12));
    if (floor_t > n) {
        throw ThresholdError("choose_threshold: no threshold satisfies 2 sqrt(n) <= t <= n for n = " +
                    std::to_string(n));
    }
    const double target = 1.0 / std::sqrt(double(n));
    int best = 0;
    for (int t = n; t >= 0; --t) {
        if (binomial_tail(n, target, t) >= budget) {
            best = t;
            break;
        }
    }
    return std::clamp(best, floor_t, n);
}

int sample_binomial_at_most(int n, double p, int t, Rng& rng) {
    if (t < 0) throw ParameterError("sample_binomial_at_most: t must be non-negative");
    for (;;) {
        int x = 0;
        for (int i = 0; i < n; ++i) x += uniform01(rng) < p ? 1 : 0;
        if (x <= t) return x;
    }
}

std::vector<std::size_t> sample_positions(std::size_t pool, std::size_t count, Rng& rng) {
    if (count > pool) throw ParameterError("sample_positions: count exceeds pool");
    std::vector<std::size_t> idx(pool);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < count; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_index(rng, pool - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(count);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::optional<Trace> subsample_trace(const Trace& raw, const SubsampleConfig& cfg, Rng& rng) {
    if (raw.size() != static_cast<std::size_t>(cfg.n())) {
        throw ParameterError("subsample_trace: trace length differs from configured n");
    }
    const auto t = static_cast<std::size_t>(cfg.t());
    if (raw.retained_count() < t) return std::nullopt;
    const int x = sample_binomial_at_most(cfg.n(), cfg.target_p(), cfg.t(), rng);
    const auto positions = sample_positions(raw.retained_count(), static_cast<std::size_t>(x), rng);
    return project(raw.bits(), positions);
}

ChannelSource::ChannelSource(SparseDistribution d, ChannelConfig cfg)
    : dist_(std::move(d)), cfg_(cfg) {}

void ChannelSource::draw_block(std::uint64_t block, std::size_t count, std::vector<Trace>& out) const {
    auto rng = make_stream(cfg_.seed(), block);
    count = std::min(count, kBlockSize);
    for (std::size_t i = 0; i < count; ++i) out.push_back(sample_trace(dist_, cfg_, rng));
}

SubsampledSource::SubsampledSource(SparseDistribution d, ChannelConfig raw_cfg, SubsampleConfig sub_cfg)
    : dist_(std::move(d)), raw_(raw_cfg), sub_(sub_cfg) {
    if (dist_.n() != static_cast<std::size_t>(sub_.n())) {
        throw ParameterError("SubsampledSource: distribution length differs from subsample n");
    }
}

void SubsampledSource::draw_block(std::uint64_t block, std::size_t count, std::vector<Trace>& out) const {
    constexpr std::uint64_t kMaxAttemptsPerTrace = 100'000'000;
    auto rng = make_stream(raw_.seed(), block);
    count = std::min(count, kBlockSize);
    for (std::size_t i = 0; i < count; ++i) {
        for (std::uint64_t attempt = 0;; ++attempt) {
            if (attempt == kMaxAttemptsPerTrace) {
                throw ParameterError("subsampling threshold too high: no raw trace reached length t");
            }
            auto kept = subsample_trace(sample_trace(dist_, raw_, rng), sub_, rng);
            if (kept) {
                out.push_back(std::move(*kept));
                break;
            }
        }
    }
}

VectorSource::VectorSource(std::vector<Trace> traces, std::size_t block_size)
    : traces_(std::move(traces)), block_size_(block_size) {
    if (traces_.empty()) throw ParameterError("trace list is empty");
    if (block_size_ == 0) throw ParameterError("block size must be positive");
    for (const auto& t : traces_) {
        if (t.size() != traces_.front().size()) throw ParameterError("traces differ in length");
    }
}

std::size_t VectorSource::length() const { return traces_.front().size(); }

void VectorSource::draw_block(std::uint64_t block, std::size_t count, std::vector<Trace>& out) const {
    const std::size_t first = static_cast<std::size_t>(block) * block_size_;
    const std::size_t last = std::min({traces_.size(), first + count, first + block_size_});
    for (std::size_t i = first; i < last; ++i) out.push_back(traces_[i]);
}

void write_traces(const std::filesystem::path& path, const TraceFileHeader& header,
                  const TraceSource& source, std::size_t count) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write trace file " + path.string());
    std::ostringstream p;
    p.precision(17);
    p << header.p;
    out << "#n=" << header.n << " p=" << p.str() << " seed=" << header.seed << '\n';
    std::vector<Trace> buf;
    const std::size_t bs = source.block_size();
    for (std::uint64_t block = 0; block * bs < count; ++block) {
        buf.clear();
        source.draw_block(block, std::min(bs, count - static_cast<std::size_t>(block) * bs), buf);
        for (const auto& t : buf) out << t.to_string() << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<Trace> read_traces(const std::filesystem::path& path, TraceFileHeader* header) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace file " + path.string());
    std::string line;
    TraceFileHeader parsed;
    bool have_header = false;
    std::vector<Trace> traces;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.front() == '#') {
            std::istringstream fields(line.substr(1));
            std::string field;
            while (fields >> field) {
                const auto eq = field.find('=');
                if (eq == std::string::npos) continue;
                const auto key = field.substr(0, eq);
                const auto value = field.substr(eq + 1);
                try {
                    if (key == "n") parsed.n = std::stoi(value);
                    else if (key == "p") parsed.p = std::stod(value);
                    else if (key == "seed") parsed.seed = std::stoull(value);
                } catch (const std::exception&) {
                    throw ParameterError("malformed trace header: " + line);
                }
            }
            have_header = true;
            continue;
        }
        traces.push_back(Trace::parse(line));
        if (have_header && traces.back().size() != static_cast<std::size_t>(parsed.n)) {
            throw ParameterError("trace length differs from header n in " + path.string());
        }
    }
    if (!have_header) throw ParameterError("trace file lacks the '#n=... p=... seed=...' header");
    if (header) *header = parsed;
    return traces;
}

}  // namespace poprec
