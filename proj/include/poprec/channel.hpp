#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "poprec/core.hpp"

namespace poprec {

/// No admissible subsampling threshold exists for the requested n.
class ThresholdError : public ParameterError {
public:
    using ParameterError::ParameterError;
};

/// Output of the deletion channel: surviving bits followed by zero padding up
/// to the original length n.
class Trace {
public:
    Trace() = default;
    Trace(std::vector<std::uint8_t> bits, std::size_t retained_count);

    /// Parses an n-character 0/1 line. The retained count is not recoverable
    /// from a padded rendering; it is set to the position of the last one.
    static Trace parse(std::string_view text);

    std::size_t size() const noexcept { return bits_.size(); }
    std::size_t retained_count() const noexcept { return retained_; }
    std::span<const std::uint8_t> bits() const noexcept { return bits_; }
    std::string to_string() const;

    bool operator==(const Trace&) const = default;

private:
    std::vector<std::uint8_t> bits_;
    std::size_t retained_ = 0;
};

class ChannelConfig {
public:
    ChannelConfig(double p, std::uint64_t seed);

    double p() const noexcept { return p_; }
    std::uint64_t seed() const noexcept { return seed_; }

private:
    double p_;
    std::uint64_t seed_;
};

/// Parameters of the small-p reduction: keep raw traces with at least t
/// retained bits and resample them down to retention n^{-1/2}.
class SubsampleConfig {
public:
    SubsampleConfig(int n, int t);

    int n() const noexcept { return n_; }
    int t() const noexcept { return t_; }
    double target_p() const noexcept { return target_p_; }

private:
    int n_;
    int t_;
    double target_p_;
};

/// Generator used everywhere randomness is drawn. Substreams are derived from
/// (seed, stream id) through std::seed_seq.
using Rng = std::mt19937_64;

Rng make_stream(std::uint64_t seed, std::uint64_t stream_id);

/// Uniform double in [0,1) from the top 53 bits of one generator output.
double uniform01(Rng& rng);

/// Draws x from d, deletes each bit independently with probability 1 - p,
/// and zero-pads the survivors to length n.
Trace sample_trace(const SparseDistribution& d, const ChannelConfig& cfg, Rng& rng);

/// Applies the channel to a fixed string.
Trace transmit(const BitString& x, double p, Rng& rng);

/// Padded trace formed by the bits of `source` at the given (sorted, 0-based) positions.
Trace project(std::span<const std::uint8_t> source, std::span<const std::size_t> positions);

/// P(Bin(n,p) = k), computed in log space.
double binomial_pmf(int n, double p, int k);

/// ln P(Bin(n,p) = k) for 0 <= k <= n.
double binomial_log_pmf(int n, double p, int k);

/// Exponent constant c in P(Bin(n,p)=t) >= P(Bin(n,n^{-1/2})=t)^{c ln(1/p)},
/// valid for 2 sqrt(n) <= t <= n and p < n^{-1/2} (natural log). The smallest
/// working c creeps up with n (about 4.4 at n = 1e5) and tends to roughly 5.2.
inline constexpr double kBinomialExponentConstant = 6.0;

/// P(Bin(n,p) >= t), summed in log space from the largest term.
double binomial_tail(int n, double p, int t);

/// Largest t with P(Bin(n, n^{-1/2}) >= t) >= budget, clamped to
/// [ceil(2 sqrt n), n]. Throws ThresholdError when that range is empty (n < 4).
int choose_threshold(int n, double budget);

/// Draws X ~ Bin(n, p) conditioned on X <= t by rejection.
int sample_binomial_at_most(int n, double p, int t, Rng& rng);

/// Uniformly random `count`-subset of {0, ..., pool-1}, sorted ascending.
std::vector<std::size_t> sample_positions(std::size_t pool, std::size_t count, Rng& rng);

/// Small-p reduction applied to one raw trace: nothing if fewer than t bits
/// survived, otherwise a uniformly chosen subsequence of length
/// X ~ Bin(n, n^{-1/2}) | X <= t of the retained prefix.
std::optional<Trace> subsample_trace(const Trace& raw, const SubsampleConfig& cfg, Rng& rng);

/// Source of i.i.d. traces addressed by block. Block b always yields the same
/// traces for a given source, so results do not depend on how blocks are
/// spread over workers.
class TraceSource {
public:
    virtual ~TraceSource() = default;

    virtual std::size_t length() const = 0;
    virtual std::size_t block_size() const = 0;
    /// Appends up to `count` (<= block_size) traces of block `block` to `out`.
    virtual void draw_block(std::uint64_t block, std::size_t count, std::vector<Trace>& out) const = 0;
    /// Number of traces available, if finite.
    virtual std::optional<std::size_t> available() const { return std::nullopt; }
};

/// Traces of a sparse distribution through the deletion channel. Draw i lives
/// in block i / block_size, whose generator is make_stream(seed, block).
class ChannelSource final : public TraceSource {
public:
    static constexpr std::size_t kBlockSize = 4096;

    ChannelSource(SparseDistribution d, ChannelConfig cfg);

    std::size_t length() const override { return dist_.n(); }
    std::size_t block_size() const override { return kBlockSize; }
    void draw_block(std::uint64_t block, std::size_t count, std::vector<Trace>& out) const override;

private:
    SparseDistribution dist_;
    ChannelConfig cfg_;
};

/// Raw channel traces at small retention routed through subsample_trace; each
/// block keeps drawing until it has `count` accepted traces.
class SubsampledSource final : public TraceSource {
public:
    static constexpr std::size_t kBlockSize = 1024;

    SubsampledSource(SparseDistribution d, ChannelConfig raw_cfg, SubsampleConfig sub_cfg);

    std::size_t length() const override { return dist_.n(); }
    std::size_t block_size() const override { return kBlockSize; }
    void draw_block(std::uint64_t block, std::size_t count, std::vector<Trace>& out) const override;

private:
    SparseDistribution dist_;
    ChannelConfig raw_;
    SubsampleConfig sub_;
};

/// A fixed list of traces (e.g. loaded from a trace file).
class VectorSource final : public TraceSource {
public:
    explicit VectorSource(std::vector<Trace> traces, std::size_t block_size = 4096);

    std::size_t length() const override;
    std::size_t block_size() const override { return block_size_; }
    void draw_block(std::uint64_t block, std::size_t count, std::vector<Trace>& out) const override;
    std::optional<std::size_t> available() const override { return traces_.size(); }

private:
    std::vector<Trace> traces_;
    std::size_t block_size_;
};

struct TraceFileHeader {
    int n = 0;
    double p = 0.0;
    std::uint64_t seed = 0;
};

/// Trace file: header "#n=<n> p=<p> seed=<seed>" then one padded trace per line.
void write_traces(const std::filesystem::path& path, const TraceFileHeader& header,
                  const TraceSource& source, std::size_t count);
std::vector<Trace> read_traces(const std::filesystem::path& path, TraceFileHeader* header = nullptr);

}  // namespace poprec
