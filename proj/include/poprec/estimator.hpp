#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "poprec/channel.hpp"
#include "poprec/core.hpp"
#include "poprec/zgrid.hpp"

namespace poprec {

/// Some w_{B,r} = (z^{b_r+...+b_k} - q)/p vanishes (|w| < 1e-12) at this z.
class SingularPointError : public RecoveryError {
public:
    SingularPointError(std::string composition, Complex z);

    const std::string& composition() const noexcept { return composition_; }
    Complex z() const noexcept { return z_; }

private:
    std::string composition_;
    Complex z_;
};

/// Ordered tuple of positive parts.
using Composition = std::vector<int>;

/// All 2^{m-1} compositions of m, lexicographic by parts.
std::vector<Composition> compositions(int m);

std::string to_string(const Composition& b);

/// m! / (b_1! ... b_k!) in 128-bit integers; overflow is a ParameterError.
unsigned __int128 multinomial(const Composition& b);

/// f(x, w) = sum over i_1 < ... < i_k of x_{i_1}...x_{i_k} w_1^{i_1} w_2^{i_2-i_1} ... w_k^{i_k-i_{k-1}},
/// in O(n k) by a prefix recurrence.
Complex f_sum(std::span<const std::uint8_t> bits, std::span<const Complex> w);
Complex f_sum(const Trace& trace, std::span<const Complex> w);

/// g_m(., z) with its composition weights precomputed. The constructor throws
/// SingularPointError if some w_{B,r} vanishes.
class GEstimator {
public:
    GEstimator(Complex z, int m, double p);

    int m() const noexcept { return m_; }
    Complex operator()(std::span<const std::uint8_t> bits) const;

private:
    struct Term {
        Complex coef;
        std::vector<Complex> w;
    };
    int m_;
    std::vector<Term> terms_;
};

/// Unbiased estimator of P(z; x)^m from one trace of x.
Complex g_estimate(const Trace& trace, Complex z, int m, const ProblemParams& params);

struct MomentEntry {
    Complex mean;
    /// Standard error of the mean, real and imaginary parts separately.
    Complex std_error;
    std::size_t count = 0;
};

struct PointMoments {
    GridPoint point;
    bool usable = true;
    std::string flag;             // reason the point was dropped
    std::vector<MomentEntry> by_k;  // k = 0..k_max when usable
};

/// Sample means of g_k(trace, z) per grid point and 0 <= k <= k_max.
struct MomentEstimates {
    int k_max = 0;
    std::size_t sample_count = 0;
    std::vector<PointMoments> points;

    const MomentEntry& at(std::size_t point, int k) const;
    std::vector<std::size_t> usable_indices() const;
};

/// Distinct traces with multiplicities, sorted by bits.
using TraceHistogram = std::vector<std::pair<std::vector<std::uint8_t>, std::uint64_t>>;

/// Draws the first `count` traces of the source (block order) and counts them.
/// The result does not depend on `workers`.
TraceHistogram histogram_traces(const TraceSource& source, std::size_t count, unsigned workers = 1);

/// Moments from a trace histogram. Points where g is singular are kept with
/// usable = false and a flag.
MomentEstimates moments_from_histogram(const TraceHistogram& hist, const std::vector<GridPoint>& grid,
                                       int k_max, const ProblemParams& params, unsigned workers = 1);

MomentEstimates accumulate_moments(const TraceSource& source, const std::vector<GridPoint>& grid,
                                   int k_max, const ProblemParams& params, std::size_t sample_count,
                                   unsigned workers = 1);

nlohmann::json moments_to_json(const MomentEstimates& m);
MomentEstimates moments_from_json(const nlohmann::json& j);

}  // namespace poprec
