#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace poprec {

using Complex = std::complex<double>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid arguments or inconsistent configuration (CLI exit code 2).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A recovery stage could not produce an answer (CLI exit code 3).
class RecoveryError : public Error {
public:
    using Error::Error;
};

/// File-system or serialization failure (CLI exit code 4).
class IoError : public Error {
public:
    using Error::Error;
};

/// Problem size and accuracy parameters: string length n, sparsity bound ell,
/// retention probability p (with q = 1 - p) and target TV error eps.
class ProblemParams {
public:
    ProblemParams(int n, int ell, double p, double eps);

    int n() const noexcept { return n_; }
    int ell() const noexcept { return ell_; }
    double p() const noexcept { return p_; }
    double q() const noexcept { return q_; }
    double eps() const noexcept { return eps_; }

    /// Same problem with a different retention probability.
    ProblemParams with_retention(double p) const { return {n_, ell_, p, eps_}; }

private:
    int n_;
    int ell_;
    double p_;
    double q_;
    double eps_;
};

/// A binary string x = x_1 ... x_n. Storage is 0-based; `bit(j)` is 1-based.
class BitString {
public:
    BitString() = default;
    explicit BitString(std::vector<std::uint8_t> bits);

    /// Parses a string of '0'/'1' characters; character j (1-based) is x_j.
    static BitString parse(std::string_view text);
    static BitString zeros(std::size_t n) { return BitString(std::vector<std::uint8_t>(n, 0)); }

    std::size_t size() const noexcept { return bits_.size(); }
    std::uint8_t bit(std::size_t j) const { return bits_.at(j - 1); }
    std::span<const std::uint8_t> bits() const noexcept { return bits_; }
    std::size_t ones() const noexcept;
    std::string to_string() const;

    auto operator<=>(const BitString&) const = default;

private:
    std::vector<std::uint8_t> bits_;
};

/// A finitely supported distribution over {0,1}^n. The support is kept sorted
/// lexicographically; weights are positive and sum to 1 within 1e-12.
class SparseDistribution {
public:
    static constexpr double kWeightSumTolerance = 1e-12;

    SparseDistribution(std::vector<BitString> support, std::vector<double> weights);

    static SparseDistribution point_mass(BitString x) { return {{std::move(x)}, {1.0}}; }

    std::size_t n() const noexcept { return support_.front().size(); }
    std::size_t size() const noexcept { return support_.size(); }
    const std::vector<BitString>& support() const noexcept { return support_; }
    const std::vector<double>& weights() const noexcept { return weights_; }

    /// Probability of x (0 when x is outside the support).
    double probability(const BitString& x) const;

    /// Throws ParameterError unless the support fits the given sparsity bound and length.
    void check_against(const ProblemParams& params) const;

    bool operator==(const SparseDistribution&) const = default;

private:
    std::vector<BitString> support_;
    std::vector<double> weights_;
};

/// P(z; x) = sum_{i=1..n} x_i z^i, evaluated with Horner's rule.
Complex eval_poly(const BitString& x, Complex z);

/// Total variation distance (1/2) sum |d0(x) - d1(x)|.
double tv_distance(const SparseDistribution& d0, const SparseDistribution& d1);

/// Exact weighted power sum b_k = sum_i a_i P(z; x^(i))^k; b_0 = 1.
Complex power_sum(const SparseDistribution& d, Complex z, int k);

/// z^k by repeated squaring (std::pow on complex goes through exp/log).
Complex ipow(Complex z, unsigned k);

// Distribution file: {"n": int, "support": ["0101", ...], "weights": [...]}.
nlohmann::json distribution_to_json(const SparseDistribution& d);
SparseDistribution distribution_from_json(const nlohmann::json& j);
SparseDistribution read_distribution(const std::filesystem::path& path);
void write_distribution(const SparseDistribution& d, const std::filesystem::path& path);

}  // namespace poprec
