#include "poprec/core.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

namespace poprec {

ProblemParams::ProblemParams(int n, int ell, double p, double eps)
    : n_(n), ell_(ell), p_(p), q_(1.0 - p), eps_(eps) {
    if (n < 1) throw ParameterError("n must be at least 1");
    if (ell < 1) throw ParameterError("ell must be at least 1");
    if (!(p > 0.0 && p < 1.0)) throw ParameterError("retention probability p must lie in (0,1)");
    if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("eps must lie in (0,1)");
}

BitString::BitString(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto b : bits_) {
        if (b > 1) throw ParameterError("bit strings may only contain 0 and 1");
    }
}

BitString BitString::parse(std::string_view text) {
    if (text.empty()) throw ParameterError("empty bit string");
    std::vector<std::uint8_t> bits;
    bits.reserve(text.size());
    for (char c : text) {
        if (c != '0' && c != '1') {
            throw ParameterError("invalid character in bit string: '" + std::string(1, c) + "'");
        }
        bits.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    return BitString(std::move(bits));
}

std::size_t BitString::ones() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

std::string BitString::to_string() const {
    std::string s(bits_.size(), '0');
    for (std::size_t i = 0; i < bits_.size(); ++i) s[i] = static_cast<char>('0' + bits_[i]);
    return s;
}

SparseDistribution::SparseDistribution(std::vector<BitString> support, std::vector<double> weights) {
    if (support.empty()) throw ParameterError("distribution support must be non-empty");
    if (support.size() != weights.size()) {
        throw ParameterError("support and weight vectors differ in length");
    }
    const std::size_t n = support.front().size();
    if (n == 0) throw ParameterError("support strings must be non-empty");

    std::vector<std::size_t> order(support.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return support[a] < support[b]; });

    double total = 0.0;
    for (std::size_t idx : order) {
        if (support[idx].size() != n) throw ParameterError("support strings differ in length");
        if (!(weights[idx] > 0.0) || !std::isfinite(weights[idx])) {
            throw ParameterError("mixture weights must be positive and finite");
        }
        if (!support_.empty() && support_.back() == support[idx]) {
            throw ParameterError("duplicate support string " + support[idx].to_string());
        }
        support_.push_back(std::move(support[idx]));
        weights_.push_back(weights[idx]);
        total += weights[idx];
    }
    if (std::abs(total - 1.0) > kWeightSumTolerance) {
        throw ParameterError("mixture weights must sum to 1 (got " + std::to_string(total) + ")");
    }
}

double SparseDistribution::probability(const BitString& x) const {
    auto it = std::lower_bound(support_.begin(), support_.end(), x);
    if (it == support_.end() || *it != x) return 0.0;
    return weights_[static_cast<std::size_t>(it - support_.begin())];
}

void SparseDistribution::check_against(const ProblemParams& params) const {
    if (n() != static_cast<std::size_t>(params.n())) {
        throw ParameterError("distribution string length does not match n");
    }
    if (size() > static_cast<std::size_t>(params.ell())) {
        throw ParameterError("distribution support exceeds the sparsity bound ell");
    }
}

Complex eval_poly(const BitString& x, Complex z) {
    Complex acc{0.0, 0.0};
    const auto bits = x.bits();
    for (std::size_t j = bits.size(); j-- > 0;) {
        acc = acc * z + static_cast<double>(bits[j]);
    }
    return acc * z;
}

double tv_distance(const SparseDistribution& d0, const SparseDistribution& d1) {
    if (d0.n() != d1.n()) throw ParameterError("tv_distance: distributions over different n");
    const auto& s0 = d0.support();
    const auto& s1 = d1.support();
    double total = 0.0;
    std::size_t i = 0, j = 0;
    while (i < s0.size() || j < s1.size()) {
        if (j == s1.size() || (i < s0.size() && s0[i] < s1[j])) {
            total += d0.weights()[i++];
        } else if (i == s0.size() || s1[j] < s0[i]) {
            total += d1.weights()[j++];
        } else {
            total += std::abs(d0.weights()[i++] - d1.weights()[j++]);
        }
    }
    return std::clamp(0.5 * total, 0.0, 1.0);
}

Complex ipow(Complex z, unsigned k) {
    Complex result{1.0, 0.0};
    while (k != 0) {
        if (k & 1u) result *= z;
        z *= z;
        k >>= 1u;
    }
    return result;
}

Complex power_sum(const SparseDistribution& d, Complex z, int k) {
    if (k < 0) throw ParameterError("power_sum: k must be non-negative");
    if (k == 0) return {1.0, 0.0};
    Complex total{0.0, 0.0};
    for (std::size_t i = 0; i < d.size(); ++i) {
        total += d.weights()[i] * ipow(eval_poly(d.support()[i], z), static_cast<unsigned>(k));
    }
    return total;
}

nlohmann::json distribution_to_json(const SparseDistribution& d) {
    nlohmann::json j;
    j["n"] = d.n();
    auto& support = j["support"] = nlohmann::json::array();
    for (const auto& x : d.support()) support.push_back(x.to_string());
    j["weights"] = d.weights();
    return j;
}

SparseDistribution distribution_from_json(const nlohmann::json& j) {
    try {
        const auto n = j.at("n").get<std::size_t>();
        std::vector<BitString> support;
        for (const auto& s : j.at("support")) {
            support.push_back(BitString::parse(s.get<std::string>()));
            if (support.back().size() != n) {
                throw ParameterError("support string length differs from declared n");
            }
        }
        return SparseDistribution(std::move(support), j.at("weights").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError(std::string("malformed distribution JSON: ") + e.what());
    }
}

SparseDistribution read_distribution(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open distribution file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError("cannot parse " + path.string() + ": " + e.what());
    }
    return distribution_from_json(j);
}

void write_distribution(const SparseDistribution& d, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write distribution file " + path.string());
    out << distribution_to_json(d).dump(2) << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace poprec
