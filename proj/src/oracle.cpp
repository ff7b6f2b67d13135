#include "poprec/oracle.hpp"

#include <bit>
#include <cmath>
#include <numeric>

namespace poprec {

namespace {

// Neumaier-compensated accumulator.
class KahanSum {
public:
    void add(long double v) {
        const long double t = sum_ + v;
        if (std::fabs(sum_) >= std::fabs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    long double value() const { return sum_ + comp_; }

private:
    long double sum_ = 0.0L;
    long double comp_ = 0.0L;
};

std::uint64_t choose(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::uint64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    return r;
}

std::vector<std::uint8_t> retained_bits(std::span<const std::uint8_t> x, std::uint32_t mask) {
    std::vector<std::uint8_t> out(x.size(), 0);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (mask & (1u << i)) out[kept++] = x[i];
    }
    return out;
}

std::string render(std::span<const std::uint8_t> bits) {
    std::string s(bits.size(), '0');
    for (std::size_t i = 0; i < bits.size(); ++i) s[i] = static_cast<char>('0' + bits[i]);
    return s;
}

long double mask_probability(std::uint32_t mask, std::size_t n, long double p) {
    const int kept = std::popcount(mask);
    return std::pow(p, static_cast<long double>(kept)) *
           std::pow(1.0L - p, static_cast<long double>(static_cast<int>(n) - kept));
}

void require_length(const BitString& x, std::size_t limit, const char* what) {
    if (x.size() > limit) {
        throw ParameterError(std::string(what) + ": refused for n > " + std::to_string(limit));
    }
}

// Polynomial with integer coefficients c[0..], c[i] the coefficient of z^i.
using IntPoly = std::vector<mpz_class>;

IntPoly multiply(const IntPoly& a, const IntPoly& b) {
    IntPoly out(a.size() + b.size() - 1, 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0) continue;
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

}  // namespace

ExactTraceLaw exact_trace_law(const BitString& x, double p) {
    require_length(x, 16, "exact_trace_law");
    std::map<std::string, KahanSum> acc;
    const std::uint32_t subsets = 1u << x.size();
    for (std::uint32_t mask = 0; mask < subsets; ++mask) {
        acc[render(retained_bits(x.bits(), mask))].add(mask_probability(mask, x.size(), p));
    }
    ExactTraceLaw law;
    for (const auto& [k, v] : acc) law[k] = v.value();
    return law;
}

ExactTraceLaw conditioned_trace_law(const BitString& x, double p, int max_len) {
    require_length(x, 16, "conditioned_trace_law");
    std::map<std::string, KahanSum> acc;
    KahanSum total;
    const std::uint32_t subsets = 1u << x.size();
    for (std::uint32_t mask = 0; mask < subsets; ++mask) {
        if (std::popcount(mask) > max_len) continue;
        const long double pr = mask_probability(mask, x.size(), p);
        acc[render(retained_bits(x.bits(), mask))].add(pr);
        total.add(pr);
    }
    ExactTraceLaw law;
    for (const auto& [k, v] : acc) law[k] = v.value() / total.value();
    return law;
}

ExactTraceLaw subsampled_trace_law(const BitString& x, double p_raw, int t) {
    require_length(x, 10, "subsampled_trace_law");
    const int n = static_cast<int>(x.size());
    const long double a = 1.0L / std::sqrt(static_cast<long double>(n));
    std::vector<long double> target(static_cast<std::size_t>(t) + 1);
    long double target_mass = 0.0L;
    for (int k = 0; k <= t; ++k) {
        target[k] = static_cast<long double>(choose(n, k)) * std::pow(a, static_cast<long double>(k)) *
                    std::pow(1.0L - a, static_cast<long double>(n - k));
        target_mass += target[k];
    }
    std::map<std::string, KahanSum> acc;
    KahanSum accepted;
    const std::uint32_t subsets = 1u << n;
    for (std::uint32_t mask = 0; mask < subsets; ++mask) {
        const int s = std::popcount(mask);
        if (s < t) continue;
        const long double pr_raw = mask_probability(mask, x.size(), p_raw);
        accepted.add(pr_raw);
        const auto raw = retained_bits(x.bits(), mask);
        for (int X = 0; X <= t; ++X) {
            const long double pr_x = target[X] / target_mass;
            const long double pr_subset = 1.0L / static_cast<long double>(choose(s, X));
            // Every X-subset of the s retained positions.
            for (std::uint32_t sub = 0; sub < (1u << s); ++sub) {
                if (std::popcount(sub) != X) continue;
                std::vector<std::size_t> positions;
                for (int i = 0; i < s; ++i) {
                    if (sub & (1u << i)) positions.push_back(static_cast<std::size_t>(i));
                }
                const Trace out = project(raw, positions);
                acc[out.to_string()].add(pr_raw * pr_x * pr_subset);
            }
        }
    }
    if (accepted.value() <= 0.0L) throw ParameterError("subsampled_trace_law: no raw trace reaches length t");
    ExactTraceLaw law;
    for (const auto& [k, v] : acc) law[k] = v.value() / accepted.value();
    return law;
}

long double law_tv(const ExactTraceLaw& a, const ExactTraceLaw& b) {
    KahanSum total;
    for (const auto& [k, v] : a) {
        auto it = b.find(k);
        total.add(std::fabs(v - (it == b.end() ? 0.0L : it->second)));
    }
    for (const auto& [k, v] : b) {
        if (!a.contains(k)) total.add(std::fabs(v));
    }
    return total.value() / 2.0L;
}

Complex exact_g_expectation(const BitString& x, Complex z, int m, double p) {
    require_length(x, 12, "exact_g_expectation");
    const GEstimator g(z, m, p);
    KahanSum re, im;
    const std::uint32_t subsets = 1u << x.size();
    for (std::uint32_t mask = 0; mask < subsets; ++mask) {
        const long double pr = mask_probability(mask, x.size(), p);
        const Complex v = g(retained_bits(x.bits(), mask));
        re.add(pr * v.real());
        im.add(pr * v.imag());
    }
    return {static_cast<double>(re.value()), static_cast<double>(im.value())};
}

std::vector<Complex> exact_sigma(const std::vector<BitString>& support, Complex z) {
    const std::size_t l = support.size();
    if (l > 20) throw ParameterError("exact_sigma: support too large to enumerate");
    std::vector<Complex> u(l);
    for (std::size_t i = 0; i < l; ++i) u[i] = eval_poly(support[i], z);
    std::vector<Complex> sigma(l, Complex{});
    for (std::uint32_t mask = 1; mask < (1u << l); ++mask) {
        Complex prod{1.0, 0.0};
        for (std::size_t i = 0; i < l; ++i) {
            if (mask & (1u << i)) prod *= u[i];
        }
        sigma[static_cast<std::size_t>(std::popcount(mask)) - 1] += prod;
    }
    return sigma;
}

std::vector<Complex> exact_sigma(const SparseDistribution& d, Complex z) { return exact_sigma(d.support(), z); }

std::vector<Complex> newton_sigma(const std::vector<BitString>& support, Complex z) {
    const std::size_t l = support.size();
    std::vector<Complex> u(l);
    for (std::size_t i = 0; i < l; ++i) u[i] = eval_poly(support[i], z);
    std::vector<Complex> power(l + 1, Complex{});
    for (std::size_t k = 1; k <= l; ++k) {
        for (const auto& v : u) power[k] += ipow(v, static_cast<unsigned>(k));
    }
    // k e_k = sum_{i=1..k} (-1)^{i-1} e_{k-i} p_i
    std::vector<Complex> e(l + 1, Complex{});
    e[0] = 1.0;
    for (std::size_t k = 1; k <= l; ++k) {
        Complex s{};
        for (std::size_t i = 1; i <= k; ++i) s += (i % 2 == 1 ? 1.0 : -1.0) * e[k - i] * power[i];
        e[k] = s / static_cast<double>(k);
    }
    return {e.begin() + 1, e.end()};
}

std::vector<std::vector<mpz_class>> exact_symmetric_polynomials(const std::vector<BitString>& support) {
    const std::size_t l = support.size();
    if (l > 16) throw ParameterError("exact_symmetric_polynomials: support too large to enumerate");
    std::vector<IntPoly> polys;
    for (const auto& x : support) {
        IntPoly p(x.size() + 1, 0);
        for (std::size_t j = 1; j <= x.size(); ++j) p[j] = x.bit(j);
        polys.push_back(std::move(p));
    }
    const std::size_t n = l ? support.front().size() : 0;
    std::vector<IntPoly> sigma(l);
    for (std::size_t k = 0; k < l; ++k) sigma[k].assign((k + 1) * n + 1, 0);
    for (std::uint32_t mask = 1; mask < (1u << l); ++mask) {
        IntPoly prod{1};
        for (std::size_t i = 0; i < l; ++i) {
            if (mask & (1u << i)) prod = multiply(prod, polys[i]);
        }
        auto& target = sigma[static_cast<std::size_t>(std::popcount(mask)) - 1];
        for (std::size_t i = 0; i < prod.size(); ++i) target[i] += prod[i];
    }
    return sigma;
}

MomentEstimates exact_moments(const SparseDistribution& d, const std::vector<GridPoint>& grid, int k_max,
                              std::size_t nominal_count) {
    MomentEstimates m;
    m.k_max = k_max;
    m.sample_count = nominal_count;
    for (const auto& g : grid) {
        PointMoments pm;
        pm.point = g;
        for (int k = 0; k <= k_max; ++k) pm.by_k.push_back({power_sum(d, g.z, k), {0.0, 0.0}, nominal_count});
        m.points.push_back(std::move(pm));
    }
    return m;
}

}  // namespace poprec
