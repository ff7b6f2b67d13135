// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "poprec/channel.hpp"
#include "poprec/coeffs.hpp"
#include "poprec/core.hpp"
#include "poprec/estimator.hpp"
#include "poprec/oracle.hpp"
#include "poprec/prony.hpp"
#include "poprec/recovery.hpp"
#include "poprec/support.hpp"
#include "poprec/zgrid.hpp"

using namespace poprec;

namespace {

// Pinned tolerances and limits.
constexpr double kUnbiasedTol = 1e-8;
constexpr double kUnbiasedSeconds = 60.0;
constexpr double kFsumRelTol = 1e-10;
constexpr double kPronySigmaTol = 1e-9;
constexpr double kPronyResidualTol = 1e-10;
constexpr double kCoeffNoiseFraction = 0.5;  // noise modulus <= tol / 2
constexpr double kCoeffSeconds = 300.0;
constexpr double kHardPairMeanTol = 1e-12;
constexpr double kHardPairSecondGap = 1e-3;
constexpr double kEndToEndTv = 0.1;
constexpr int kEndToEndSeeds = 10;
constexpr int kEndToEndRequired = 9;
constexpr std::size_t kEndToEndTraces = 1000000;
constexpr double kEndToEndSeconds = 600.0;
constexpr double kDistinguishEps = 0.25;
constexpr double kSubsampleTvTol = 1e-12;

struct Outcome {
    bool pass;
    std::string detail;
};

using Rng64 = std::mt19937_64;

double unif(Rng64& g, double a, double b) { return std::uniform_real_distribution<double>(a, b)(g); }
int uint_in(Rng64& g, int a, int b) { return std::uniform_int_distribution<int>(a, b)(g); }

BitString random_string(Rng64& g, int n) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(n));
    for (auto& b : bits) b = static_cast<std::uint8_t>(g() & 1u);
    return BitString(std::move(bits));
}

std::vector<BitString> distinct_strings(Rng64& g, int n, int count) {
    std::set<std::string> seen;
    std::vector<BitString> out;
    while (static_cast<int>(out.size()) < count) {
        auto x = random_string(g, n);
        if (seen.insert(x.to_string()).second) out.push_back(std::move(x));
    }
    return out;
}

std::vector<double> random_weights(Rng64& g, int count, double floor) {
    std::vector<double> w(static_cast<std::size_t>(count));
    double s = 0.0;
    for (auto& v : w) s += v = unif(g, 0.0, 1.0);
    for (auto& v : w) v = floor + (1.0 - floor * count) * v / s;
    return w;
}

Complex random_phase(Rng64& g, double modulus) { return std::polar(modulus, unif(g, 0.0, 2.0 * M_PI)); }

// e_0..e_k of the values, by expanding prod (1 + u t).
std::vector<Complex> elementary(const std::vector<Complex>& u) {
    std::vector<Complex> e(u.size() + 1, Complex(0.0, 0.0));
    e[0] = 1.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        for (std::size_t k = i + 1; k >= 1; --k) e[k] += u[i] * e[k - 1];
    }
    return e;
}

// Nodes spread around a circle of radius ~1 so the Vandermonde matrix stays tame.
std::vector<Complex> spread_nodes(Rng64& g, int count) {
    std::vector<Complex> u;
    const double step = 2.0 * M_PI / count;
    for (int i = 0; i < count; ++i) u.push_back(std::polar(unif(g, 0.8, 1.2), i * step + unif(g, -0.3, 0.3) * step));
    return u;
}

std::vector<Complex> power_sums(const std::vector<Complex>& u, const std::vector<double>& a, int count) {
    std::vector<Complex> b(static_cast<std::size_t>(count), Complex(0.0, 0.0));
    for (std::size_t i = 0; i < u.size(); ++i) {
        Complex pw = 1.0;
        for (int k = 0; k < count; ++k, pw *= u[i]) b[k] += a[i] * pw;
    }
    return b;
}

Eigen::MatrixXcd vandermonde(const std::vector<Complex>& u) {
    const int l = static_cast<int>(u.size());
    Eigen::MatrixXcd v(l, l);
    for (int i = 0; i < l; ++i) {
        Complex pw = 1.0;
        for (int j = 0; j < l; ++j, pw *= u[i]) v(i, j) = pw;
    }
    return v;
}

// w with w_{l'+1-j} = (-1)^{j-1} sigma_j, 1-based.
Eigen::VectorXcd exact_w(const std::vector<Complex>& u) {
    const auto e = elementary(u);
    const int l = static_cast<int>(u.size());
    Eigen::VectorXcd w(l);
    for (int j = 1; j <= l; ++j) w(l - j) = (j % 2 == 1 ? 1.0 : -1.0) * e[j];
    return w;
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// 1. Estimator unbiasedness.
Outcome unbiasedness() {
    Rng64 g(101);
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    int cases = 0;
    for (int s = 0; s < 50; ++s) {
        const int n = uint_in(g, 1, 8);
        const auto x = random_string(g, n);
        for (double p : {0.3, 0.5, 0.9}) {
            const int L = n < 2 ? 1 : default_L(n, p);
            const auto grid = build_arc_grid(equispaced_arc(L, ArcWidth::TwoPiOverL, 5));
            for (const auto& pt : grid) {
                const Complex u = eval_poly(x, pt.z);
                for (int m = 1; m <= 3; ++m) {
                    worst = std::max(worst, std::abs(exact_g_expectation(x, pt.z, m, p) -
                                                     ipow(u, static_cast<unsigned>(m))));
                    ++cases;
                }
            }
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {worst <= kUnbiasedTol && secs < kUnbiasedSeconds,
            std::to_string(cases) + " cases, max |E g - P^m| = " + fmt("%.3g", worst) + ", " + fmt("%.1f s", secs)};
}

// 2. f_sum against direct enumeration of index tuples.
Outcome fsum_equivalence() {
    Rng64 g(202);
    double worst = 0.0;
    for (int c = 0; c < 200; ++c) {
        const int n = uint_in(g, 1, 20);
        const int k = uint_in(g, 1, 4);
        std::vector<std::uint8_t> bits(static_cast<std::size_t>(n));
        for (auto& b : bits) b = static_cast<std::uint8_t>(g() & 1u);
        std::vector<Complex> w;
        for (int i = 0; i < k; ++i) w.push_back(std::polar(unif(g, 0.5, 1.5), unif(g, -M_PI, M_PI)));

        Complex naive = 0.0;
        double scale = 0.0;
        std::vector<int> idx(static_cast<std::size_t>(k));
        std::function<void(int, int)> rec = [&](int depth, int start) {
            if (depth == k) {
                Complex term = 1.0;
                int prev = 0;
                for (int j = 0; j < k; ++j) {
                    if (!bits[idx[j] - 1]) return;
                    term *= ipow(w[j], static_cast<unsigned>(idx[j] - prev));
                    prev = idx[j];
                }
                naive += term;
                scale += std::abs(term);
                return;
            }
            for (int i = start; i <= n; ++i) {
                idx[depth] = i;
                rec(depth + 1, i + 1);
            }
        };
        rec(0, 1);
        const Complex fast = f_sum(bits, w);
        const double err = std::abs(fast - naive);
        const double rel = scale > 0.0 ? err / std::max(std::abs(naive), scale * 1e-6) : err;
        worst = std::max(worst, rel);
    }
    return {worst <= kFsumRelTol, "200 cases, max relative error " + fmt("%.3g", worst)};
}

// 3. Prony exactness and recurrence.
Outcome prony_exactness() {
    Rng64 g(303);
    double sig_err = 0.0, resid = 0.0;
    for (int c = 0; c < 100; ++c) {
        const int l = uint_in(g, 1, 5);
        const auto u = spread_nodes(g, l);
        const auto a = random_weights(g, l, 0.05);
        const auto b = power_sums(u, a, 2 * l);
        const auto sys = HankelSystem::from_moments(b, l);
        const double amin = *std::min_element(a.begin(), a.end());
        double prod = 1.0;
        for (double v : a) prod *= v;
        const auto sigma = solve_sigma(sys, PronyThresholds(amin, prod));
        const auto e = elementary(u);
        std::vector<Complex> r;
        for (int j = 1; j <= l; ++j) {
            sig_err = std::max(sig_err, std::abs(sigma[j - 1] - e[j]));
            r.push_back((j % 2 == 1 ? 1.0 : -1.0) * sigma[j - 1]);
        }
        resid = std::max(resid, recurrence_check(b, r));
    }
    return {sig_err <= kPronySigmaTol && resid <= kPronyResidualTol,
            "100 instances, max sigma error " + fmt("%.3g", sig_err) + ", max residual " + fmt("%.3g", resid)};
}

// 4. Perturbation bound on w under entrywise moment noise.
Outcome robust_prony() {
    Rng64 g(404);
    double worst_ratio = 0.0;
    for (int c = 0; c < 100; ++c) {
        const int l = uint_in(g, 1, 5);
        const auto u = spread_nodes(g, l);
        const auto a = random_weights(g, l, 0.05);
        const auto b = power_sums(u, a, 2 * l);
        const double alpha = *std::min_element(a.begin(), a.end());
        double umax = 0.0;
        for (auto v : u) umax = std::max(umax, std::abs(v));
        const auto B = HankelSystem::from_moments(b, l).B;
        const double smin_v = smallest_singular_value(vandermonde(u));
        const double smin_b = smallest_singular_value(B);
        // Largest gamma meeting both conditioning hypotheses.
        const double gamma = std::min({1.0, smin_v / std::pow(umax, l), smin_b / alpha});
        const double eta = unif(g, 0.01, 0.5);
        const double bound = alpha * gamma * gamma * eta / (4.0 * l * l);
        auto noisy = b;
        for (auto& v : noisy) v += random_phase(g, bound);
        const auto sys = HankelSystem::from_moments(noisy, l);
        const Eigen::VectorXcd w = solve_hankel(sys);
        worst_ratio = std::max(worst_ratio, (w - exact_w(u)).norm() / eta);
    }
    return {worst_ratio <= 1.0, "100 instances, max ||w~ - w|| / eta = " + fmt("%.3g", worst_ratio)};
}

// 5. Gate soundness on constructed YES and NO instances.
Outcome gate_soundness() {
    Rng64 g(505);
    int yes_ok = 0, no_ok = 0, yes_total = 0, no_total = 0;
    while (yes_total < 50) {
        const int l = uint_in(g, 1, 4);
        const auto u = spread_nodes(g, l);
        const auto a = random_weights(g, l, 0.05);
        auto b = power_sums(u, a, 2 * l);
        const double alpha = *std::min_element(a.begin(), a.end());
        double beta = 1.0;
        for (double v : a) beta *= v;
        const double detv = std::abs(vandermonde(u).determinant());
        const double smin = smallest_singular_value(HankelSystem::from_moments(b, l).B);
        const double delta = std::min({1.0, detv, smin / alpha});
        for (auto& v : b) v += random_phase(g, unif(g, 0.0, 1.0) * alpha * delta / (4.0 * l * l));
        ++yes_total;
        yes_ok += conditioning_gate(HankelSystem::from_moments(b, l), PronyThresholds(alpha, beta, delta)) ==
                  GateResult::Yes;
    }
    while (no_total < 50) {
        const int l = uint_in(g, 2, 4);
        auto u = spread_nodes(g, l);
        u[1] = u[0] + random_phase(g, unif(g, 1e-3, 5e-2));  // near collision
        const auto a = random_weights(g, l, 0.05);
        auto b = power_sums(u, a, 2 * l);
        const double alpha = *std::min_element(a.begin(), a.end());
        double beta = 1.0;
        for (double v : a) beta *= v;
        const double detv = std::abs(vandermonde(u).determinant());
        const double smin = smallest_singular_value(HankelSystem::from_moments(b, l).B);
        // Alternate the two failure modes: |det V| < delta/3 and sigma_min < alpha delta/2.
        const double delta = (no_total % 2 == 0) ? 3.3 * detv : 2.2 * smin / alpha;
        if (!(delta > 0.0 && delta <= 1.0)) continue;
        for (auto& v : b) v += random_phase(g, unif(g, 0.0, 1.0) * alpha * delta / (4.0 * l * l));
        ++no_total;
        no_ok += conditioning_gate(HankelSystem::from_moments(b, l), PronyThresholds(alpha, beta, delta)) !=
                 GateResult::Yes;
    }
    return {yes_ok == 50 && no_ok == 50,
            "YES " + std::to_string(yes_ok) + "/50, NO " + std::to_string(no_ok) + "/50"};
}

// 6. Exact integer coefficients from noisy sigma values on a 33-point circle.
Outcome coefficient_recovery() {
    Rng64 g(606);
    const auto t0 = std::chrono::steady_clock::now();
    const double tol = RecoveryConfig{}.coeff_tol;
    const auto grid = build_arc_grid(equispaced_arc(1, ArcWidth::TwoPiOverL, 33));
    int exact = 0;
    std::string first_failure;
    for (int run = 0; run < 100; ++run) {
        const int n = uint_in(g, 2, 10);
        const int l = uint_in(g, 1, 3);
        const auto support = distinct_strings(g, n, l);
        const ProblemParams params(n, l, 0.9, 0.25);
        const auto truth = exact_symmetric_polynomials(support);
        std::vector<std::vector<SigmaPoint>> points(static_cast<std::size_t>(l));
        for (const auto& pt : grid) {
            const auto sigma = exact_sigma(support, pt.z);
            for (int k = 1; k <= l; ++k) {
                const Complex noise = random_phase(g, unif(g, 0.0, kCoeffNoiseFraction * tol));
                points[k - 1].push_back({pt.z, sigma[k - 1] + noise});
            }
        }
        bool ok = true;
        try {
            for (int k = 1; k <= l && ok; ++k) ok = recover_polynomial(k, points[k - 1], tol, params).coeffs == truth[k - 1];
        } catch (const Error& e) {
            ok = false;
            if (first_failure.empty()) first_failure = e.what();
        }
        exact += ok;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string detail = std::to_string(exact) + "/100 exact, " + fmt("%.1f s", secs);
    if (!first_failure.empty()) detail += "; first failure: " + first_failure;
    return {exact == 100 && secs < kCoeffSeconds, detail};
}

// 7. Encode, expand, factor and decode.
Outcome factor_round_trip() {
    Rng64 g(707);
    int ok = 0;
    for (int c = 0; c < 200; ++c) {
        const int n = uint_in(g, 1, 64);
        const int l = uint_in(g, 1, n >= 3 ? 5 : (1 << n));
        auto support = distinct_strings(g, n, l);
        const auto coeffs = exact_symmetric_polynomials(support);
        std::vector<SymmetricPolynomial> sigmas;
        for (int k = 1; k <= l; ++k) sigmas.push_back({k, coeffs[k - 1]});
        std::sort(support.begin(), support.end());
        try {
            ok += decode_support(sigmas, n) == support;
        } catch (const Error&) {
        }
    }
    return {ok == 200, std::to_string(ok) + "/200 round trips"};
}

// 8. The mean-only pair.
Outcome hard_pair() {
    const SparseDistribution d0({BitString::parse("00000000"), BitString::parse("11111111")}, {0.5, 0.5});
    const SparseDistribution d1({BitString::parse("00001111"), BitString::parse("11110000")}, {0.5, 0.5});
    const auto grid = recovery_grid(ProblemParams(8, 2, 0.9, 0.25), RecoveryConfig{});
    double gap1 = 0.0, gap2 = 0.0;
    for (const auto& pt : grid) {
        gap1 = std::max(gap1, std::abs(power_sum(d0, pt.z, 1) - power_sum(d1, pt.z, 1)));
        gap2 = std::max(gap2, std::abs(power_sum(d0, pt.z, 2) - power_sum(d1, pt.z, 2)));
    }
    return {gap1 <= kHardPairMeanTol && gap2 > kHardPairSecondGap,
            std::to_string(grid.size()) + " grid points, k=1 gap " + fmt("%.3g", gap1) + ", k=2 gap " +
                fmt("%.4g", gap2)};
}

// 9. End to end from channel traces.
Outcome end_to_end() {
    const SparseDistribution truth({BitString::parse("10101010"), BitString::parse("01010101")}, {0.6, 0.4});
    const ProblemParams params(8, 2, 0.9, 0.25);
    const auto t0 = std::chrono::steady_clock::now();
    int good = 0;
    double worst = 0.0;
    for (int s = 1; s <= kEndToEndSeeds; ++s) {
        RecoveryConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(s);
        cfg.sample_count = kEndToEndTraces;
        const ChannelSource src(truth, ChannelConfig(0.9, cfg.seed));
        double tv = 1.0;
        try {
            tv = tv_distance(recover(src, params, cfg).distribution, truth);
        } catch (const Error&) {
        }
        worst = std::max(worst, tv);
        good += tv <= kEndToEndTv;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {good >= kEndToEndRequired && secs < kEndToEndSeconds,
            std::to_string(good) + "/" + std::to_string(kEndToEndSeeds) + " seeds with TV <= 0.1, worst TV " +
                fmt("%.3g", worst) + ", " + fmt("%.1f s", secs)};
}

// 10. Exhaustive distinguisher on oracle moments. The search only certifies
// TV <= eps when the truth is itself a candidate, so weights are drawn from the
// search lattice; the margin is the default eps/4.
Outcome distinguisher() {
    Rng64 g(1010);
    int good = 0;
    double worst = 0.0;
    const double pitch = kDistinguishEps / 8.0;
    const int steps = static_cast<int>(std::lround(1.0 / pitch));
    for (int c = 0; c < 20; ++c) {
        const int n = uint_in(g, 2, 6);
        const auto support = distinct_strings(g, n, 2);
        const double w = uint_in(g, 1, steps - 1) * pitch;
        const SparseDistribution d(support, {w, 1.0 - w});
        const ProblemParams params(n, 2, 0.5, kDistinguishEps);
        const auto est = exact_moments(d, recovery_grid(params, RecoveryConfig{}), 3);
        double tv = 1.0;
        try {
            tv = tv_distance(exhaustive_distinguisher(est, params, pitch, RecoveryConfig{}.margin_abs(params)), d);
        } catch (const Error&) {
        }
        worst = std::max(worst, tv);
        good += tv <= kDistinguishEps;
    }
    return {good == 20, std::to_string(good) + "/20 within TV 0.25, worst " + fmt("%.3g", worst)};
}

// 11. Small-p reduction: exact laws and the binomial inequality.
Outcome small_p() {
    Rng64 g(1111);
    long double worst_tv = 0.0L;
    int laws = 0;
    for (int n = 4; n <= 6; ++n) {
        const double target = 1.0 / std::sqrt(double(n));
        for (int rep = 0; rep < 4; ++rep) {
            const auto x = random_string(g, n);
            for (int t = static_cast<int>(std::ceil(2.0 * std::sqrt(double(n)) - 1e-12)); t <= n; ++t) {
                for (double p_raw : {0.05, 0.1, 0.2}) {
                    worst_tv = std::max(worst_tv, law_tv(subsampled_trace_law(x, p_raw, t),
                                                         conditioned_trace_law(x, target, t)));
                    ++laws;
                }
            }
        }
    }
    int rows = 0, held = 0;
    for (int n : {4, 9, 16, 25, 50, 100, 400, 1000, 10000, 100000}) {
        const double target = 1.0 / std::sqrt(double(n));
        const int t_lo = static_cast<int>(std::ceil(2.0 * std::sqrt(double(n)) - 1e-12));
        for (int rep = 0; rep < 6; ++rep) {
            const int t = rep == 0 ? t_lo : uint_in(g, t_lo, n);
            const double p = target * std::exp(-unif(g, 0.01, 50.0));
            const double lhs = binomial_log_pmf(n, p, t);
            const double rhs = kBinomialExponentConstant * std::log(1.0 / p) * binomial_log_pmf(n, target, t);
            ++rows;
            held += lhs >= rhs;
        }
    }
    return {worst_tv <= kSubsampleTvTol && held == rows,
            std::to_string(laws) + " laws, max TV " + fmt("%.3g", static_cast<double>(worst_tv)) + "; binomial " +
                std::to_string(held) + "/" + std::to_string(rows) + " rows with c = " +
                fmt("%g", kBinomialExponentConstant)};
}

}  // namespace

int main() {
    const std::pair<const char*, Outcome (*)()> criteria[] = {
        {"estimator unbiasedness", unbiasedness},
        {"f_sum equivalence", fsum_equivalence},
        {"prony exactness", prony_exactness},
        {"robust prony bound", robust_prony},
        {"gate soundness", gate_soundness},
        {"coefficient recovery", coefficient_recovery},
        {"factor round trip", factor_round_trip},
        {"mean-only pair", hard_pair},
        {"end to end", end_to_end},
        {"exhaustive distinguisher", distinguisher},
        {"small-p reduction", small_p},
    };
    int failed = 0, id = 0;
    for (const auto& [name, fn] : criteria) {
        ++id;
        Outcome o{false, ""};
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
