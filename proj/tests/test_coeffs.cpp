#include <gtest/gtest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "poprec/coeffs.hpp"
#include "poprec/oracle.hpp"

using namespace poprec;

namespace {

std::vector<GridPoint> circle(int count) { return build_arc_grid(equispaced_arc(1, ArcWidth::TwoPiOverL, count)); }

std::vector<SigmaPoint> sigma_points(const std::vector<BitString>& support, const std::vector<GridPoint>& grid, int k,
                                     double noise, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-noise, noise);
    std::vector<SigmaPoint> pts;
    for (const auto& g : grid) pts.push_back({g.z, exact_sigma(support, g.z)[k - 1] + Complex(u(rng), u(rng))});
    return pts;
}

std::vector<BitString> random_support(int n, int l, std::mt19937_64& rng) {
    std::vector<BitString> s;
    while (static_cast<int>(s.size()) < l) {
        std::vector<std::uint8_t> bits(n);
        for (auto& b : bits) b = rng() & 1u;
        BitString x(bits);
        if (std::find(s.begin(), s.end(), x) == s.end()) s.push_back(x);
    }
    return s;
}

}  // namespace

TEST(Feasibility, BoxOnly) {
    FeasibilityProblem fp;
    fp.num_vars = 3;
    fp.box_upper = 2.0;
    fp.equality_fixes = {{0, 1.0}};
    EXPECT_TRUE(feasible(fp));
    fp.equality_fixes = {{0, 3.0}};
    EXPECT_FALSE(feasible(fp));
}

TEST(Feasibility, ContradictoryRow) {
    FeasibilityProblem fp;
    fp.num_vars = 2;
    fp.box_upper = 4.0;
    fp.integral_index = 0;
    fp.candidate = 1.0;
    fp.rows.push_back({{1.0, 0.0}, -LinearProgram::kInf, 0.5});
    EXPECT_FALSE(feasible(fp));
    fp.candidate = 0.0;
    EXPECT_TRUE(feasible(fp));
}

TEST(Feasibility, TruthIsFeasible) {
    const std::vector<BitString> s{BitString::parse("1101"), BitString::parse("0110")};
    const auto truth = exact_symmetric_polynomials(s);
    std::mt19937_64 rng(1);
    const auto pts = sigma_points(s, circle(9), 2, 0.0, rng);
    FeasibilityProblem fp;
    fp.num_vars = 9;
    fp.box_upper = coefficient_bound(2, 2, 4).get_d();
    for (int j = 0; j < 9; ++j) fp.equality_fixes[j] = truth[1][j].get_d();
    for (const auto& p : pts) {
        std::vector<double> re(9), im(9);
        Complex zj = 1.0;
        for (int j = 0; j < 9; ++j, zj *= p.z) {
            re[j] = zj.real();
            im[j] = zj.imag();
        }
        fp.rows.push_back({re, p.sigma.real() - 1e-9, p.sigma.real() + 1e-9});
        fp.rows.push_back({im, p.sigma.imag() - 1e-9, p.sigma.imag() + 1e-9});
    }
    EXPECT_TRUE(feasible(fp));
}

TEST(Bounds, CoefficientBoundAndBox) {
    EXPECT_EQ(coefficient_bound(3, 2, 5), mpz_class(75));
    EXPECT_THROW(coefficient_bound(2, 3, 5), ParameterError);
    // Brute-force count of k-tuples in [1, n]^k with sum j.
    for (int n : {1, 3, 6}) {
        for (int k : {1, 2, 3}) {
            std::vector<long> ways(k * n + 2, 0);
            std::vector<int> t(k, 1);
            for (;;) {
                int s = 0;
                for (int v : t) s += v;
                ++ways[s];
                int i = 0;
                while (i < k && t[i] == n) t[i++] = 1;
                if (i == k) break;
                ++t[i];
            }
            for (int j = 0; j <= k * n + 1; ++j) {
                const long binom = k == 2 ? 6 : 4;  // C(4, k)
                EXPECT_EQ(coefficient_box(4, k, n, j), mpz_class(binom * ways[j]));
                EXPECT_LE(coefficient_box(4, k, n, j), coefficient_bound(4, k, n));
            }
        }
    }
}

TEST(Recover, TwoShiftedStrings) {
    const std::vector<BitString> s{BitString::parse("10"), BitString::parse("01")};
    const ProblemParams pr(2, 2, 0.5, 0.25);
    std::mt19937_64 rng(2);
    const auto grid = circle(7);
    const auto p1 = sigma_points(s, grid, 1, 0.0, rng);
    const std::vector<mpz_class> known{0};
    EXPECT_EQ(recover_coefficient(1, 1, known, p1, 0.25, pr), mpz_class(1));
    EXPECT_EQ(recover_polynomial(1, p1, 0.25, pr).coeffs, (std::vector<mpz_class>{0, 1, 1}));
    const auto p2 = sigma_points(s, grid, 2, 0.0, rng);
    const auto poly2 = recover_polynomial(2, p2, 0.25, pr);
    EXPECT_EQ(poly2.coeffs, (std::vector<mpz_class>{0, 0, 0, 1, 0}));
    for (int i = 0; i <= 4; ++i) {
        const std::vector<mpz_class> prefix(poly2.coeffs.begin(), poly2.coeffs.begin() + i);
        EXPECT_EQ(recover_coefficient(2, i, prefix, p2, 0.25, pr), poly2.coeffs[i]);
    }
}

TEST(Recover, SingleStringGivesItsBits) {
    const auto x = BitString::parse("1101001");
    const ProblemParams pr(7, 1, 0.5, 0.25);
    std::mt19937_64 rng(3);
    const auto poly = recover_polynomial(1, sigma_points({x}, circle(9), 1, 0.1, rng), 0.25, pr);
    ASSERT_EQ(poly.coeffs.size(), 8u);
    EXPECT_EQ(poly.coeffs[0], 0);
    for (int i = 1; i <= 7; ++i) EXPECT_EQ(poly.coeffs[i], x.bit(i));
}

TEST(Recover, ExactAndNoisyInputsAgreeWithTruth) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 15; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 6);
        const int l = 1 + static_cast<int>(rng() % 3);
        if (l > (1 << n)) continue;
        const auto s = random_support(n, l, rng);
        const auto truth = exact_symmetric_polynomials(s);
        const ProblemParams pr(n, l, 0.5, 0.25);
        const auto grid = circle(l * n + 2);
        for (double noise : {0.0, 0.125}) {
            for (int k = 1; k <= l; ++k) {
                const auto poly = recover_polynomial(k, sigma_points(s, grid, k, noise, rng), 0.25, pr);
                EXPECT_EQ(poly.coeffs, truth[k - 1]) << "n=" << n << " l=" << l << " k=" << k;
                for (const auto& g : grid) {
                    EXPECT_LE(std::abs(evaluate(poly, g.z) - exact_sigma(s, g.z)[k - 1]), 1e-9);
                }
            }
        }
    }
}

TEST(Recover, TooFewPointsIsAmbiguous) {
    const std::vector<BitString> s{BitString::parse("110010"), BitString::parse("011001")};
    const ProblemParams pr(6, 2, 0.5, 0.25);
    std::mt19937_64 rng(5);
    const std::vector<GridPoint> one{{Complex(1.0, 0.0), GridKind::Arc, 0}};
    try {
        recover_polynomial(2, sigma_points(s, one, 2, 0.0, rng), 0.25, pr);
        FAIL() << "expected AmbiguityError";
    } catch (const AmbiguityError& e) {
        EXPECT_EQ(e.k(), 2);
        EXPECT_GE(e.candidates().size(), 1u);
    }
}

TEST(Recover, InconsistentValuesHaveNoSolution) {
    const ProblemParams pr(3, 1, 0.5, 0.25);
    std::vector<SigmaPoint> pts;
    for (const auto& g : circle(7)) pts.push_back({g.z, Complex(0.5, 0.0)});  // constant 0.5 is not integral
    EXPECT_THROW(recover_polynomial(1, pts, 0.1, pr), NoSolutionError);
}

TEST(Recover, RejectsBadArguments) {
    const ProblemParams pr(3, 1, 0.5, 0.25);
    const std::vector<SigmaPoint> none;
    EXPECT_THROW(recover_polynomial(1, none, 0.25, pr), ParameterError);
    const std::vector<SigmaPoint> pts{{1.0, 1.0}};
    EXPECT_THROW(recover_polynomial(2, pts, 0.25, pr), ParameterError);
    EXPECT_THROW(recover_polynomial(1, pts, 0.0, pr), ParameterError);
    const std::vector<mpz_class> wrong_prefix{0, 0};
    EXPECT_THROW(recover_coefficient(1, 1, wrong_prefix, pts, 0.25, pr), ParameterError);
}

TEST(Polynomial, JsonRoundTrip) {
    SymmetricPolynomial p{2, {0, 0, 3, mpz_class("123456789012345678901234567890")}};
    EXPECT_EQ(polynomial_from_json(polynomial_to_json(p)), p);
    EXPECT_THROW(polynomial_from_json(nlohmann::json{{"k", 1}, {"coeffs", {"x1"}}}), ParameterError);
}
