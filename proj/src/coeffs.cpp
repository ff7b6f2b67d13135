#include "poprec/coeffs.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace poprec {

namespace {

constexpr double kMaxExactDouble = 9007199254740992.0;  // 2^53
constexpr double kIntervalSlack = 1e-7;
constexpr std::size_t kMaxCheckedCandidates = 64;

double to_double_checked(const mpz_class& v) {
    const double d = v.get_d();
    if (std::abs(d) > kMaxExactDouble) throw ParameterError("coefficient exceeds 2^53");
    return d;
}

std::vector<std::vector<Complex>> point_powers(std::span<const SigmaPoint> points, int degree) {
    std::vector<std::vector<Complex>> pw(points.size(), std::vector<Complex>(static_cast<std::size_t>(degree) + 1));
    for (std::size_t r = 0; r < points.size(); ++r) {
        Complex acc{1.0, 0.0};
        for (int j = 0; j <= degree; ++j) {
            pw[r][static_cast<std::size_t>(j)] = acc;
            acc *= points[r].z;
        }
    }
    return pw;
}

}  // namespace

NoSolutionError::NoSolutionError(int k, int index)
    : RecoveryError("no integer value of coefficient " + std::to_string(index) + " of sigma_" +
                    std::to_string(k) + " is feasible"),
      k_(k),
      index_(index) {}

AmbiguityError::AmbiguityError(int k, int index, std::vector<std::string> candidates)
    : RecoveryError([&] {
          std::string msg = "coefficient " + std::to_string(index) + " of sigma_" + std::to_string(k) +
                            " is ambiguous; feasible values:";
          for (const auto& c : candidates) msg += " " + c;
          return msg;
      }()),
      k_(k),
      index_(index),
      candidates_(std::move(candidates)) {}

bool feasible(const FeasibilityProblem& problem) {
    if (problem.num_vars < 0) throw ParameterError("feasibility problem: negative variable count");
    if (!(problem.box_upper >= 0.0) || !std::isfinite(problem.box_upper)) {
        throw ParameterError("feasibility problem: box bound must be finite and non-negative");
    }
    LinearProgram lp(problem.num_vars);
    for (int j = 0; j < problem.num_vars; ++j) lp.upper[j] = problem.box_upper;
    auto pin = [&](int j, double v) {
        if (j < 0 || j >= problem.num_vars) throw ParameterError("feasibility problem: fix index out of range");
        if (v < 0.0 || v > problem.box_upper) return false;
        if (lp.lower[j] > v || lp.upper[j] < v) return false;
        lp.lower[j] = lp.upper[j] = v;
        return true;
    };
    for (const auto& [j, v] : problem.equality_fixes) {
        if (!pin(j, v)) return false;
    }
    if (problem.integral_index >= 0 && !pin(problem.integral_index, problem.candidate)) return false;
    for (const auto& row : problem.rows) {
        if (row.a.size() != static_cast<std::size_t>(problem.num_vars)) {
            throw ParameterError("feasibility problem: row length mismatch");
        }
        if (!std::isfinite(row.lo) && !std::isfinite(row.hi)) {
            throw ParameterError("feasibility problem: row has no finite bound");
        }
        lp.rows.push_back(row);
    }
    return lp_feasible(lp);
}

mpz_class coefficient_bound(int ell, int k, int n) {
    if (ell < 1 || k < 1 || k > ell || n < 1) throw ParameterError("coefficient_bound: need 1 <= k <= l, n >= 1");
    mpz_class binom, power;
    mpz_bin_uiui(binom.get_mpz_t(), static_cast<unsigned long>(ell), static_cast<unsigned long>(k));
    mpz_ui_pow_ui(power.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
    return binom * power;
}

mpz_class coefficient_box(int ell, int k, int n, int j) {
    if (ell < 1 || k < 1 || k > ell || n < 1) throw ParameterError("coefficient_box: need 1 <= k <= l, n >= 1");
    if (j < k || j > k * n) return 0;
    // ways[s] = number of tuples of the current length with sum s.
    std::vector<mpz_class> ways(static_cast<std::size_t>(j) + 1, 0);
    ways[0] = 1;
    for (int len = 0; len < k; ++len) {
        std::vector<mpz_class> next(ways.size(), 0);
        for (int s = 0; s <= j; ++s) {
            if (ways[s] == 0) continue;
            for (int v = 1; v <= n && s + v <= j; ++v) next[s + v] += ways[s];
        }
        ways = std::move(next);
    }
    mpz_class binom;
    mpz_bin_uiui(binom.get_mpz_t(), static_cast<unsigned long>(ell), static_cast<unsigned long>(k));
    return binom * ways[j];
}

namespace {

// Band rows over all coefficients t_0..t_degree with per-index boxes.
LinearProgram coefficient_program(int k, std::span<const SigmaPoint> points, double tol, const ProblemParams& params) {
    const int degree = k * params.n();
    if (points.empty()) throw ParameterError("coefficient recovery needs at least one usable grid point");
    if (!(tol > 0.0) || !std::isfinite(tol)) throw ParameterError("coefficient tolerance must be positive");
    to_double_checked(coefficient_bound(params.ell(), k, params.n()));
    const auto pw = point_powers(points, degree);
    LinearProgram lp(degree + 1);
    for (int j = 0; j <= degree; ++j) lp.upper[j] = coefficient_box(params.ell(), k, params.n(), j).get_d();
    for (std::size_t r = 0; r < points.size(); ++r) {
        std::vector<double> re(degree + 1), im(degree + 1);
        for (int j = 0; j <= degree; ++j) {
            re[j] = pw[r][j].real();
            im[j] = pw[r][j].imag();
        }
        lp.add_band(std::move(re), points[r].sigma.real(), tol);
        lp.add_band(std::move(im), points[r].sigma.imag(), tol);
    }
    return lp;
}

// Feasible integer values of t_index, given the pins already in `lp`.
// Throws NoSolutionError when there are none; a range too wide to check is
// returned as AmbiguityError directly.
std::vector<double> integer_candidates(LinearProgram lp, int k, int index) {
    if (lp.lower[index] == lp.upper[index]) return {lp.lower[index]};
    lp.objective.assign(lp.num_vars, 0.0);
    lp.objective[index] = 1.0;
    const auto lo = solve_lp(lp);
    if (lo.status != LpStatus::Optimal) throw NoSolutionError(k, index);
    lp.objective[index] = -1.0;
    const auto hi = solve_lp(lp);
    if (hi.status != LpStatus::Optimal) throw NoSolutionError(k, index);

    const double first = std::max(lp.lower[index], std::ceil(lo.x[index] - kIntervalSlack));
    const double last = std::min(lp.upper[index], std::floor(hi.x[index] + kIntervalSlack));
    if (last < first) throw NoSolutionError(k, index);
    if (last - first + 1.0 > static_cast<double>(kMaxCheckedCandidates)) {
        // Every integer strictly inside a feasible interval is feasible.
        throw AmbiguityError(k, index, {mpz_class(first).get_str() + ".." + mpz_class(last).get_str()});
    }
    std::vector<double> hits;
    lp.objective.clear();
    for (double c = first; c <= last; c += 1.0) {
        LinearProgram pinned = lp;
        pinned.lower[index] = pinned.upper[index] = c;
        if (lp_feasible(pinned)) hits.push_back(c);
    }
    if (hits.empty()) throw NoSolutionError(k, index);
    return hits;
}

AmbiguityError ambiguity(int k, int index, const std::vector<double>& hits) {
    std::vector<std::string> names;
    for (double c : hits) names.push_back(mpz_class(c).get_str());
    return AmbiguityError(k, index, std::move(names));
}

}  // namespace

mpz_class recover_coefficient(int k, int index, std::span<const mpz_class> known,
                              std::span<const SigmaPoint> points, double tol, const ProblemParams& params) {
    if (k < 1 || k > params.ell()) throw ParameterError("sigma index k must satisfy 1 <= k <= l");
    const int degree = k * params.n();
    if (index < 0 || index > degree) throw ParameterError("coefficient index out of range");
    if (known.size() != static_cast<std::size_t>(index)) throw ParameterError("known prefix must hold t_0..t_{i-1}");
    auto lp = coefficient_program(k, points, tol, params);
    for (int j = 0; j < index; ++j) lp.lower[j] = lp.upper[j] = to_double_checked(known[j]);
    const auto hits = integer_candidates(std::move(lp), k, index);
    if (hits.size() > 1) throw ambiguity(k, index, hits);
    return mpz_class(hits.front());
}

SymmetricPolynomial recover_polynomial(int k, std::span<const SigmaPoint> points, double tol,
                                       const ProblemParams& params) {
    if (k < 1 || k > params.ell()) throw ParameterError("sigma index k must satisfy 1 <= k <= l");
    const int degree = k * params.n();
    auto lp = coefficient_program(k, points, tol, params);
    std::vector<bool> fixed(static_cast<std::size_t>(degree) + 1, false);
    int remaining = degree + 1;
    bool progress = true;
    int first_open = -1;
    std::vector<double> first_hits;
    while (remaining > 0 && progress) {
        progress = false;
        first_open = -1;
        for (int j = 0; j <= degree; ++j) {
            if (fixed[j]) continue;
            std::vector<double> hits;
            try {
                hits = integer_candidates(lp, k, j);
            } catch (const AmbiguityError&) {
                if (first_open < 0) first_open = j, first_hits.clear();
                continue;
            }
            if (hits.size() == 1) {
                lp.lower[j] = lp.upper[j] = hits.front();
                fixed[j] = true;
                --remaining;
                progress = true;
            } else if (first_open < 0) {
                first_open = j;
                first_hits = hits;
            }
        }
    }
    if (remaining > 0) {
        if (first_hits.empty()) integer_candidates(lp, k, first_open);  // rethrows the range form
        throw ambiguity(k, first_open, first_hits);
    }
    SymmetricPolynomial poly;
    poly.k = k;
    for (int j = 0; j <= degree; ++j) poly.coeffs.emplace_back(lp.lower[j]);
    return poly;
}

Complex evaluate(const SymmetricPolynomial& poly, Complex z) {
    Complex acc{0.0, 0.0};
    for (std::size_t i = poly.coeffs.size(); i-- > 0;) acc = acc * z + poly.coeffs[i].get_d();
    return acc;
}

nlohmann::json polynomial_to_json(const SymmetricPolynomial& p) {
    nlohmann::json j;
    j["k"] = p.k;
    auto& c = j["coeffs"] = nlohmann::json::array();
    for (const auto& v : p.coeffs) c.push_back(v.get_str());
    return j;
}

SymmetricPolynomial polynomial_from_json(const nlohmann::json& j) {
    try {
        SymmetricPolynomial p;
        p.k = j.at("k").get<int>();
        for (const auto& v : j.at("coeffs")) p.coeffs.emplace_back(v.get<std::string>());
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ParameterError(std::string("malformed polynomial JSON: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw ParameterError("polynomial coefficient is not a decimal integer");
    }
}

}  // namespace poprec
