#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include <gmpxx.h>
#include <nlohmann/json_fwd.hpp>

#include "poprec/core.hpp"
#include "poprec/lp.hpp"

namespace poprec {

/// No integer value of coefficient `index` of sigma_k is consistent with the rows.
class NoSolutionError : public RecoveryError {
public:
    NoSolutionError(int k, int index);
    int k() const noexcept { return k_; }
    int index() const noexcept { return index_; }

private:
    int k_, index_;
};

/// More than one integer value of the coefficient is consistent with the rows.
class AmbiguityError : public RecoveryError {
public:
    AmbiguityError(int k, int index, std::vector<std::string> candidates);
    int k() const noexcept { return k_; }
    int index() const noexcept { return index_; }
    const std::vector<std::string>& candidates() const noexcept { return candidates_; }

private:
    int k_, index_;
    std::vector<std::string> candidates_;
};

/// Real-valued program over num_vars unknowns with some of them pinned:
/// 0 <= x_j <= box_upper, x_j = equality_fixes[j], x_{integral_index} = candidate,
/// and every row lo <= a.x <= hi.
struct FeasibilityProblem {
    int num_vars = 0;
    std::map<int, double> equality_fixes;
    int integral_index = -1;
    double candidate = 0.0;
    double box_upper = 0.0;
    std::vector<LinearProgram::Row> rows;
};

bool feasible(const FeasibilityProblem& problem);

/// One usable grid point with the estimate of sigma_k there.
struct SigmaPoint {
    Complex z;
    Complex sigma;
};

/// binom(l, k) * n^k.
mpz_class coefficient_bound(int ell, int k, int n);

/// Upper bound on t_j of sigma_k: binom(l, k) times the number of k-tuples in
/// [1, n]^k summing to j. Zero for j < k and j > k n.
mpz_class coefficient_box(int ell, int k, int n, int j);

/// Coefficient t_index of sigma_k(z) given t_0..t_{index-1}. The feasible
/// values of t_index form an interval (the rows are convex in the unknowns),
/// so the integers inside it are exactly the feasible integer candidates.
mpz_class recover_coefficient(int k, int index, std::span<const mpz_class> known,
                              std::span<const SigmaPoint> points, double tol, const ProblemParams& params);

struct SymmetricPolynomial {
    int k = 0;
    std::vector<mpz_class> coeffs;  // t_0..t_{k n}

    bool operator==(const SymmetricPolynomial&) const = default;
};

/// All coefficients of sigma_k. Coefficients whose feasible interval holds a
/// single integer are pinned in sweeps until every one is fixed; throws
/// AmbiguityError (lowest unresolved index) when a sweep makes no progress.
SymmetricPolynomial recover_polynomial(int k, std::span<const SigmaPoint> points, double tol,
                                       const ProblemParams& params);

Complex evaluate(const SymmetricPolynomial& poly, Complex z);

nlohmann::json polynomial_to_json(const SymmetricPolynomial& p);
SymmetricPolynomial polynomial_from_json(const nlohmann::json& j);

}  // namespace poprec
