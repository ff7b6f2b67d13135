#pragma once

#include <map>
#include <string>
#include <vector>

#include <gmpxx.h>

#include "poprec/core.hpp"
#include "poprec/estimator.hpp"
#include "poprec/zgrid.hpp"

namespace poprec {

/// Brute-force references used by the tests. Everything here enumerates and
/// is only meant for tiny n.

/// Padded trace rendering -> probability.
using ExactTraceLaw = std::map<std::string, long double>;

/// Law of the channel output, summed over all 2^n retention subsets. n <= 16.
ExactTraceLaw exact_trace_law(const BitString& x, double p);

/// Law of a p-trace conditioned on at most `max_len` retained bits. n <= 16.
ExactTraceLaw conditioned_trace_law(const BitString& x, double p, int max_len);

/// Law of subsample_trace output for raw retention p_raw and threshold t,
/// conditioned on the raw trace being kept. Enumerates raw subsets, X and
/// every X-subset of the retained prefix. n <= 10.
ExactTraceLaw subsampled_trace_law(const BitString& x, double p_raw, int t);

long double law_tv(const ExactTraceLaw& a, const ExactTraceLaw& b);

/// E[g_m(trace, z)] over the exact trace law. n <= 12.
Complex exact_g_expectation(const BitString& x, Complex z, int m, double p);

/// sigma_1..sigma_l of the values P(z; x^(i)) by expansion over subsets.
std::vector<Complex> exact_sigma(const SparseDistribution& d, Complex z);
std::vector<Complex> exact_sigma(const std::vector<BitString>& support, Complex z);

/// sigma_1..sigma_l from the unweighted power sums via Newton's identities.
std::vector<Complex> newton_sigma(const std::vector<BitString>& support, Complex z);

/// Integer coefficient vectors of sigma_k(z) for k = 1..l, by subset expansion.
std::vector<std::vector<mpz_class>> exact_symmetric_polynomials(const std::vector<BitString>& support);

/// Moment estimates carrying the exact power sums b_k(z) (zero standard error).
MomentEstimates exact_moments(const SparseDistribution& d, const std::vector<GridPoint>& grid, int k_max,
                              std::size_t nominal_count = 1);

}  // namespace poprec
