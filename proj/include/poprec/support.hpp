#pragma once

#include <span>
#include <vector>

#include <gmpxx.h>

#include "poprec/coeffs.hpp"
#include "poprec/core.hpp"

namespace poprec {

/// The recovered polynomials do not factor into distinct admissible encodings.
class CorruptInputError : public RecoveryError {
public:
    using RecoveryError::RecoveryError;
};

/// Monic integer polynomial, coefficients lowest degree first.
struct MonicIntegerPolynomial {
    std::vector<mpz_class> coeffs;

    int degree() const noexcept { return static_cast<int>(coeffs.size()) - 1; }
    mpz_class operator()(const mpz_class& x) const;
};

/// y = P(2; x) = sum_i x_i 2^i.
mpz_class encode_string(const BitString& x);

/// prod_i (z - y_i) = z^{l'} + sum_k (-1)^k sigma_k(2) z^{l'-k} from sigma_1..sigma_{l'}.
MonicIntegerPolynomial assemble_char_poly(std::span<const SymmetricPolynomial> sigmas);

/// All roots of a polynomial that splits into distinct linear factors over
/// the non-negative integers, ascending. The largest root is found by integer
/// bisection on "every derivative is positive", checked exactly and divided
/// out; this repeats until the polynomial is constant.
std::vector<mpz_class> integer_roots(const MonicIntegerPolynomial& poly, int n);

/// x with x_i = bit i of y (i = 1..n).
BitString decode_string(const mpz_class& y, int n);

/// sigmas -> char poly -> roots -> strings, sorted.
std::vector<BitString> decode_support(std::span<const SymmetricPolynomial> sigmas, int n);

}  // namespace poprec
