#include "poprec/support.hpp"

#include <algorithm>

namespace poprec {

namespace {

// Taylor coefficients of p at x: p(x + h) = sum_j c_j h^j, c_j = p^{(j)}(x) / j!.
std::vector<mpz_class> taylor_at(std::vector<mpz_class> c, const mpz_class& x) {
    const std::size_t d = c.size();
    for (std::size_t i = 0; i + 1 < d; ++i) {
        for (std::size_t j = d - 1; j-- > i;) c[j] += x * c[j + 1];
    }
    return c;
}

bool above_all_roots(const std::vector<mpz_class>& c, const mpz_class& x) {
    for (const auto& v : taylor_at(c, x)) {
        if (sgn(v) <= 0) return false;
    }
    return true;
}

}  // namespace

mpz_class MonicIntegerPolynomial::operator()(const mpz_class& x) const {
    mpz_class acc = 0;
    for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
    return acc;
}

mpz_class encode_string(const BitString& x) {
    mpz_class y = 0;
    for (std::size_t i = 1; i <= x.size(); ++i) {
        if (x.bit(i)) mpz_setbit(y.get_mpz_t(), i);
    }
    return y;
}

MonicIntegerPolynomial assemble_char_poly(std::span<const SymmetricPolynomial> sigmas) {
    const std::size_t l = sigmas.size();
    if (l == 0) throw ParameterError("characteristic polynomial needs sigma_1..sigma_l'");
    MonicIntegerPolynomial poly;
    poly.coeffs.assign(l + 1, 0);
    poly.coeffs[l] = 1;
    for (std::size_t k = 1; k <= l; ++k) {
        const auto& s = sigmas[k - 1];
        if (s.k != static_cast<int>(k)) throw ParameterError("sigmas must be given in order k = 1..l'");
        mpz_class at2 = 0;
        for (std::size_t i = s.coeffs.size(); i-- > 0;) at2 = at2 * 2 + s.coeffs[i];
        poly.coeffs[l - k] = (k % 2 == 0) ? at2 : mpz_class(-at2);
    }
    return poly;
}

std::vector<mpz_class> integer_roots(const MonicIntegerPolynomial& poly, int n) {
    if (poly.coeffs.empty() || poly.coeffs.back() != 1) throw ParameterError("polynomial must be monic");
    if (n < 1) throw ParameterError("integer_roots: n must be positive");
    std::vector<mpz_class> c = poly.coeffs;
    std::vector<mpz_class> roots;
    while (c.size() > 1) {
        mpz_class sum_abs = 0;
        for (const auto& v : c) sum_abs += abs(v);
        mpz_class lo = 0, hi = 1 + std::max(mpz_class(1), sum_abs);
        if (above_all_roots(c, lo)) throw CorruptInputError("characteristic polynomial has a negative root");
        // Invariant: predicate false at lo, true at hi.
        while (hi - lo > 1) {
            mpz_class mid = (lo + hi) / 2;
            (above_all_roots(c, mid) ? hi : lo) = mid;
        }
        const mpz_class r = lo;
        // Synthetic division by (z - r); the remainder is p(r).
        std::vector<mpz_class> q(c.size() - 1);
        mpz_class carry = 0;
        for (std::size_t i = c.size(); i-- > 1;) {
            carry = carry * r + c[i];
            q[i - 1] = carry;
        }
        if (carry * r + c[0] != 0) throw CorruptInputError("characteristic polynomial has a non-integer root");
        roots.push_back(r);
        c = std::move(q);
    }
    std::sort(roots.begin(), roots.end());
    if (std::adjacent_find(roots.begin(), roots.end()) != roots.end()) {
        throw CorruptInputError("characteristic polynomial has a repeated root");
    }
    mpz_class limit;
    mpz_ui_pow_ui(limit.get_mpz_t(), 2, static_cast<unsigned long>(n) + 1);
    if (roots.back() > limit) throw CorruptInputError("root exceeds 2^{n+1}");
    return roots;
}

BitString decode_string(const mpz_class& y, int n) {
    if (n < 1) throw ParameterError("decode_string: n must be positive");
    mpz_class limit;
    mpz_ui_pow_ui(limit.get_mpz_t(), 2, static_cast<unsigned long>(n) + 1);
    if (sgn(y) < 0 || y > limit - 2) throw CorruptInputError("encoding " + y.get_str() + " is out of range");
    if (mpz_tstbit(y.get_mpz_t(), 0)) throw CorruptInputError("encoding " + y.get_str() + " is odd");
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) bits[i - 1] = static_cast<std::uint8_t>(mpz_tstbit(y.get_mpz_t(), i));
    return BitString(std::move(bits));
}

std::vector<BitString> decode_support(std::span<const SymmetricPolynomial> sigmas, int n) {
    std::vector<BitString> out;
    for (const auto& y : integer_roots(assemble_char_poly(sigmas), n)) out.push_back(decode_string(y, n));
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace poprec
