#include "varseq/rational.hpp"

#include <cmath>
#include <sstream>

namespace varseq {

std::optional<Int> exact_root(const Int& v, unsigned long k) {
    if (k == 0) return std::nullopt;
    if (k == 1) return v;
    if (v == 0) return Int(0);
    if (v < 0) {
        if (k % 2 == 0) return std::nullopt;
        auto r = exact_root(-v, k);
        if (!r) return std::nullopt;
        return -*r;
    }
    // Newton-style bracket from a double seed, then exact check.
    double seed = std::pow(to_double(Rational(v)), 1.0 / static_cast<double>(k));
    Int guess = static_cast<long long>(std::llround(seed));
    for (Int g = guess - 2; g <= guess + 2; ++g) {
        if (g < 0) continue;
        if (int_pow(g, k) == v) return g;
    }
    return std::nullopt;
}

std::optional<Rational> exact_rational_pow(const Rational& base, const Rational& exp) {
    if (base == 0) {
        if (exp > 0) return Rational(0);
        return std::nullopt;
    }
    Int p = numerator(exp);
    Int q = denominator(exp);
    bool neg_exp = p < 0;
    Int pa = neg_exp ? Int(-p) : p;
    if (pa > 1024 || q > 64) return std::nullopt;  // keep huge powers symbolic

    Rational b = base;
    if (q > 1) {
        auto rn = exact_root(numerator(b), static_cast<unsigned long>(q));
        auto rd = exact_root(denominator(b), static_cast<unsigned long>(q));
        if (!rn || !rd) return std::nullopt;
        b = Rational(*rn, *rd);
    }
    Int num = int_pow(numerator(b), static_cast<unsigned long>(pa));
    Int den = int_pow(denominator(b), static_cast<unsigned long>(pa));
    Rational r(num, den);
    if (neg_exp) {
        if (r == 0) return std::nullopt;
        r = Rational(1) / r;
    }
    return r;
}

std::string to_string(const Rational& q) {
    std::ostringstream os;
    os << numerator(q);
    if (denominator(q) != 1) os << "/" << denominator(q);
    return os.str();
}

double to_double(const Rational& q) { return q.convert_to<double>(); }

Int factorial(long n) {
    Int f = 1;
    for (long i = 2; i <= n; ++i) f *= i;
    return f;
}

Int binomial(long n, long k) {
    if (k < 0 || k > n) return 0;
    Int r = 1;
    for (long i = 0; i < k; ++i) {
        r *= (n - i);
        r /= (i + 1);
    }
    return r;
}

}  // namespace varseq
