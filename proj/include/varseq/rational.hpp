#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <string>

namespace varseq {

using Int = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline bool is_integer(const Rational& q) { return denominator(q) == 1; }

inline Int to_int(const Rational& q) { return numerator(q); }

// q as a machine long; only valid for small integers (exponents, orders).
inline long to_long(const Rational& q) { return static_cast<long>(numerator(q)); }

inline Int int_pow(Int base, unsigned long e) {
    Int r = 1;
    while (e) {
        if (e & 1) r *= base;
        base *= base;
        e >>= 1;
    }
    return r;
}

inline Int rational_floor(const Rational& q) {
    Int n = numerator(q), d = denominator(q);
    Int f = n / d;
    if (n < 0 && f * d != n) f -= 1;
    return f;
}

// Exact integer k-th root, if one exists.
std::optional<Int> exact_root(const Int& v, unsigned long k);

// Exact rational power base^(p/q); nullopt when the result is irrational.
std::optional<Rational> exact_rational_pow(const Rational& base, const Rational& exp);

std::string to_string(const Rational& q);

double to_double(const Rational& q);

Int factorial(long n);
Int binomial(long n, long k);

}  // namespace varseq
