#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace statues {

// All probabilities and all numeric values are exact rationals with
// arbitrary-precision numerator and denominator. cpp_rational keeps the
// canonical reduced form (gcd 1, positive denominator) on its own.
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Probabilities are plain rationals; non-negativity is enforced where pmfs
// are built (see pmf.hpp), not by the type.
using Prob = Rational;

inline bool is_integer(const Rational& q) {
    return denominator(q) == 1;
}

inline double to_double(const Rational& q) {
    return q.convert_to<double>();
}

// "a/b", or just "a" when the denominator is 1.
inline std::string format_fraction(const Rational& q) {
    std::string s = numerator(q).str();
    if (!is_integer(q)) {
        s += '/';
        s += denominator(q).str();
    }
    return s;
}

// Fixed-point decimal with `digits` digits after the point, rounding the
// last digit half-to-even. digits == 0 renders a bare integer.
inline std::string format_decimal(const Rational& q, unsigned digits) {
    BigInt num = numerator(q);
    BigInt den = denominator(q);
    bool negative = num < 0;
    if (negative) num = -num;

    BigInt scale = 1;
    for (unsigned i = 0; i < digits; ++i) scale *= 10;

    BigInt scaled = num * scale;
    BigInt quot = scaled / den;
    BigInt rem = scaled % den;

    BigInt twice = rem * 2;
    if (twice > den || (twice == den && (quot % 2) != 0)) ++quot;

    BigInt ipart = quot / scale;
    BigInt fpart = quot % scale;

    std::string out;
    if (negative && quot != 0) out += '-';
    out += ipart.str();
    if (digits > 0) {
        std::string f = fpart.str();
        out += '.';
        out.append(digits - f.size(), '0');
        out += f;
    }
    return out;
}

// Exact rational square root, if one exists. sqrt(a/b) is rational exactly
// when a and b are both perfect squares (the fraction being reduced).
inline std::optional<Rational> exact_sqrt(const Rational& q) {
    if (q < 0) return std::nullopt;
    BigInt num = numerator(q);
    BigInt den = denominator(q);
    BigInt rn = sqrt(num);
    BigInt rd = sqrt(den);
    if (rn * rn != num || rd * rd != den) return std::nullopt;
    return Rational(rn, rd);
}

// Integer power with a (possibly negative) machine exponent.
// Precondition: base != 0 when exp < 0.
inline Rational pow_integer(const Rational& base, long long exp) {
    bool invert = exp < 0;
    unsigned long long n = invert ? static_cast<unsigned long long>(-(exp + 1)) + 1
                                  : static_cast<unsigned long long>(exp);
    Rational acc = 1;
    Rational b = base;
    while (n != 0) {
        if (n & 1) acc *= b;
        b *= b;
        n >>= 1;
    }
    if (invert) acc = Rational(1) / acc;
    return acc;
}

// Exact value of a decimal or integer literal: "7", "0.25", "2." and the
// like. Returns nullopt on anything else; never loses precision.
inline std::optional<Rational> parse_plain_number(std::string_view text) {
    if (text.empty()) return std::nullopt;
    std::size_t i = 0;
    bool negative = false;
    if (text[i] == '-') {
        negative = true;
        ++i;
    }
    BigInt mantissa = 0;
    std::size_t int_digits = 0;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
        mantissa = mantissa * 10 + (text[i] - '0');
        ++int_digits;
        ++i;
    }
    std::size_t frac_digits = 0;
    if (i < text.size() && text[i] == '.') {
        ++i;
        while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
            mantissa = mantissa * 10 + (text[i] - '0');
            ++frac_digits;
            ++i;
        }
    } else if (int_digits == 0) {
        return std::nullopt;
    }
    if (i != text.size() || (int_digits == 0 && frac_digits == 0)) return std::nullopt;
    BigInt scale = 1;
    for (std::size_t k = 0; k < frac_digits; ++k) scale *= 10;
    Rational out(mantissa, scale);
    if (negative) out = -out;
    return out;
}

} // namespace statues
