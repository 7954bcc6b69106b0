#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>

#include "supfaff/errors.hpp"

namespace supfaff {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;
using Complex = std::complex<double>;

/// Traits for the two scalar rings the library is instantiated with:
/// exact rationals (no rounding anywhere) and complex double.
template <class S>
struct scalar_traits;

template <>
struct scalar_traits<Rational> {
    static constexpr bool is_exact = true;
    static constexpr bool is_complex = false;

    static Rational zero() { return Rational(0); }
    static Rational one() { return Rational(1); }
    static Rational from_int(long long v) { return Rational(v); }
    static Rational from_ratio(long long p, long long q) { return Rational(p, q); }
    static bool is_zero(const Rational& v) { return v == 0; }
    static Rational conj(const Rational& v) { return v; }
    static double abs_value(const Rational& v) {
        return std::abs(static_cast<double>(v));
    }
    static Complex to_complex(const Rational& v) {
        return Complex(static_cast<double>(v), 0.0);
    }

    // sign of a real scalar; exact.
    static int sign(const Rational& v) { return v == 0 ? 0 : (v > 0 ? 1 : -1); }

    // Exact square root of a nonnegative rational; errors unless the value is
    // a perfect square (the rational lane never rounds).
    static Rational sqrt(const Rational& v) {
        if (v < 0) throw domain_error("sqrt of negative rational");
        BigInt num = boost::multiprecision::numerator(v);
        BigInt den = boost::multiprecision::denominator(v);
        BigInt rn = boost::multiprecision::sqrt(num);
        BigInt rd = boost::multiprecision::sqrt(den);
        if (rn * rn != num || rd * rd != den)
            throw domain_error("rational sqrt is not exact: " + v.str());
        return Rational(rn, rd);
    }

    static Rational unit_i(int /*i_sign*/) {
        throw domain_error("the rational scalar ring has no square root of -1");
    }
};

template <>
struct scalar_traits<Complex> {
    static constexpr bool is_exact = false;
    static constexpr bool is_complex = true;

    static Complex zero() { return Complex(0.0, 0.0); }
    static Complex one() { return Complex(1.0, 0.0); }
    static Complex from_int(long long v) { return Complex(double(v), 0.0); }
    static Complex from_ratio(long long p, long long q) {
        return Complex(double(p) / double(q), 0.0);
    }
    static bool is_zero(const Complex& v) { return v == Complex(0.0, 0.0); }
    static Complex conj(const Complex& v) { return std::conj(v); }
    static double abs_value(const Complex& v) { return std::abs(v); }
    static Complex to_complex(const Complex& v) { return v; }

    // sign of the real part; used by abs_even on real-stratum data, where the
    // imaginary part of the body must vanish up to noise.
    static int sign(const Complex& v) {
        if (v.real() == 0.0 && v.imag() == 0.0) return 0;
        if (std::abs(v.imag()) > 1e-9 * (1.0 + std::abs(v.real())))
            throw domain_error("sign of a scalar with non-real body");
        return v.real() > 0 ? 1 : -1;
    }

    static Complex sqrt(const Complex& v) { return std::sqrt(v); }

    static Complex unit_i(int i_sign) { return Complex(0.0, i_sign >= 0 ? 1.0 : -1.0); }
};

/// i^k for the chosen square root of -1.  Rational lane only admits even k.
template <class S>
S i_power(long long k, int i_sign) {
    long long r = ((k % 4) + 4) % 4;
    switch (r) {
        case 0: return scalar_traits<S>::one();
        case 2: return -scalar_traits<S>::one();
        case 1: return scalar_traits<S>::unit_i(i_sign);
        default: return -scalar_traits<S>::unit_i(i_sign);
    }
}

} // namespace supfaff
