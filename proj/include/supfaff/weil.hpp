#pragma once

#include <bit>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>

#include "supfaff/errors.hpp"
#include "supfaff/scalar.hpp"

namespace supfaff {

/// Element of the Grassmann algebra Lambda(R^N) over a scalar ring S.
///
/// Terms are kept in canonical form: blade keys are bitmasks over the N
/// generators (bit i-1 <-> generator theta_i), stored sorted by mask value,
/// never with a zero coefficient.  The empty blade is the body; everything
/// else is the (nilpotent) soul.
template <class S>
class WeilElement {
  public:
    using scalar_type = S;
    using term_map = std::map<std::uint64_t, S>;

    WeilElement() : n_(0) {}
    explicit WeilElement(int num_generators) : n_(check_n(num_generators)) {}

    static WeilElement scalar(int num_generators, const S& value) {
        WeilElement e(num_generators);
        e.set_term(0u, value);
        return e;
    }
    static WeilElement one(int num_generators) {
        return scalar(num_generators, scalar_traits<S>::one());
    }
    /// theta_i, 1-based index.
    static WeilElement generator(int num_generators, int i) {
        WeilElement e(num_generators);
        if (i < 1 || i > num_generators)
            throw structural_error("generator index out of range");
        e.set_term(std::uint64_t(1) << (i - 1), scalar_traits<S>::one());
        return e;
    }
    /// theta_{i1}...theta_{ik} for a strictly increasing index list.
    static WeilElement blade(int num_generators, std::initializer_list<int> idx,
                             const S& coeff) {
        WeilElement e(num_generators);
        std::uint64_t mask = 0;
        int prev = 0;
        for (int i : idx) {
            if (i < 1 || i > num_generators)
                throw structural_error("generator index out of range");
            if (i <= prev) throw structural_error("blade indices must be strictly increasing");
            mask |= std::uint64_t(1) << (i - 1);
            prev = i;
        }
        e.set_term(mask, coeff);
        return e;
    }

    int num_generators() const { return n_; }
    const term_map& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    void set_term(std::uint64_t mask, const S& value) {
        if (scalar_traits<S>::is_zero(value))
            terms_.erase(mask);
        else
            terms_[mask] = value;
    }
    S coeff(std::uint64_t mask) const {
        auto it = terms_.find(mask);
        return it == terms_.end() ? scalar_traits<S>::zero() : it->second;
    }

    S body() const { return coeff(0u); }
    WeilElement soul() const {
        WeilElement r(n_);
        for (const auto& [m, c] : terms_)
            if (m != 0) r.terms_.emplace(m, c);
        return r;
    }

    bool is_even() const {
        for (const auto& [m, c] : terms_)
            if (std::popcount(m) & 1) return false;
        return true;
    }
    bool is_odd() const {
        for (const auto& [m, c] : terms_)
            if (!(std::popcount(m) & 1)) return false;
        return true;
    }
    WeilElement even_part() const {
        WeilElement r(n_);
        for (const auto& [m, c] : terms_)
            if (!(std::popcount(m) & 1)) r.terms_.emplace(m, c);
        return r;
    }
    WeilElement odd_part() const {
        WeilElement r(n_);
        for (const auto& [m, c] : terms_)
            if (std::popcount(m) & 1) r.terms_.emplace(m, c);
        return r;
    }

    WeilElement operator-() const {
        WeilElement r(n_);
        for (const auto& [m, c] : terms_) r.terms_.emplace(m, -c);
        return r;
    }

    WeilElement& operator+=(const WeilElement& o) {
        check_compatible(o);
        for (const auto& [m, c] : o.terms_) {
            auto it = terms_.find(m);
            if (it == terms_.end()) {
                terms_.emplace(m, c);
            } else {
                it->second += c;
                if (scalar_traits<S>::is_zero(it->second)) terms_.erase(it);
            }
        }
        return *this;
    }
    WeilElement& operator-=(const WeilElement& o) { return *this += (-o); }

    friend WeilElement operator+(WeilElement a, const WeilElement& b) { return a += b; }
    friend WeilElement operator-(WeilElement a, const WeilElement& b) { return a -= b; }

    friend WeilElement operator*(const WeilElement& a, const WeilElement& b) {
        a.check_compatible(b);
        WeilElement r(a.n_);
        for (const auto& [ma, ca] : a.terms_) {
            for (const auto& [mb, cb] : b.terms_) {
                if (ma & mb) continue;  // repeated generator annihilates
                S v = ca * cb;
                if (koszul_sign(ma, mb) < 0) v = -v;
                std::uint64_t m = ma | mb;
                auto it = r.terms_.find(m);
                if (it == r.terms_.end()) {
                    if (!scalar_traits<S>::is_zero(v)) r.terms_.emplace(m, v);
                } else {
                    it->second += v;
                    if (scalar_traits<S>::is_zero(it->second)) r.terms_.erase(it);
                }
            }
        }
        return r;
    }
    WeilElement& operator*=(const WeilElement& o) { return *this = *this * o; }

    friend WeilElement operator*(const WeilElement& a, const S& s) {
        WeilElement r(a.n_);
        if (scalar_traits<S>::is_zero(s)) return r;
        for (const auto& [m, c] : a.terms_) {
            S v = c * s;
            if (!scalar_traits<S>::is_zero(v)) r.terms_.emplace(m, v);
        }
        return r;
    }
    friend WeilElement operator*(const S& s, const WeilElement& a) { return a * s; }

    bool operator==(const WeilElement& o) const {
        return n_ == o.n_ && terms_ == o.terms_;
    }
    bool operator!=(const WeilElement& o) const { return !(*this == o); }

    /// Sum of coefficient magnitudes; the metric behind float tolerances.
    double norm1() const {
        double s = 0;
        for (const auto& [m, c] : terms_) s += scalar_traits<S>::abs_value(c);
        return s;
    }

    /// Sign of theta^a * theta^b for disjoint blade masks.
    static int koszul_sign(std::uint64_t a, std::uint64_t b) {
        int inversions = 0;
        while (b) {
            std::uint64_t low = b & (~b + 1);
            inversions += std::popcount(a & ~(low | (low - 1)));
            b ^= low;
        }
        return (inversions & 1) ? -1 : 1;
    }

  private:
    static int check_n(int n) {
        if (n < 0 || n > 64) throw structural_error("num_generators must be in [0,64]");
        return n;
    }
    void check_compatible(const WeilElement& o) const {
        if (n_ != o.n_)
            throw structural_error("mixing Weil algebras with different generator counts");
    }

    int n_;
    term_map terms_;
};

template <class S>
S body(const WeilElement<S>& a) {
    return a.body();
}

/// Jet evaluation of a smooth scalar function at an even element:
/// f(a) = sum_k (a - b(a))^k / k! * f^(k)(b(a)); finite by nilpotency.
/// `derivative(k)` must return f^(k) at body(a).
template <class S, class F>
WeilElement<S> smooth_apply(F&& derivative, const WeilElement<S>& a) {
    if (!a.is_even()) throw parity_error("smooth_apply requires an even element");
    const int n = a.num_generators();
    WeilElement<S> soul = a.soul();
    WeilElement<S> result = WeilElement<S>::scalar(n, derivative(0));
    WeilElement<S> power = WeilElement<S>::one(n);
    S factorial = scalar_traits<S>::one();
    for (int k = 1; k <= n + 1; ++k) {
        power = power * soul;
        if (power.is_zero()) break;
        factorial = factorial * scalar_traits<S>::from_int(k);
        S fk = derivative(k);
        if (scalar_traits<S>::is_zero(fk)) continue;
        result += power * (fk / factorial);
    }
    return result;
}

/// |a| = sign(body(a)) * a for even invertible a over a real scalar ring.
template <class S>
WeilElement<S> abs_even(const WeilElement<S>& a) {
    if (!a.is_even()) throw parity_error("abs_even requires an even element");
    int s = scalar_traits<S>::sign(a.body());
    if (s == 0) throw singular_body_error("abs_even: body is zero");
    return s > 0 ? a : -a;
}

/// Principal square root of an even element with invertible body.
/// For rationals the body must be a perfect square; the nilpotent part is the
/// exact finite binomial series.
template <class S>
WeilElement<S> sqrt_even(const WeilElement<S>& a) {
    if (!a.is_even()) throw parity_error("sqrt_even requires an even element");
    S b = a.body();
    if (scalar_traits<S>::is_zero(b)) throw singular_body_error("sqrt_even: body is zero");
    if constexpr (!scalar_traits<S>::is_complex) {
        if (scalar_traits<S>::sign(b) < 0)
            throw domain_error("sqrt_even: negative body in a real scalar ring");
    }
    const int n = a.num_generators();
    S root = scalar_traits<S>::sqrt(b);
    // t = a/b - 1 is nilpotent; sqrt(a) = sqrt(b) * sum_k binom(1/2,k) t^k.
    WeilElement<S> t = a * (scalar_traits<S>::one() / b) - WeilElement<S>::one(n);
    WeilElement<S> acc = WeilElement<S>::one(n);
    WeilElement<S> power = WeilElement<S>::one(n);
    S coeff = scalar_traits<S>::one();
    for (int k = 1; k <= n + 1; ++k) {
        power = power * t;
        if (power.is_zero()) break;
        // binom(1/2,k) = binom(1/2,k-1) * (1/2 - (k-1)) / k
        coeff = coeff * (scalar_traits<S>::from_ratio(1, 2) - scalar_traits<S>::from_int(k - 1)) /
                scalar_traits<S>::from_int(k);
        acc += power * coeff;
    }
    return acc * root;
}

/// Inverse of an even element with invertible body, by the geometric series
/// in soul/body.
template <class S>
WeilElement<S> inverse_even(const WeilElement<S>& a) {
    if (!a.is_even()) throw parity_error("inverse_even requires an even element");
    S b = a.body();
    if (scalar_traits<S>::is_zero(b)) throw singular_body_error("inverse_even: body is zero");
    const int n = a.num_generators();
    S binv = scalar_traits<S>::one() / b;
    WeilElement<S> u = a.soul() * binv;  // nilpotent
    WeilElement<S> acc = WeilElement<S>::one(n);
    WeilElement<S> power = WeilElement<S>::one(n);
    for (int k = 1; k <= n + 1; ++k) {
        power = power * u;
        if (power.is_zero()) break;
        acc += (k & 1) ? -power : power;
    }
    return acc * binv;
}

/// exp of an even element.  Rational lane requires a zero body (the soul
/// series is finite); complex lane multiplies by exp(body).
template <class S>
WeilElement<S> exp_even(const WeilElement<S>& a) {
    if (!a.is_even()) throw parity_error("exp_even requires an even element");
    S b = a.body();
    if constexpr (scalar_traits<S>::is_exact) {
        if (!scalar_traits<S>::is_zero(b))
            throw domain_error("exp_even over rationals requires a nilpotent argument");
        return smooth_apply([](int) { return scalar_traits<S>::one(); }, a);
    } else {
        S eb = std::exp(b);
        return smooth_apply([eb](int) { return eb; }, a);
    }
}

} // namespace supfaff
