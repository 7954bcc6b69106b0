#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

#include "supfaff/errors.hpp"
#include "supfaff/scalar.hpp"
#include "supfaff/weil.hpp"

namespace supfaff {

/// Oriented symplectic supervector space of dimension (m,n).
///
/// The even Gram matrix is fixed block-diagonal J2 + ... + J2 with
/// B(e1,e2) = 1; the odd Gram is the identity in the orthonormal complex
/// frame (negative-signature directions fold a factor i into coordinates,
/// see to_orthonormal_frame in io/superlinalg).  i_sign selects the square
/// root of -1 used everywhere a bare i appears.
struct SymplecticSuperSpace {
    int m = 0;
    int n = 0;
    int odd_pos = 0;        // p1: positive directions of B on V1
    int odd_neg = 0;        // q1: negative directions, complexified
    int orientation = 1;    // sign of the chosen top odd coordinate product
    int i_sign = 1;         // which square root of -1 is "i"

    SymplecticSuperSpace() = default;
    SymplecticSuperSpace(int m_, int n_, int p1, int q1, int orient = 1, int i_sg = 1)
        : m(m_), n(n_), odd_pos(p1), odd_neg(q1), orientation(orient), i_sign(i_sg) {
        if (m < 0 || m % 2 != 0) throw structural_error("even dimension m must be even and >= 0");
        if (n < 0) throw structural_error("odd dimension n must be >= 0");
        if (p1 < 0 || q1 < 0 || p1 + q1 != n)
            throw structural_error("odd signature must satisfy p1+q1 = n");
        if (orient != 1 && orient != -1) throw structural_error("orientation must be +-1");
        if (i_sg != 1 && i_sg != -1) throw structural_error("i_sign must be +-1");
    }
    static SymplecticSuperSpace standard(int m_, int n_) {
        return SymplecticSuperSpace(m_, n_, n_, 0);
    }

    int dim() const { return m + n; }
    /// parity of the k-th basis vector, 0-based over (e_1..e_m, f_1..f_n).
    int parity(int k) const { return k < m ? 0 : 1; }

    /// B(e_i, e_j) for 0-based even indices.
    int gram_even(int i, int j) const {
        if (i / 2 != j / 2) return 0;
        if (j == i + 1 && i % 2 == 0) return 1;
        if (i == j + 1 && j % 2 == 0) return -1;
        return 0;
    }
    /// B(g_i, g_j) over the full 0-based basis (orthonormal odd frame).
    int gram(int i, int j) const {
        if (i < m && j < m) return gram_even(i, j);
        if (i >= m && j >= m) return i == j ? 1 : 0;
        return 0;
    }

    bool operator==(const SymplecticSuperSpace& o) const {
        return m == o.m && n == o.n && odd_pos == o.odd_pos && odd_neg == o.odd_neg &&
               orientation == o.orientation && i_sign == o.i_sign;
    }
};

/// (I, J) indexing the monomial xi^J x^I.
struct MultiIndexPair {
    std::vector<int> I;       // size m, nonnegative
    std::uint32_t J = 0;      // bitmask of n bits, bit b-1 <-> xi^b

    int abs_I() const {
        int s = 0;
        for (int v : I) s += v;
        return s;
    }
    static int abs_J(std::uint32_t J) { return std::popcount(J); }
    int abs_J() const { return std::popcount(J); }
    static std::uint32_t complement(std::uint32_t J, int n) {
        return ~J & ((n >= 32) ? 0xFFFFFFFFu : ((std::uint32_t(1) << n) - 1));
    }

    bool operator<(const MultiIndexPair& o) const {
        if (I != o.I) return I < o.I;
        return J < o.J;
    }
    bool operator==(const MultiIndexPair& o) const { return I == o.I && J == o.J; }
};

/// eps(J,J') with eps * xi^J xi^J' = xi^1...xi^n: the signature of the
/// permutation sorting (J-ascending, J'-ascending) back to (1..n).
inline int eps_sign(std::uint32_t J, int n) {
    int inversions = 0;
    std::uint32_t Jc = MultiIndexPair::complement(J, n);
    for (int b = 0; b < n; ++b) {
        if (!(Jc & (std::uint32_t(1) << b))) continue;
        // elements of J above b come after b in (J,J') but before in (1..n)
        std::uint32_t above = J & ~((std::uint32_t(1) << (b + 1)) - 1);
        inversions += std::popcount(above);
    }
    return (inversions & 1) ? -1 : 1;
}

/// Koszul sign of xi^J * xi^K for disjoint masks (same rule as Weil blades).
inline int xi_koszul_sign(std::uint32_t J, std::uint32_t K) {
    int inversions = 0;
    while (K) {
        std::uint32_t low = K & (~K + 1);
        inversions += std::popcount(J & ~(low | (low - 1)));
        K ^= low;
    }
    return (inversions & 1) ? -1 : 1;
}

/// Polynomial in m commuting coordinates x^i and n odd coordinates xi^b with
/// Weil coefficients, stored as xi^J x^I c (coefficient on the right).
template <class S>
class SuperPolynomial {
  public:
    using weil = WeilElement<S>;
    using term_map = std::map<MultiIndexPair, weil>;

    SuperPolynomial() : m_(0), n_(0), ngen_(0) {}
    SuperPolynomial(int m, int n, int num_generators)
        : m_(m), n_(n), ngen_(num_generators) {}

    static SuperPolynomial constant(int m, int n, const weil& c) {
        SuperPolynomial p(m, n, c.num_generators());
        p.add_term(MultiIndexPair{std::vector<int>(m, 0), 0u}, c);
        return p;
    }
    static SuperPolynomial one(int m, int n, int ngen) {
        return constant(m, n, weil::one(ngen));
    }
    /// coordinate x^i (1-based)
    static SuperPolynomial x(int m, int n, int ngen, int i) {
        SuperPolynomial p(m, n, ngen);
        MultiIndexPair k{std::vector<int>(m, 0), 0u};
        k.I.at(i - 1) = 1;
        p.add_term(k, weil::one(ngen));
        return p;
    }
    /// coordinate xi^b (1-based)
    static SuperPolynomial xi(int m, int n, int ngen, int b) {
        SuperPolynomial p(m, n, ngen);
        if (b < 1 || b > n) throw structural_error("odd coordinate index out of range");
        MultiIndexPair k{std::vector<int>(m, 0), std::uint32_t(1) << (b - 1)};
        p.add_term(k, weil::one(ngen));
        return p;
    }

    int m() const { return m_; }
    int n() const { return n_; }
    int num_generators() const { return ngen_; }
    const term_map& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    void add_term(const MultiIndexPair& key, const weil& c) {
        if ((int)key.I.size() != m_) throw structural_error("multi-index size mismatch");
        if (c.is_zero()) return;
        auto it = terms_.find(key);
        if (it == terms_.end()) {
            terms_.emplace(key, c);
        } else {
            it->second += c;
            if (it->second.is_zero()) terms_.erase(it);
        }
    }
    weil coeff(const MultiIndexPair& key) const {
        auto it = terms_.find(key);
        return it == terms_.end() ? weil(ngen_) : it->second;
    }

    SuperPolynomial operator-() const {
        SuperPolynomial r(m_, n_, ngen_);
        for (const auto& [k, c] : terms_) r.terms_.emplace(k, -c);
        return r;
    }
    SuperPolynomial& operator+=(const SuperPolynomial& o) {
        check_compatible(o);
        for (const auto& [k, c] : o.terms_) add_term(k, c);
        return *this;
    }
    SuperPolynomial& operator-=(const SuperPolynomial& o) { return *this += (-o); }
    friend SuperPolynomial operator+(SuperPolynomial a, const SuperPolynomial& b) { return a += b; }
    friend SuperPolynomial operator-(SuperPolynomial a, const SuperPolynomial& b) { return a -= b; }

    friend SuperPolynomial operator*(const SuperPolynomial& a, const SuperPolynomial& b) {
        a.check_compatible(b);
        SuperPolynomial r(a.m_, a.n_, a.ngen_);
        for (const auto& [ka, ca] : a.terms_) {
            for (const auto& [kb, cb] : b.terms_) {
                if (ka.J & kb.J) continue;
                // (xi^J x^I c)(xi^K x^L c') =
                //   koszul(J,K) (-1)^{p(c)|K|} xi^{J|K} x^{I+L} c c'
                int base = xi_koszul_sign(ka.J, kb.J);
                MultiIndexPair k;
                k.I.resize(a.m_);
                for (int i = 0; i < a.m_; ++i) k.I[i] = ka.I[i] + kb.I[i];
                k.J = ka.J | kb.J;
                const int absK = MultiIndexPair::abs_J(kb.J);
                weil ce = ca.even_part();
                weil co = ca.odd_part();
                if (!ce.is_zero()) {
                    weil v = ce * cb;
                    r.add_term(k, base > 0 ? v : -v);
                }
                if (!co.is_zero()) {
                    int sgn = base * ((absK & 1) ? -1 : 1);
                    weil v = co * cb;
                    r.add_term(k, sgn > 0 ? v : -v);
                }
            }
        }
        return r;
    }
    SuperPolynomial& operator*=(const SuperPolynomial& o) { return *this = *this * o; }

    friend SuperPolynomial operator*(const SuperPolynomial& a, const weil& c) {
        return a * constant(a.m_, a.n_, c);
    }
    friend SuperPolynomial operator*(const SuperPolynomial& a, const S& s) {
        SuperPolynomial r(a.m_, a.n_, a.ngen_);
        for (const auto& [k, c] : a.terms_) r.add_term(k, c * s);
        return r;
    }

    bool operator==(const SuperPolynomial& o) const {
        return m_ == o.m_ && n_ == o.n_ && terms_ == o.terms_;
    }
    bool operator!=(const SuperPolynomial& o) const { return !(*this == o); }

    double norm1() const {
        double s = 0;
        for (const auto& [k, c] : terms_) s += c.norm1();
        return s;
    }

    int max_even_degree() const {
        int d = 0;
        for (const auto& [k, c] : terms_) d = std::max(d, k.abs_I());
        return d;
    }

    /// d/dx^i (1-based); even, commutes with everything.
    SuperPolynomial d_dx(int i) const {
        SuperPolynomial r(m_, n_, ngen_);
        for (const auto& [k, c] : terms_) {
            if (k.I[i - 1] == 0) continue;
            MultiIndexPair kk = k;
            int e = kk.I[i - 1]--;
            r.add_term(kk, c * scalar_traits<S>::from_int(e));
        }
        return r;
    }
    /// Left derivative d/dxi^b (1-based).
    SuperPolynomial d_dxi(int b) const {
        SuperPolynomial r(m_, n_, ngen_);
        const std::uint32_t bit = std::uint32_t(1) << (b - 1);
        for (const auto& [k, c] : terms_) {
            if (!(k.J & bit)) continue;
            MultiIndexPair kk = k;
            kk.J &= ~bit;
            int before = std::popcount(k.J & (bit - 1));
            r.add_term(kk, (before & 1) ? -c : c);
        }
        return r;
    }

    /// Evaluate at a Weil point: x^i -> xv[i], xi^b -> ov[b] (0-based vectors,
    /// xi factors multiplied in ascending order, coefficient last).
    weil substitute(const std::vector<weil>& xv, const std::vector<weil>& ov) const {
        if ((int)xv.size() != m_ || (int)ov.size() != n_)
            throw structural_error("substitute: value vector size mismatch");
        weil acc(ngen_);
        for (const auto& [k, c] : terms_) {
            weil t = weil::one(ngen_);
            for (int b = 0; b < n_; ++b)
                if (k.J & (std::uint32_t(1) << b)) t = t * ov[b];
            for (int i = 0; i < m_; ++i)
                for (int e = 0; e < k.I[i]; ++e) t = t * xv[i];
            acc += t * c;
        }
        return acc;
    }

    /// exp of a polynomial all of whose terms are nilpotent (odd-coordinate
    /// factor, odd/nilpotent coefficient, ...).  Errors out if the series
    /// fails to terminate by the structural bound.
    static SuperPolynomial exp_nilpotent(const SuperPolynomial& p, int max_pow) {
        for (const auto& [k, c] : p.terms_)
            if (k.J == 0 && !scalar_traits<S>::is_zero(c.body()))
                throw domain_error("exp_nilpotent: argument has a body term");
        SuperPolynomial acc = one(p.m_, p.n_, p.ngen_);
        SuperPolynomial power = acc;
        S factorial = scalar_traits<S>::one();
        for (int k = 1; k <= max_pow; ++k) {
            power = power * p;
            if (power.is_zero()) return acc;
            factorial = factorial * scalar_traits<S>::from_int(k);
            acc += power * (scalar_traits<S>::one() / factorial);
        }
        if (!(power * p).is_zero())
            throw capacity_error("exp_nilpotent: series did not terminate");
        return acc;
    }

  private:
    void check_compatible(const SuperPolynomial& o) const {
        if (m_ != o.m_ || n_ != o.n_ || ngen_ != o.ngen_)
            throw structural_error("mixing polynomials over different spaces");
    }

    int m_, n_, ngen_;
    term_map terms_;
};

namespace detail {

// {x^i, .} and {xi^b, .} on a single term; generator index 1-based, kind by
// parity.  Poisson matrix: {x^i,x^j} = gram_even(i,j), {xi^a,xi^b} = delta.
template <class S>
SuperPolynomial<S> bracket_even_gen(const SymplecticSuperSpace& sp, int i,
                                    const SuperPolynomial<S>& h) {
    SuperPolynomial<S> r(h.m(), h.n(), h.num_generators());
    for (const auto& [k, c] : h.terms()) {
        for (int j = 0; j < h.m(); ++j) {
            int pi = sp.gram_even(i - 1, j);
            if (pi == 0 || k.I[j] == 0) continue;
            MultiIndexPair kk = k;
            int e = kk.I[j]--;
            S f = scalar_traits<S>::from_int(e * pi);
            r.add_term(kk, c * f);
        }
    }
    return r;
}

template <class S>
SuperPolynomial<S> bracket_odd_gen(const SuperPolynomial<S>& h, int b) {
    // {xi^b, .} acts as the left derivative d/dxi^b
    return h.d_dxi(b);
}

// {factors..., h} with the monomial split into its coordinate factors;
// uses {fg,h} = f{g,h} + (-1)^{p(g)p(h)} {f,h} g on homogeneous pieces.
template <class S>
SuperPolynomial<S> bracket_factors(const SymplecticSuperSpace& sp,
                                   const std::vector<int>& xi_list,      // 1-based, ascending
                                   const std::vector<int>& x_list,       // 1-based, repeats
                                   const SuperPolynomial<S>& h, int h_parity) {
    const int m = h.m(), n = h.n(), ngen = h.num_generators();
    if (xi_list.empty() && x_list.empty()) return SuperPolynomial<S>(m, n, ngen);
    // peel the first factor f, rest g
    bool f_is_odd = !xi_list.empty();
    std::vector<int> rest_xi = xi_list;
    std::vector<int> rest_x = x_list;
    int f_idx;
    if (f_is_odd) {
        f_idx = rest_xi.front();
        rest_xi.erase(rest_xi.begin());
    } else {
        f_idx = rest_x.front();
        rest_x.erase(rest_x.begin());
    }
    SuperPolynomial<S> g = SuperPolynomial<S>::one(m, n, ngen);
    for (int b : rest_xi) g = g * SuperPolynomial<S>::xi(m, n, ngen, b);
    for (int i : rest_x) g = g * SuperPolynomial<S>::x(m, n, ngen, i);
    int g_parity = int(rest_xi.size()) & 1;

    SuperPolynomial<S> f_bracket =
        f_is_odd ? bracket_odd_gen(h, f_idx) : bracket_even_gen(sp, f_idx, h);
    SuperPolynomial<S> fpoly = f_is_odd ? SuperPolynomial<S>::xi(m, n, ngen, f_idx)
                                        : SuperPolynomial<S>::x(m, n, ngen, f_idx);
    SuperPolynomial<S> rec = bracket_factors(sp, rest_xi, rest_x, h, h_parity);

    SuperPolynomial<S> out = fpoly * rec;
    SuperPolynomial<S> cross = f_bracket * g;
    if ((g_parity & h_parity) & 1) cross = -cross;
    out += cross;
    return out;
}

} // namespace detail

/// Poisson bracket on S(V*) extending {f,g} = B(v_f, v_g) with
/// B(v_f, w) = f(w); on generators {x^1,x^2} = 1 per J2 pair and
/// {xi^a, xi^b} = delta^{ab}.  Exact over rationals.
template <class S>
SuperPolynomial<S> poisson_bracket(const SymplecticSuperSpace& sp,
                                   const SuperPolynomial<S>& p,
                                   const SuperPolynomial<S>& q) {
    if (p.m() != q.m() || p.n() != q.n())
        throw structural_error("poisson_bracket: dimension mismatch");
    SuperPolynomial<S> r(p.m(), p.n(), p.num_generators());
    for (const auto& [kq, cq] : q.terms()) {
        // homogeneous parity of this q-term is needed for the Koszul factors
        WeilElement<S> ce = cq.even_part();
        WeilElement<S> co = cq.odd_part();
        for (int pass = 0; pass < 2; ++pass) {
            const WeilElement<S>& c = pass == 0 ? ce : co;
            if (c.is_zero()) continue;
            SuperPolynomial<S> qterm(p.m(), p.n(), p.num_generators());
            qterm.add_term(kq, c);
            int q_parity = (kq.abs_J() + pass) & 1;
            for (const auto& [kp, cp] : p.terms()) {
                WeilElement<S> pe = cp.even_part();
                WeilElement<S> po = cp.odd_part();
                for (int ppass = 0; ppass < 2; ++ppass) {
                    const WeilElement<S>& pc = ppass == 0 ? pe : po;
                    if (pc.is_zero()) continue;
                    std::vector<int> xi_list, x_list;
                    for (int b = 0; b < p.n(); ++b)
                        if (kp.J & (std::uint32_t(1) << b)) xi_list.push_back(b + 1);
                    for (int i = 0; i < p.m(); ++i)
                        for (int e = 0; e < kp.I[i]; ++e) x_list.push_back(i + 1);
                    SuperPolynomial<S> br =
                        detail::bracket_factors(sp, xi_list, x_list, qterm, q_parity);
                    // the p-term's coefficient multiplies from the right:
                    // {A c, B} = (-1)^{p(c) p(B)} {A, B} c
                    int sgn = ((ppass & q_parity) & 1) ? -1 : 1;
                    WeilElement<S> pcs = sgn > 0 ? pc : -pc;
                    r += br * pcs;
                }
            }
        }
    }
    return r;
}

} // namespace supfaff
