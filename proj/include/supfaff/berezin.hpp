#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "supfaff/errors.hpp"
#include "supfaff/scalar.hpp"
#include "supfaff/superlinalg.hpp"
#include "supfaff/superspace.hpp"
#include "supfaff/weil.hpp"

namespace supfaff {

/// Berezin integral over the odd coordinates: extracts the xi^(1,...,1)
/// coefficient (stored to the right of xi^J), times (-1)^{n(n-1)/2}, times
/// the orientation of V1.  Returns a polynomial in the even coordinates.
template <class S>
SuperPolynomial<S> odd_top_integral(const SymplecticSuperSpace& sp,
                                    const SuperPolynomial<S>& p) {
    if (p.n() != sp.n || p.m() != sp.m)
        throw structural_error("odd_top_integral: polynomial does not live on the space");
    const std::uint32_t full = (sp.n >= 32) ? ~std::uint32_t(0)
                                            : ((std::uint32_t(1) << sp.n) - 1);
    int sgn = ((sp.n * (sp.n - 1) / 2) & 1) ? -1 : 1;
    sgn *= sp.orientation;
    SuperPolynomial<S> out(sp.m, sp.n, p.num_generators());
    for (const auto& [k, c] : p.terms()) {
        if (k.J != full) continue;
        MultiIndexPair kk;
        kk.I = k.I;
        kk.J = 0;
        out.add_term(kk, sgn > 0 ? c : -c);
    }
    return out;
}

namespace detail {

// E[x^I] for x ~ N(0, Sigma) with even-Weil covariance entries, by the
// memoized Isserlis recursion E[x^I] = sum_b Sigma_{ab} (I_b - d_{ab})
// E[x^{I - e_a - e_b}].
template <class S>
WeilElement<S> isserlis_moment(const std::vector<int>& I, const WMat<S>& sigma,
                               std::map<std::vector<int>, WeilElement<S>>& memo) {
    const int m = (int)I.size();
    const int ngen = wmat_gens(sigma);
    int total = 0;
    for (int v : I) total += v;
    if (total == 0) return WeilElement<S>::one(ngen);
    if (total & 1) return WeilElement<S>(ngen);
    auto it = memo.find(I);
    if (it != memo.end()) return it->second;
    int a = 0;
    while (I[a] == 0) ++a;
    std::vector<int> rest = I;
    rest[a] -= 1;
    WeilElement<S> acc(ngen);
    for (int b = 0; b < m; ++b) {
        if (rest[b] == 0 || sigma(a, b).is_zero()) continue;
        std::vector<int> next = rest;
        next[b] -= 1;
        acc += sigma(a, b) * scalar_traits<S>::from_int(rest[b]) *
               isserlis_moment(next, sigma, memo);
    }
    memo.emplace(I, acc);
    return acc;
}

inline long long binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    long long r = 1;
    for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
    return r;
}

// Branch-tracked square root of an even complex element: the body root
// nearest to `ref` is taken, the soul by the finite binomial series.
inline WeilElement<Complex> sqrt_even_near(const WeilElement<Complex>& a, Complex ref) {
    Complex b = a.body();
    if (std::abs(b) == 0.0) throw branch_error("sqrt continuation hit a vanishing body");
    Complex r = std::sqrt(b);
    if (std::abs(r - ref) > std::abs(-r - ref)) r = -r;
    const int n = a.num_generators();
    WeilElement<Complex> t = a * (Complex(1.0, 0.0) / b) - WeilElement<Complex>::one(n);
    WeilElement<Complex> acc = WeilElement<Complex>::one(n);
    WeilElement<Complex> power = acc;
    Complex coeff(1.0, 0.0);
    for (int k = 1; k <= n + 1; ++k) {
        power = power * t;
        if (power.is_zero()) break;
        coeff = coeff * (Complex(0.5, 0.0) - Complex(double(k - 1), 0.0)) / Complex(double(k), 0.0);
        acc += power * coeff;
    }
    return acc * r;
}

} // namespace detail

/// sqrt(det S) for an even-entried matrix whose REAL part has positive
/// definite body: branch fixed by continuation along t -> Re(S) + t i Im(S)
/// from the positive root at t = 0.  Steps double on a vanishing-body
/// failure, up to the cap.
inline WeilElement<Complex> sqrt_det_continued(const WMat<Complex>& s,
                                               int steps = 32, int max_steps = 4096) {
    const int r = s.rows;
    const int ngen = wmat_gens(s);
    WMat<Complex> re = s, im = s;
    for (auto& e : re.data) {
        WeilElement<Complex> x(ngen);
        for (const auto& [m, c] : e.terms()) x.set_term(m, Complex(c.real(), 0.0));
        e = x;
    }
    for (auto& e : im.data) {
        WeilElement<Complex> x(ngen);
        for (const auto& [m, c] : e.terms()) x.set_term(m, Complex(c.imag(), 0.0));
        e = x;
    }
    while (true) {
        try {
            Complex det0 = even_det(re).body();
            if (!(det0.real() > 0.0))
                throw branch_error("sqrt_det_continued: real-part determinant not positive");
            Complex ref = std::sqrt(det0);
            for (int t = 1; t <= steps; ++t) {
                double tt = double(t) / steps;
                WMat<Complex> st = re;
                for (std::size_t k = 0; k < st.data.size(); ++k)
                    st.data[k] += im.data[k] * Complex(0.0, 1.0) * Complex(tt, 0.0);
                Complex dt = even_det(st).body();
                if (std::abs(dt) < 1e-300)
                    throw branch_error("sqrt continuation hit a vanishing body");
                Complex rt = std::sqrt(dt);
                if (std::abs(rt - ref) > std::abs(-rt - ref)) rt = -rt;
                if (std::abs(rt - ref) > 0.7 * std::abs(ref) + 1e-30)
                    throw branch_error("sqrt continuation step too coarse");
                ref = rt;
            }
            WMat<Complex> s1 = re;
            for (std::size_t k = 0; k < s1.data.size(); ++k)
                s1.data[k] += im.data[k] * Complex(0.0, 1.0);
            return detail::sqrt_even_near(even_det(s1), ref);
        } catch (const branch_error&) {
            if (steps >= max_steps) throw;
            steps *= 2;
        }
    }
}

/// Liouville-normalized Gaussian moment without the determinant factor:
/// E[x^I] for covariance S^{-1}.  Exact over Weil entries.
template <class S>
WeilElement<S> gaussian_moment_scaled(const std::vector<int>& I, const WMat<S>& s,
                                      int moment_cap = 12) {
    int total = 0;
    for (int v : I) total += v;
    if (total & 1) return WeilElement<S>(wmat_gens(s));
    if (total > moment_cap)
        throw capacity_error("gaussian moment degree above cap");
    WMat<S> sigma = even_inverse(s);
    std::map<std::vector<int>, WeilElement<S>> memo;
    return detail::isserlis_moment(I, sigma, memo);
}

/// Liouville-normalized moment: (2pi)^{-m/2} int x^I exp(-1/2 x^T S x) dx
/// = det(S)^{-1/2} E[x^I].  Bodies must make the form positive definite.
template <class S>
WeilElement<S> gaussian_moment(const std::vector<int>& I, const WMat<S>& s,
                               int moment_cap = 12) {
    const int ngen = wmat_gens(s);
    WeilElement<S> det = even_det(s);
    if constexpr (scalar_traits<S>::is_exact) {
        if (scalar_traits<S>::sign(det.body()) <= 0)
            throw domain_error("gaussian_moment: determinant body not positive");
    } else {
        if (!(det.body().real() > 0.0) || std::abs(det.body().imag()) > 1e-9 * std::abs(det.body()))
            throw domain_error("gaussian_moment: determinant body not positive");
    }
    WeilElement<S> inv_root = inverse_even(sqrt_even(det));
    int total = 0;
    for (int v : I) total += v;
    if (total & 1) return WeilElement<S>(ngen);
    return gaussian_moment_scaled(I, s, moment_cap) * inv_root;
}

/// Gaussian-Berezin integrand over an oriented symplectic superspace:
/// prefactor(v) * exp(-1/2 x^T S x + l^T x), integrated with the Liouville
/// normalization.
template <class S>
struct GaussianIntegrand {
    SymplecticSuperSpace space;
    WMat<S> quadratic_even;                    // S, m x m, symmetric, even
    std::vector<WeilElement<S>> linear_even;   // l, size m or empty
    SuperPolynomial<S> prefactor;
    int moment_cap = 12;

    void validate() const {
        const int m = space.m;
        if (quadratic_even.rows != m || quadratic_even.cols != m)
            throw structural_error("integrand: quadratic block must be m x m");
        if (!linear_even.empty() && (int)linear_even.size() != m)
            throw structural_error("integrand: linear term must have length m");
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                if (!quadratic_even(i, j).is_even())
                    throw parity_error("integrand: quadratic entries must be even");
                WeilElement<S> defect = quadratic_even(i, j) - quadratic_even(j, i);
                if constexpr (scalar_traits<S>::is_exact) {
                    if (!defect.is_zero())
                        throw structural_error("integrand: quadratic matrix must be symmetric");
                } else {
                    if (defect.norm1() > 1e-9 * (1.0 + quadratic_even(i, j).norm1()))
                        throw structural_error("integrand: quadratic matrix must be symmetric");
                }
            }
        for (const auto& l : linear_even)
            if (!l.is_even()) throw parity_error("integrand: linear entries must be even");
    }
};

namespace detail {

// positive-definiteness of the real part of the body of S
template <class S>
void check_positive_body(const WMat<S>& s) {
    const int m = s.rows;
    std::vector<std::vector<double>> b(m, std::vector<double>(m, 0.0));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            if constexpr (scalar_traits<S>::is_exact)
                b[i][j] = static_cast<double>(s(i, j).body());
            else
                b[i][j] = s(i, j).body().real();
        }
    // Cholesky-style LDL without pivoting; positive definite iff all pivots > 0
    for (int k = 0; k < m; ++k) {
        if (!(b[k][k] > 0)) throw domain_error("gaussian body is not positive definite");
        for (int i = k + 1; i < m; ++i) {
            double f = b[i][k] / b[k][k];
            for (int j = k; j < m; ++j) b[i][j] -= f * b[k][j];
        }
    }
}

template <class S>
WeilElement<S> inv_sqrt_det(const WMat<S>& s) {
    if constexpr (scalar_traits<S>::is_exact) {
        return inverse_even(sqrt_even(even_det(s)));
    } else {
        bool has_imag = false;
        for (const auto& e : s.data)
            for (const auto& [mk, c] : e.terms())
                if (std::abs(c.imag()) > 1e-14 * (1.0 + std::abs(c.real()))) has_imag = true;
        if (!has_imag) return inverse_even(sqrt_even(even_det(s)));
        return inverse_even(sqrt_det_continued(s));
    }
}

} // namespace detail

/// Exact finite evaluation of a Gaussian-Berezin integral: odd top
/// extraction, then mean-shifted Wick moments term by term, then the
/// det^{-1/2} Liouville factor and the completed-square exponential.
template <class S>
WeilElement<S> integrate(const GaussianIntegrand<S>& g) {
    g.validate();
    const auto& sp = g.space;
    const int m = sp.m;
    const int ngen = g.prefactor.num_generators();
    detail::check_positive_body(g.quadratic_even);

    SuperPolynomial<S> even_part = odd_top_integral(sp, g.prefactor);

    bool has_linear = false;
    for (const auto& l : g.linear_even)
        if (!l.is_zero()) has_linear = true;

    WMat<S> sigma = even_inverse(g.quadratic_even);
    std::vector<WeilElement<S>> mean(m, WeilElement<S>(ngen));
    WeilElement<S> square_factor = WeilElement<S>::one(ngen);
    if (has_linear) {
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) mean[i] += sigma(i, j) * g.linear_even[j];
        WeilElement<S> quad(ngen);
        for (int i = 0; i < m; ++i) quad += g.linear_even[i] * mean[i];
        square_factor = exp_even(quad * scalar_traits<S>::from_ratio(1, 2));
    }

    std::map<std::vector<int>, WeilElement<S>> memo;
    WeilElement<S> acc(ngen);
    for (const auto& [k, c] : even_part.terms()) {
        int total = k.abs_I();
        if (total > g.moment_cap)
            throw capacity_error("integrate: prefactor degree above the moment cap");
        WeilElement<S> mom(ngen);
        if (!has_linear) {
            mom = detail::isserlis_moment(k.I, sigma, memo);
        } else {
            // E[(y + mean)^I] by the binomial shift formula
            std::vector<int> K(m, 0);
            std::function<void(int, WeilElement<S>)> walk = [&](int idx, WeilElement<S> coeff) {
                if (idx == m) {
                    mom += coeff * detail::isserlis_moment(K, sigma, memo);
                    return;
                }
                for (int kk = 0; kk <= k.I[idx]; ++kk) {
                    K[idx] = kk;
                    WeilElement<S> c2 = coeff *
                        scalar_traits<S>::from_int(detail::binomial(k.I[idx], kk));
                    int shift_pow = k.I[idx] - kk;
                    for (int t = 0; t < shift_pow; ++t) c2 = c2 * mean[idx];
                    walk(idx + 1, c2);
                }
                K[idx] = 0;
            };
            walk(0, WeilElement<S>::one(ngen));
        }
        acc += c * mom;
    }
    return acc * detail::inv_sqrt_det(g.quadratic_even) * square_factor;
}

/// The Berezin-integral oracle for the superPfaffian:
/// int_V d_V(v) exp(mu(X,v)) for X in spo with body(A) on the positive
/// stratum (or its holomorphic extension for complex X with Re body(A)
/// positive).  Splits off the scalar even Gaussian, expands the rest.
template <class S>
WeilElement<S> integrate_exp_mu(const SuperMatrix<S>& x, int moment_cap = 16) {
    const auto& sp = x.space();
    const int m = sp.m, n = sp.n, ngen = x.num_generators();
    SuperPolynomial<S> mu = moment_polynomial(x);

    // -1/2 x^T S x from the body of the even quadratic part
    WMat<S> s = wmat_zero<S>(m, m, ngen);
    SuperPolynomial<S> rest = mu;
    for (const auto& [k, c] : mu.terms()) {
        if (k.J != 0 || k.abs_I() != 2) continue;
        S b = c.body();
        if (scalar_traits<S>::is_zero(b)) continue;
        int i = -1, j = -1;
        for (int t = 0; t < m; ++t) {
            if (k.I[t] == 2) { i = j = t; }
            if (k.I[t] == 1) { (i < 0 ? i : j) = t; }
        }
        if (i == j) {
            s(i, i) = WeilElement<S>::scalar(ngen, -(b + b));
        } else {
            s(i, j) = WeilElement<S>::scalar(ngen, -b);
            s(j, i) = WeilElement<S>::scalar(ngen, -b);
        }
        MultiIndexPair kk = k;
        SuperPolynomial<S> body_term(m, n, ngen);
        body_term.add_term(kk, WeilElement<S>::scalar(ngen, b));
        rest -= body_term;
    }
    GaussianIntegrand<S> g{sp, s, {}, SuperPolynomial<S>::exp_nilpotent(rest, n + ngen + 2),
                           moment_cap};
    return integrate(g);
}

} // namespace supfaff
