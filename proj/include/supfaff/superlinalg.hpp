#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <utility>
#include <vector>

#include "supfaff/errors.hpp"
#include "supfaff/scalar.hpp"
#include "supfaff/superspace.hpp"
#include "supfaff/weil.hpp"

namespace supfaff {

/// Dense matrix over an arbitrary ring element type; products keep the
/// left-to-right entry order, so it is safe over the Weil algebra.
template <class T>
struct Mat {
    int rows = 0, cols = 0;
    int ngen_hint = 0;  // survives on 0-sized matrices of Weil elements
    std::vector<T> data;

    Mat() = default;
    Mat(int r, int c, const T& init) : rows(r), cols(c), data(std::size_t(r) * c, init) {}

    T& operator()(int i, int j) { return data[std::size_t(i) * cols + j]; }
    const T& operator()(int i, int j) const { return data[std::size_t(i) * cols + j]; }
};

template <class S>
using WMat = Mat<WeilElement<S>>;

template <class S>
int wmat_gens(const WMat<S>& m) {
    return m.data.empty() ? m.ngen_hint : m.data[0].num_generators();
}

template <class S>
WMat<S> wmat_zero(int r, int c, int ngen) {
    WMat<S> m(r, c, WeilElement<S>(ngen));
    m.ngen_hint = ngen;
    return m;
}

template <class S>
WMat<S> wmat_identity(int r, int ngen) {
    WMat<S> m = wmat_zero<S>(r, r, ngen);
    for (int i = 0; i < r; ++i) m(i, i) = WeilElement<S>::one(ngen);
    return m;
}

template <class S>
WMat<S> wmat_mul(const WMat<S>& a, const WMat<S>& b) {
    if (a.cols != b.rows) throw structural_error("matrix product shape mismatch");
    int ngen = std::max(wmat_gens(a), wmat_gens(b));
    WMat<S> r = wmat_zero<S>(a.rows, b.cols, ngen);
    for (int i = 0; i < a.rows; ++i)
        for (int k = 0; k < a.cols; ++k) {
            if (a(i, k).is_zero()) continue;
            for (int j = 0; j < b.cols; ++j) r(i, j) += a(i, k) * b(k, j);
        }
    return r;
}

template <class S>
WMat<S> wmat_add(const WMat<S>& a, const WMat<S>& b, int sign = 1) {
    if (a.rows != b.rows || a.cols != b.cols) throw structural_error("matrix sum shape mismatch");
    WMat<S> r = a;
    for (std::size_t t = 0; t < r.data.size(); ++t)
        r.data[t] = sign > 0 ? r.data[t] + b.data[t] : r.data[t] - b.data[t];
    return r;
}

template <class S>
WMat<S> wmat_neg(const WMat<S>& a) {
    WMat<S> r = a;
    for (auto& e : r.data) e = -e;
    return r;
}

template <class S>
WMat<S> wmat_transpose(const WMat<S>& a) {
    WMat<S> r = wmat_zero<S>(a.cols, a.rows, wmat_gens(a));
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) r(j, i) = a(i, j);
    return r;
}

template <class S>
WMat<S> wmat_scale(const WMat<S>& a, const WeilElement<S>& c) {
    WMat<S> r = a;
    for (auto& e : r.data) e = e * c;
    return r;
}

template <class S>
double wmat_norm1(const WMat<S>& a) {
    double s = 0;
    for (const auto& e : a.data) s += e.norm1();
    return s;
}

/// Inverse of a square matrix with even entries (commuting subring), by
/// Gauss-Jordan with body-invertible pivots.
template <class S>
WMat<S> even_inverse(const WMat<S>& m) {
    if (m.rows != m.cols) throw structural_error("even_inverse: matrix not square");
    const int r = m.rows;
    if (r == 0) return m;
    const int ngen = m.data[0].num_generators();
    WMat<S> a = m;
    WMat<S> inv = wmat_identity<S>(r, ngen);
    for (int k = 0; k < r; ++k) {
        int piv = -1;
        double best = 0;
        for (int i = k; i < r; ++i) {
            double mag = scalar_traits<S>::abs_value(a(i, k).body());
            if (mag > best) { best = mag; piv = i; }
        }
        if (piv < 0) throw singular_body_error("even_inverse: no body-invertible pivot");
        if (piv != k)
            for (int j = 0; j < r; ++j) {
                std::swap(a(piv, j), a(k, j));
                std::swap(inv(piv, j), inv(k, j));
            }
        WeilElement<S> p = inverse_even(a(k, k));
        for (int j = 0; j < r; ++j) {
            a(k, j) = p * a(k, j);
            inv(k, j) = p * inv(k, j);
        }
        for (int i = 0; i < r; ++i) {
            if (i == k || a(i, k).is_zero()) continue;
            WeilElement<S> f = a(i, k);
            for (int j = 0; j < r; ++j) {
                a(i, j) -= f * a(k, j);
                inv(i, j) -= f * inv(k, j);
            }
        }
    }
    return inv;
}

/// Leibniz determinant; exact on any commuting entries, factorial cost.
template <class S>
WeilElement<S> leibniz_det(const WMat<S>& m) {
    if (m.rows != m.cols) throw structural_error("determinant of non-square matrix");
    const int r = m.rows;
    const int ngen = wmat_gens(m);
    if (r == 0) return WeilElement<S>::one(ngen);
    WeilElement<S> acc(ngen);
    std::vector<int> perm(r);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        int inv = 0;
        for (int i = 0; i < r; ++i)
            for (int j = i + 1; j < r; ++j)
                if (perm[i] > perm[j]) ++inv;
        WeilElement<S> t = WeilElement<S>::one(ngen);
        for (int i = 0; i < r && !t.is_zero(); ++i) t = t * m(i, perm[i]);
        acc += (inv & 1) ? -t : t;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return acc;
}

/// Determinant of a matrix of even Weil elements: elimination with exact
/// division when pivot bodies allow it, Leibniz fallback for size <= 6.
template <class S>
WeilElement<S> even_det(const WMat<S>& m) {
    if (m.rows != m.cols) throw structural_error("determinant of non-square matrix");
    const int r = m.rows;
    const int ngen = wmat_gens(m);
    if (r == 0) return WeilElement<S>::one(ngen);
    for (const auto& e : m.data)
        if (!e.is_even()) throw parity_error("even_det: entries must be even");
    WMat<S> a = m;
    WeilElement<S> det = WeilElement<S>::one(ngen);
    for (int k = 0; k < r; ++k) {
        int piv = -1;
        double best = 0;
        bool column_nonzero = false;
        for (int i = k; i < r; ++i) {
            if (!a(i, k).is_zero()) column_nonzero = true;
            double mag = scalar_traits<S>::abs_value(a(i, k).body());
            if (mag > best) { best = mag; piv = i; }
        }
        if (piv < 0) {
            if (!column_nonzero) return WeilElement<S>(ngen);  // exact zero column
            if (r <= 6) return leibniz_det(m);
            throw singular_body_error("even_det: pivoting stalled on soul-only column");
        }
        if (piv != k) {
            for (int j = 0; j < r; ++j) std::swap(a(piv, j), a(k, j));
            det = -det;
        }
        det = det * a(k, k);
        WeilElement<S> p = inverse_even(a(k, k));
        for (int i = k + 1; i < r; ++i) {
            if (a(i, k).is_zero()) continue;
            WeilElement<S> f = a(i, k) * p;
            for (int j = k; j < r; ++j) a(i, j) -= f * a(k, j);
        }
    }
    return det;
}

namespace detail {

// Textbook Pfaffian by first-index expansion over the active index mask.
template <class S>
WeilElement<S> pf_textbook(const WMat<S>& m, std::uint32_t mask,
                           std::map<std::uint32_t, WeilElement<S>>& memo) {
    const int ngen = m.data[0].num_generators();
    if (mask == 0) return WeilElement<S>::one(ngen);
    auto it = memo.find(mask);
    if (it != memo.end()) return it->second;
    int first = std::countr_zero(mask);
    WeilElement<S> acc(ngen);
    int t = 0;
    for (int j = first + 1; j < m.rows; ++j) {
        if (!(mask & (std::uint32_t(1) << j))) continue;
        ++t;
        if (m(first, j).is_zero()) continue;
        std::uint32_t rest = mask & ~(std::uint32_t(1) << first) & ~(std::uint32_t(1) << j);
        WeilElement<S> sub = pf_textbook(m, rest, memo);
        WeilElement<S> term = m(first, j) * sub;
        acc += (t & 1) ? term : -term;
    }
    memo.emplace(mask, acc);
    return acc;
}

} // namespace detail

/// Pfaffian of an antisymmetric even-Weil matrix, in the paper's
/// normalization: pfaffian([[0,-c],[c,0]]) = c, i.e. the textbook
/// perfect-matching Pfaffian of -M.  Returns 0 for odd size.
template <class S>
WeilElement<S> pfaffian(const WMat<S>& m) {
    if (m.rows != m.cols) throw structural_error("pfaffian of non-square matrix");
    const int r = m.rows;
    const int ngen = wmat_gens(m);
    if (r == 0) return WeilElement<S>::one(ngen);
    double scale = wmat_norm1(m);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
            WeilElement<S> defect = m(i, j) + m(j, i);
            if constexpr (scalar_traits<S>::is_exact) {
                if (!defect.is_zero())
                    throw structural_error("pfaffian: matrix is not antisymmetric");
            } else {
                if (defect.norm1() > 1e-8 * (1.0 + scale))
                    throw structural_error("pfaffian: antisymmetry defect above tolerance");
            }
        }
    if (r & 1) return WeilElement<S>(ngen);
    if (r > 16) throw capacity_error("pfaffian: size above matching-sum cap");
    std::map<std::uint32_t, WeilElement<S>> memo;
    std::uint32_t full = (r >= 32) ? ~std::uint32_t(0) : ((std::uint32_t(1) << r) - 1);
    WeilElement<S> pf = detail::pf_textbook(m, full, memo);
    return ((r / 2) & 1) ? -pf : pf;  // Pf_textbook(-M) = (-1)^{r/2} Pf_textbook(M)
}

/// D_J: keep rows and columns where the bit of J is set.
template <class S>
WMat<S> submatrix_J(const WMat<S>& d, std::uint32_t J) {
    std::vector<int> idx;
    for (int b = 0; b < d.rows; ++b)
        if (J & (std::uint32_t(1) << b)) idx.push_back(b);
    const int ngen = wmat_gens(d);
    WMat<S> r = wmat_zero<S>((int)idx.size(), (int)idx.size(), ngen);
    for (size_t i = 0; i < idx.size(); ++i)
        for (size_t j = 0; j < idx.size(); ++j) r((int)i, (int)j) = d(idx[i], idx[j]);
    return r;
}

/// C_{J,I}: keep the rows of C where J is set and repeat the k-th column
/// i_k times (ascending k).
template <class S>
WMat<S> repeated_submatrix(const WMat<S>& c, std::uint32_t J, const std::vector<int>& I) {
    if ((int)I.size() != c.cols) throw structural_error("repeated_submatrix: |I| vs columns");
    std::vector<int> rows, cols;
    for (int b = 0; b < c.rows; ++b)
        if (J & (std::uint32_t(1) << b)) rows.push_back(b);
    for (int k = 0; k < c.cols; ++k)
        for (int t = 0; t < I[k]; ++t) cols.push_back(k);
    const int ngen = wmat_gens(c);
    WMat<S> r = wmat_zero<S>((int)rows.size(), (int)cols.size(), ngen);
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < cols.size(); ++j) r((int)i, (int)j) = c(rows[i], cols[j]);
    return r;
}

/// phi_r(M) = sum_{sigma} a_{1,sigma(1)} ... a_{r,sigma(r)} on odd entries,
/// antisymmetric in rows, symmetric in columns.
template <class S>
WeilElement<S> phi_r(const WMat<S>& m) {
    if (m.rows != m.cols) throw structural_error("phi_r: matrix not square");
    const int r = m.rows;
    const int ngen = wmat_gens(m);
    for (const auto& e : m.data)
        if (!e.is_odd()) throw parity_error("phi_r: entries must be odd");
    if (r == 0) return WeilElement<S>::one(ngen);
    WeilElement<S> acc(ngen);
    std::vector<int> perm(r);
    std::iota(perm.begin(), perm.end(), 0);
    do {
        WeilElement<S> t = WeilElement<S>::one(ngen);
        for (int i = 0; i < r && !t.is_zero(); ++i) t = t * m(i, perm[i]);
        acc += t;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return acc;
}

/// Block supermatrix [A B; C D] over a symplectic superspace, entries in the
/// Weil algebra; represents a Weil-valued point of gl(V) acting naively on
/// coordinate columns (the convention that reproduces the paper's spo(2,2)
/// moment polynomial).
template <class S>
class SuperMatrix {
  public:
    using weil = WeilElement<S>;

    SuperMatrix() = default;
    SuperMatrix(const SymplecticSuperSpace& space, int num_generators)
        : space_(space), ngen_(num_generators),
          e_(std::size_t(space.dim()) * space.dim(), weil(num_generators)) {}

    static SuperMatrix identity(const SymplecticSuperSpace& space, int ngen) {
        SuperMatrix x(space, ngen);
        for (int i = 0; i < space.dim(); ++i) x.at(i, i) = weil::one(ngen);
        return x;
    }

    const SymplecticSuperSpace& space() const { return space_; }
    int num_generators() const { return ngen_; }
    int dim() const { return space_.dim(); }

    weil& at(int i, int j) { return e_[std::size_t(i) * dim() + j]; }
    const weil& at(int i, int j) const { return e_[std::size_t(i) * dim() + j]; }

    /// entry parity demanded by the block structure
    int entry_parity(int i, int j) const { return (space_.parity(i) + space_.parity(j)) & 1; }

    /// (i,j,reason) for every entry violating the block parity constraints.
    std::vector<std::pair<int, int>> parity_violations() const {
        std::vector<std::pair<int, int>> out;
        for (int i = 0; i < dim(); ++i)
            for (int j = 0; j < dim(); ++j) {
                const weil& v = at(i, j);
                if (v.is_zero()) continue;
                bool ok = entry_parity(i, j) == 0 ? v.is_even() : v.is_odd();
                if (!ok) out.emplace_back(i, j);
            }
        return out;
    }
    void validate_parity() const {
        if (!parity_violations().empty())
            throw parity_error("supermatrix entry violates block parity");
    }

    WMat<S> block_A() const { return block(0, 0, space_.m, space_.m); }
    WMat<S> block_B() const { return block(0, space_.m, space_.m, space_.n); }
    WMat<S> block_C() const { return block(space_.m, 0, space_.n, space_.m); }
    WMat<S> block_D() const { return block(space_.m, space_.m, space_.n, space_.n); }

    void set_block_A(const WMat<S>& b) { set_block(0, 0, b); }
    void set_block_B(const WMat<S>& b) { set_block(0, space_.m, b); }
    void set_block_C(const WMat<S>& b) { set_block(space_.m, 0, b); }
    void set_block_D(const WMat<S>& b) { set_block(space_.m, space_.m, b); }

    SuperMatrix operator-() const {
        SuperMatrix r = *this;
        for (auto& v : r.e_) v = -v;
        return r;
    }
    SuperMatrix& operator+=(const SuperMatrix& o) {
        check_compatible(o);
        for (std::size_t t = 0; t < e_.size(); ++t) e_[t] += o.e_[t];
        return *this;
    }
    SuperMatrix& operator-=(const SuperMatrix& o) {
        check_compatible(o);
        for (std::size_t t = 0; t < e_.size(); ++t) e_[t] -= o.e_[t];
        return *this;
    }
    friend SuperMatrix operator+(SuperMatrix a, const SuperMatrix& b) { return a += b; }
    friend SuperMatrix operator-(SuperMatrix a, const SuperMatrix& b) { return a -= b; }

    friend SuperMatrix operator*(const SuperMatrix& a, const SuperMatrix& b) {
        a.check_compatible(b);
        SuperMatrix r(a.space_, a.ngen_);
        const int d = a.dim();
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k) {
                if (a.at(i, k).is_zero()) continue;
                for (int j = 0; j < d; ++j) r.at(i, j) += a.at(i, k) * b.at(k, j);
            }
        return r;
    }
    friend SuperMatrix operator*(const SuperMatrix& a, const weil& c) {
        SuperMatrix r = a;
        for (auto& v : r.e_) v = v * c;
        return r;
    }
    friend SuperMatrix operator*(const SuperMatrix& a, const S& s) {
        SuperMatrix r = a;
        for (auto& v : r.e_) v = v * s;
        return r;
    }

    bool operator==(const SuperMatrix& o) const {
        return space_ == o.space_ && e_ == o.e_;
    }

    double norm1() const {
        double s = 0;
        for (const auto& v : e_) s += v.norm1();
        return s;
    }

    /// Apply to a Weil point of V given by coordinates (parities forced by
    /// position): (Xv)^i = sum_j X_ij v^j.
    std::vector<weil> apply(const std::vector<weil>& v) const {
        if ((int)v.size() != dim()) throw structural_error("apply: coordinate count mismatch");
        std::vector<weil> out(dim(), weil(ngen_));
        for (int i = 0; i < dim(); ++i)
            for (int j = 0; j < dim(); ++j)
                if (!at(i, j).is_zero() && !v[j].is_zero()) out[i] += at(i, j) * v[j];
        return out;
    }

  private:
    WMat<S> block(int i0, int j0, int r, int c) const {
        WMat<S> b = wmat_zero<S>(r, c, ngen_);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) b(i, j) = at(i0 + i, j0 + j);
        return b;
    }
    void set_block(int i0, int j0, const WMat<S>& b) {
        for (int i = 0; i < b.rows; ++i)
            for (int j = 0; j < b.cols; ++j) at(i0 + i, j0 + j) = b(i, j);
    }
    void check_compatible(const SuperMatrix& o) const {
        if (!(space_ == o.space_) || ngen_ != o.ngen_)
            throw structural_error("mixing supermatrices over different spaces");
    }

    SymplecticSuperSpace space_;
    int ngen_ = 0;
    std::vector<weil> e_;
};

/// str(M) = tr(A) - tr(D).
template <class S>
WeilElement<S> supertrace(const SuperMatrix<S>& x) {
    WeilElement<S> s(x.num_generators());
    const int m = x.space().m;
    for (int i = 0; i < m; ++i) s += x.at(i, i);
    for (int j = m; j < x.dim(); ++j) s -= x.at(j, j);
    return s;
}

/// Adjoint with respect to B: B(Xv,w) = B(v,X*w).  Blockwise,
/// X* = [G0^{-1} A^T G0, -G0^{-1} C^T; B^T G0, D^T] with G0^{-1} = -G0.
template <class S>
SuperMatrix<S> adjoint_star(const SuperMatrix<S>& x) {
    const auto& sp = x.space();
    const int m = sp.m, n = sp.n;
    SuperMatrix<S> r(sp, x.num_generators());
    // A* = G0^{-1} A^T G0: (A*)_{ij} = sum_{k,l} G0inv_{ik} A_{lk} G0_{lj}
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            WeilElement<S> acc(x.num_generators());
            for (int k = 0; k < m; ++k) {
                int gik = -sp.gram_even(i, k);  // G0^{-1} = -G0
                if (gik == 0) continue;
                for (int l = 0; l < m; ++l) {
                    int glj = sp.gram_even(l, j);
                    if (glj == 0) continue;
                    acc += (gik * glj > 0) ? x.at(l, k) : -x.at(l, k);
                }
            }
            r.at(i, j) = acc;
        }
    // B*-block of X*: -G0^{-1} C^T = G0 C^T
    for (int i = 0; i < m; ++i)
        for (int b = 0; b < n; ++b) {
            WeilElement<S> acc(x.num_generators());
            for (int k = 0; k < m; ++k) {
                int g = sp.gram_even(i, k);
                if (g == 0) continue;
                acc += (g > 0) ? x.at(m + b, k) : -x.at(m + b, k);
            }
            r.at(i, m + b) = acc;
        }
    // C*-block of X*: B^T G0: (C*)_{bj} = sum_l B_{lb} G0_{lj}
    for (int b = 0; b < n; ++b)
        for (int j = 0; j < m; ++j) {
            WeilElement<S> acc(x.num_generators());
            for (int l = 0; l < m; ++l) {
                int g = sp.gram_even(l, j);
                if (g == 0) continue;
                acc += (g > 0) ? x.at(l, m + b) : -x.at(l, m + b);
            }
            r.at(m + b, j) = acc;
        }
    // D* = D^T
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) r.at(m + a, m + b) = x.at(m + b, m + a);
    return r;
}

template <class S>
bool is_spo(const SuperMatrix<S>& x, double tol = 0.0) {
    SuperMatrix<S> d = adjoint_star(x) + x;
    if (tol <= 0.0) return d == SuperMatrix<S>(x.space(), x.num_generators());
    return d.norm1() <= tol * (1.0 + x.norm1());
}

template <class S>
bool is_SpO(const SuperMatrix<S>& g, double tol = 0.0) {
    SuperMatrix<S> p = adjoint_star(g) * g - SuperMatrix<S>::identity(g.space(), g.num_generators());
    if (tol <= 0.0) return p == SuperMatrix<S>(g.space(), g.num_generators());
    return p.norm1() <= tol * (1.0 + g.norm1());
}

/// (X - X*)/2, always in spo.
template <class S>
SuperMatrix<S> project_spo(const SuperMatrix<S>& x) {
    return (x - adjoint_star(x)) * scalar_traits<S>::from_ratio(1, 2);
}

/// Supercommutator of two even Weil points: [X,Y] = XY - YX.
template <class S>
SuperMatrix<S> commutator(const SuperMatrix<S>& x, const SuperMatrix<S>& y) {
    return x * y - y * x;
}

/// Full supermatrix inverse via Schur blocks (valid over the associative
/// Weil algebra; A and D - C A^{-1} B need body-invertible even blocks).
template <class S>
SuperMatrix<S> inverse(const SuperMatrix<S>& x) {
    const auto& sp = x.space();
    WMat<S> A = x.block_A(), B = x.block_B(), C = x.block_C(), D = x.block_D();
    WMat<S> Ai = even_inverse(A);
    WMat<S> SD = wmat_add(D, wmat_mul(wmat_mul(C, Ai), B), -1);
    WMat<S> SDi = even_inverse(SD);
    WMat<S> AiB = wmat_mul(Ai, B);
    WMat<S> CAi = wmat_mul(C, Ai);
    SuperMatrix<S> r(sp, x.num_generators());
    r.set_block_A(wmat_add(Ai, wmat_mul(wmat_mul(AiB, SDi), CAi), 1));
    r.set_block_B(wmat_neg(wmat_mul(AiB, SDi)));
    r.set_block_C(wmat_neg(wmat_mul(SDi, CAi)));
    r.set_block_D(SDi);
    return r;
}

/// Ber(M) = det(A - B D^{-1} C) det(D)^{-1}; requires body(D) invertible.
template <class S>
WeilElement<S> berezinian(const SuperMatrix<S>& x) {
    WMat<S> A = x.block_A(), B = x.block_B(), C = x.block_C(), D = x.block_D();
    WMat<S> Di = even_inverse(D);
    WMat<S> SA = wmat_add(A, wmat_mul(wmat_mul(B, Di), C), -1);
    return even_det(SA) * inverse_even(even_det(D));
}

/// Ber^-(M) = det(A)^{-1} det(D - C A^{-1} B); requires body(A) invertible.
template <class S>
WeilElement<S> berezinian_minus(const SuperMatrix<S>& x) {
    WMat<S> A = x.block_A(), B = x.block_B(), C = x.block_C(), D = x.block_D();
    WMat<S> Ai = even_inverse(A);
    WMat<S> SD = wmat_add(D, wmat_mul(wmat_mul(C, Ai), B), -1);
    return inverse_even(even_det(A)) * even_det(SD);
}

/// Ber_{(1,0)}(M) = |det(A - B D^{-1} C)| det(D)^{-1}.
template <class S>
WeilElement<S> berezinian_10(const SuperMatrix<S>& x) {
    WMat<S> A = x.block_A(), B = x.block_B(), C = x.block_C(), D = x.block_D();
    WMat<S> Di = even_inverse(D);
    WMat<S> SA = wmat_add(A, wmat_mul(wmat_mul(B, Di), C), -1);
    return abs_even(even_det(SA)) * inverse_even(even_det(D));
}

/// Ber^-_{(1,0)}(M) = |det(A)^{-1}| det(D - C A^{-1} B).
template <class S>
WeilElement<S> berezinian_minus_10(const SuperMatrix<S>& x) {
    WMat<S> A = x.block_A(), B = x.block_B(), C = x.block_C(), D = x.block_D();
    WMat<S> Ai = even_inverse(A);
    WMat<S> SD = wmat_add(D, wmat_mul(wmat_mul(C, Ai), B), -1);
    return abs_even(inverse_even(even_det(A))) * even_det(SD);
}

namespace detail {

// Signature of a real symmetric scalar matrix by LDL^T with symmetric
// pivoting and 2x2 hyperbolic pivots; exact when R is Rational.
template <class R>
std::pair<int, int> ldlt_signature(std::vector<std::vector<R>> s, double rel_tol) {
    int p = 0, q = 0;
    std::vector<int> live;
    for (size_t i = 0; i < s.size(); ++i) live.push_back((int)i);
    auto magnitude = [](const R& v) { return std::abs(static_cast<double>(v)); };
    while (!live.empty()) {
        double scale = 0;
        for (int i : live)
            for (int j : live) scale = std::max(scale, magnitude(s[i][j]));
        if (scale == 0) throw stratum_boundary_error("signature: degenerate quadratic form");
        double thresh = rel_tol * scale;
        // best diagonal pivot
        int di = -1;
        double dbest = 0;
        for (int i : live)
            if (magnitude(s[i][i]) > dbest) { dbest = magnitude(s[i][i]); di = i; }
        if (di >= 0 && dbest > thresh) {
            R d = s[di][di];
            (d > 0 ? p : q) += 1;
            std::vector<int> rest;
            for (int i : live)
                if (i != di) rest.push_back(i);
            for (int i : rest)
                for (int j : rest) s[i][j] = s[i][j] - s[i][di] * s[di][j] / d;
            live = rest;
            continue;
        }
        // 2x2 pivot on the dominant off-diagonal entry
        int bi = -1, bj = -1;
        double obest = 0;
        for (int i : live)
            for (int j : live)
                if (i < j && magnitude(s[i][j]) > obest) { obest = magnitude(s[i][j]); bi = i; bj = j; }
        if (bi < 0 || obest <= thresh)
            throw stratum_boundary_error("signature: degenerate quadratic form");
        R a = s[bi][bi], b = s[bi][bj], c = s[bj][bj];
        R det = a * c - b * b;  // < 0 for a valid hyperbolic pivot
        if (det >= 0) throw stratum_boundary_error("signature: 2x2 pivot not hyperbolic");
        p += 1;
        q += 1;
        std::vector<int> rest;
        for (int i : live)
            if (i != bi && i != bj) rest.push_back(i);
        for (int i : rest)
            for (int j : rest) {
                // Schur complement with the inverse of [[a,b],[b,c]]
                R vi1 = s[i][bi], vi2 = s[i][bj];
                R vj1 = s[bi][j], vj2 = s[bj][j];
                R corr = (vi1 * (c * vj1 - b * vj2) + vi2 * (a * vj2 - b * vj1)) / det;
                s[i][j] = s[i][j] - corr;
            }
        live = rest;
    }
    return {p, q};
}

template <class S>
double to_real_checked(const S& v);

template <>
inline double to_real_checked<Complex>(const Complex& v) {
    if (std::abs(v.imag()) > 1e-9 * (1.0 + std::abs(v.real())))
        throw domain_error("signature: body is not real");
    return v.real();
}

} // namespace detail

/// Signature (p,q) of the quadratic form v -> B(v, body(A) v) on V0, via
/// LDL^T with symmetric pivoting; exact over rationals, 1e-12 relative pivot
/// threshold over doubles.
template <class S>
std::pair<int, int> signature_of_form(const WMat<S>& a, const SymplecticSuperSpace& sp) {
    const int m = sp.m;
    if (a.rows != m || a.cols != m) throw structural_error("signature_of_form: block shape");
    if constexpr (scalar_traits<S>::is_exact) {
        std::vector<std::vector<Rational>> s(m, std::vector<Rational>(m, Rational(0)));
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                Rational acc(0);
                for (int k = 0; k < m; ++k) {
                    int g = sp.gram_even(i, k);
                    if (g) acc += Rational(g) * a(k, j).body();
                }
                s[i][j] = acc;
            }
        // symmetrize exactly (already symmetric for sp elements)
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) {
                Rational v = (s[i][j] + s[j][i]) / 2;
                s[i][j] = s[j][i] = v;
            }
        return detail::ldlt_signature<Rational>(std::move(s), 0.0);
    } else {
        std::vector<std::vector<double>> s(m, std::vector<double>(m, 0.0));
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                double acc = 0;
                for (int k = 0; k < m; ++k) {
                    int g = sp.gram_even(i, k);
                    if (g) acc += g * detail::to_real_checked<Complex>(a(k, j).body());
                }
                s[i][j] = acc;
            }
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j) {
                double v = (s[i][j] + s[j][i]) / 2;
                s[i][j] = s[j][i] = v;
            }
        return detail::ldlt_signature<double>(std::move(s), 1e-12);
    }
}

/// mu(X, v) = -1/2 B(v, Xv) at a concrete Weil point of V.
template <class S>
WeilElement<S> moment(const SuperMatrix<S>& x, const std::vector<WeilElement<S>>& v) {
    const auto& sp = x.space();
    if ((int)v.size() != sp.dim()) throw structural_error("moment: coordinate count mismatch");
    for (int i = 0; i < sp.dim(); ++i) {
        if (v[i].is_zero()) continue;
        bool ok = sp.parity(i) == 0 ? v[i].is_even() : v[i].is_odd();
        if (!ok) throw parity_error("moment: point coordinate parity violation");
    }
    x.validate_parity();
    std::vector<WeilElement<S>> xv = x.apply(v);
    WeilElement<S> acc(x.num_generators());
    for (int i = 0; i < sp.dim(); ++i)
        for (int j = 0; j < sp.dim(); ++j) {
            int g = sp.gram(i, j);
            if (g == 0 || v[i].is_zero() || xv[j].is_zero()) continue;
            int sgn = (sp.parity(i) & sp.parity(j)) ? -g : g;  // (-1)^{p(v^i)p(g_j)}
            WeilElement<S> t = v[i] * xv[j];
            acc += sgn > 0 ? t : -t;
        }
    return acc * scalar_traits<S>::from_ratio(-1, 2);
}

/// mu(X, v) at the generic point v = g_i z^i, as a SuperPolynomial.
template <class S>
SuperPolynomial<S> moment_polynomial(const SuperMatrix<S>& x) {
    const auto& sp = x.space();
    const int m = sp.m, n = sp.n, ngen = x.num_generators();
    x.validate_parity();
    using P = SuperPolynomial<S>;
    // coordinate polynomials z^i and the rows of Xv
    std::vector<P> z;
    z.reserve(sp.dim());
    for (int i = 0; i < m; ++i) z.push_back(P::x(m, n, ngen, i + 1));
    for (int b = 0; b < n; ++b) z.push_back(P::xi(m, n, ngen, b + 1));
    std::vector<P> xv(sp.dim(), P(m, n, ngen));
    for (int i = 0; i < sp.dim(); ++i)
        for (int j = 0; j < sp.dim(); ++j) {
            const WeilElement<S>& c = x.at(i, j);
            if (c.is_zero()) continue;
            // X_ij z^j with the coefficient rewritten to the right:
            // X_ij z^j = (-1)^{p(X_ij) p(z^j)} z^j X_ij.
            WeilElement<S> ce = c.even_part(), co = c.odd_part();
            if (!ce.is_zero()) xv[i] += z[j] * ce;
            if (!co.is_zero()) {
                P t = z[j] * co;
                xv[i] += sp.parity(j) ? -t : t;
            }
        }
    P acc(m, n, ngen);
    for (int i = 0; i < sp.dim(); ++i)
        for (int j = 0; j < sp.dim(); ++j) {
            int g = sp.gram(i, j);
            if (g == 0) continue;
            int sgn = (sp.parity(i) & sp.parity(j)) ? -g : g;
            P t = z[i] * xv[j];
            acc += sgn > 0 ? t : -t;
        }
    return acc * scalar_traits<S>::from_ratio(-1, 2);
}

} // namespace supfaff
