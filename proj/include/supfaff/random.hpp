#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "supfaff/scalar.hpp"
#include "supfaff/superlinalg.hpp"
#include "supfaff/superspace.hpp"
#include "supfaff/weil.hpp"

namespace supfaff {

// Deterministic randomness: mt19937_64 (bit-stable across platforms by the
// C++ standard) with a splitmix64-derived per-point subseed, so parallel and
// serial suite runs produce identical reports.

inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t index = 0) {
    return std::mt19937_64(split_seed(seed, index));
}

/// small rational from the grid {-3..3}/{1,2}; never NaN-adjacent in the
/// complex lane.
template <class S>
S random_grid_scalar(std::mt19937_64& rng, bool nonzero = false) {
    std::uniform_int_distribution<int> num(-3, 3);
    std::uniform_int_distribution<int> den(1, 2);
    int p = num(rng);
    while (nonzero && p == 0) p = num(rng);
    return scalar_traits<S>::from_ratio(p, den(rng));
}

/// Random homogeneous Weil element: requested parity, soul drawn from the
/// first `max_gen` generators, optional body.
template <class S>
WeilElement<S> random_weil(std::mt19937_64& rng, int ngen, int parity, bool with_body,
                           int soul_terms = 2, int max_gen = 0) {
    if (max_gen <= 0 || max_gen > ngen) max_gen = ngen;
    WeilElement<S> e(ngen);
    std::uniform_int_distribution<std::uint64_t> mask(
        1, (std::uint64_t(1) << max_gen) - 1);
    for (int t = 0; t < soul_terms; ++t) {
        std::uint64_t m = mask(rng);
        if ((std::popcount(m) & 1) != (parity & 1)) continue;
        S c = random_grid_scalar<S>(rng);
        e.set_term(m, e.coeff(m) + c);
    }
    if (parity == 0 && with_body)
        e.set_term(0, e.coeff(0) + random_grid_scalar<S>(rng, true));
    return e;
}

/// Random gl(V) Weil point with parity-valid blocks; even entries soul-only
/// when `soul_only_even` (so a caller-chosen body can be added separately).
template <class S>
SuperMatrix<S> random_gl(const SymplecticSuperSpace& sp, int ngen, std::mt19937_64& rng,
                         bool soul_only_even = false, int soul_terms = 2) {
    SuperMatrix<S> x(sp, ngen);
    for (int i = 0; i < sp.dim(); ++i)
        for (int j = 0; j < sp.dim(); ++j) {
            int par = x.entry_parity(i, j);
            x.at(i, j) = random_weil<S>(rng, ngen, par, par == 0 && !soul_only_even,
                                        soul_terms);
        }
    return x;
}

/// Body matrix G0^{-1} S0 in sp(V0) whose quadratic form B(v,Av) has the
/// requested signature (p,q); entries on a small rational grid.
template <class S>
WMat<S> random_sp_body(const SymplecticSuperSpace& sp, int ngen, std::mt19937_64& rng,
                       int p, int q) {
    const int m = sp.m;
    if (p + q != m) throw structural_error("random_sp_body: p+q must equal m");
    std::uniform_int_distribution<int> ent(-2, 2);
    for (int attempt = 0; attempt < 200; ++attempt) {
        // S0 = R^T diag(+1 x p, -1 x q) R with a random integer R
        std::vector<std::vector<long long>> r(m, std::vector<long long>(m));
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) r[i][j] = ent(rng) + (i == j ? 1 : 0);
        std::vector<std::vector<long long>> s0(m, std::vector<long long>(m, 0));
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                long long acc = 0;
                for (int k = 0; k < m; ++k) acc += r[k][i] * (k < p ? 1 : -1) * r[k][j];
                s0[i][j] = acc;
            }
        // A = G0^{-1} S0 = -G0 S0
        WMat<S> a = wmat_zero<S>(m, m, ngen);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                long long acc = 0;
                for (int k = 0; k < m; ++k) acc += -sp.gram_even(i, k) * s0[k][j];
                a(i, j) = WeilElement<S>::scalar(ngen, scalar_traits<S>::from_int(acc));
            }
        try {
            auto sig = signature_of_form(a, sp);
            if (sig.first == p && sig.second == q) return a;
        } catch (const stratum_boundary_error&) {
            // degenerate draw; retry
        }
    }
    throw basis_error("random_sp_body: failed to hit the requested signature");
}

/// Random spo(V) Weil point whose body lies on the stratum V_{p,q}
/// (D-block body a random real antisymmetric matrix).
template <class S>
SuperMatrix<S> random_spo(const SymplecticSuperSpace& sp, int ngen, std::mt19937_64& rng,
                          int p, int q, int soul_terms = 2) {
    SuperMatrix<S> soul = project_spo(random_gl<S>(sp, ngen, rng, true, soul_terms));
    SuperMatrix<S> x(sp, ngen);
    x.set_block_A(random_sp_body<S>(sp, ngen, rng, p, q));
    WMat<S> d = wmat_zero<S>(sp.n, sp.n, ngen);
    for (int i = 0; i < sp.n; ++i)
        for (int j = i + 1; j < sp.n; ++j) {
            S c = random_grid_scalar<S>(rng);
            d(i, j) = WeilElement<S>::scalar(ngen, c);
            d(j, i) = WeilElement<S>::scalar(ngen, -c);
        }
    x.set_block_D(d);
    return x + soul;
}

/// Random spo point with body on V+ (positive stratum).
template <class S>
SuperMatrix<S> random_spo_vplus(const SymplecticSuperSpace& sp, int ngen,
                                std::mt19937_64& rng, int soul_terms = 2) {
    return random_spo<S>(sp, ngen, rng, sp.m, 0, soul_terms);
}

/// Random even-invertible GL(V) Weil point: identity + small grid entries +
/// souls; body conditioned by construction (diagonally dominant).
template <class S>
SuperMatrix<S> random_GL(const SymplecticSuperSpace& sp, int ngen, std::mt19937_64& rng,
                         int soul_terms = 2) {
    SuperMatrix<S> g = SuperMatrix<S>::identity(sp, ngen) * scalar_traits<S>::from_int(4);
    SuperMatrix<S> r = random_gl<S>(sp, ngen, rng, false, soul_terms);
    for (int i = 0; i < sp.dim(); ++i)
        for (int j = 0; j < sp.dim(); ++j) {
            if (g.entry_parity(i, j) == 0) {
                // keep the body within the diagonally dominant band
                WeilElement<S> e = r.at(i, j);
                S b = e.body();
                e.set_term(0, b / scalar_traits<S>::from_int(4));
                g.at(i, j) += e;
            } else {
                g.at(i, j) += r.at(i, j);
            }
        }
    return g;
}

/// Matrix exponential of a supermatrix over the complex lane (scaling and
/// squaring; nilpotent parts terminate, body converges numerically).
inline SuperMatrix<Complex> matrix_exp(const SuperMatrix<Complex>& x) {
    double norm = x.norm1();
    int s = 0;
    while (norm > 0.5 && s < 40) {
        norm /= 2;
        ++s;
    }
    Complex scale(1.0 / std::pow(2.0, s), 0.0);
    SuperMatrix<Complex> y = x * scale;
    SuperMatrix<Complex> acc = SuperMatrix<Complex>::identity(x.space(), x.num_generators());
    SuperMatrix<Complex> term = acc;
    for (int k = 1; k <= 60; ++k) {
        term = term * y;
        term = term * Complex(1.0 / k, 0.0);
        if (term.norm1() < 1e-19) break;
        acc += term;
    }
    for (int k = 0; k < s; ++k) acc = acc * acc;
    return acc;
}

/// Random SpO(V) point: exp of a random spo point (complex lane; defining
/// relation holds up to series tolerance).
inline SuperMatrix<Complex> random_SpO(const SymplecticSuperSpace& sp, int ngen,
                                       std::mt19937_64& rng, int soul_terms = 2) {
    SuperMatrix<Complex> z = project_spo(random_gl<Complex>(sp, ngen, rng, false, soul_terms));
    // temper the body so exp stays well-conditioned
    return matrix_exp(z * Complex(0.5, 0.0));
}

/// Random Weil-valued point of V (coordinates with the parity of their slot).
template <class S>
std::vector<WeilElement<S>> random_point_of_V(const SymplecticSuperSpace& sp, int ngen,
                                              std::mt19937_64& rng, int soul_terms = 2) {
    std::vector<WeilElement<S>> v;
    v.reserve(sp.dim());
    for (int i = 0; i < sp.dim(); ++i)
        v.push_back(random_weil<S>(rng, ngen, sp.parity(i), sp.parity(i) == 0, soul_terms));
    return v;
}

} // namespace supfaff
