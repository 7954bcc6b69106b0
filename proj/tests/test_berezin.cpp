#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "supfaff/berezin.hpp"
#include "supfaff/random.hpp"

using namespace supfaff;

namespace {

using WR = WeilElement<Rational>;
using WC = WeilElement<Complex>;
using PR = SuperPolynomial<Rational>;

double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    double h = (b - a) / n;
    double s = f(a) + f(b);
    for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

PR random_poly(std::mt19937_64& rng, int m, int n, int ngen, int terms, int max_deg = 2) {
    PR p(m, n, ngen);
    std::uniform_int_distribution<int> deg(0, max_deg);
    std::uniform_int_distribution<std::uint32_t> jm(0, (std::uint32_t(1) << n) - 1);
    for (int t = 0; t < terms; ++t) {
        MultiIndexPair k;
        k.I.resize(m);
        for (int i = 0; i < m; ++i) k.I[i] = deg(rng);
        k.J = jm(rng);
        int parity = (int)(rng() & 1);
        p.add_term(k, random_weil<Rational>(rng, ngen, parity, parity == 0, 2));
    }
    return p;
}

} // namespace

TEST_CASE("odd top extraction on the paper's dimension-(0,1) and (0,2) examples") {
    // (0,1): phi = a + xi b -> b
    SymplecticSuperSpace s01 = SymplecticSuperSpace::standard(0, 1);
    const int ngen = 4;
    std::mt19937_64 rng(1);
    WR a = random_weil<Rational>(rng, ngen, 0, true, 2);
    WR b = WR::scalar(ngen, Rational(9, 2)) + WR::blade(ngen, {1, 2}, Rational(3));
    PR phi(0, 1, ngen);
    phi.add_term(MultiIndexPair{{}, 0u}, a);
    phi.add_term(MultiIndexPair{{}, 1u}, b);
    PR res = odd_top_integral(s01, phi);
    CHECK(res.coeff(MultiIndexPair{{}, 0u}) == b);

    // (0,2): phi = 1 - c xi eta -> c
    SymplecticSuperSpace s02 = SymplecticSuperSpace::standard(0, 2);
    Rational c(7, 3);
    PR phi2(0, 2, ngen);
    phi2.add_term(MultiIndexPair{{}, 0u}, WR::one(ngen));
    phi2.add_term(MultiIndexPair{{}, 0b11u}, WR::scalar(ngen, -c));
    PR res2 = odd_top_integral(s02, phi2);
    CHECK(res2.coeff(MultiIndexPair{{}, 0u}) == WR::scalar(ngen, c));

    // orientation multiplies the extraction
    SymplecticSuperSpace flipped(0, 2, 2, 0, -1);
    CHECK(odd_top_integral(flipped, phi2).coeff(MultiIndexPair{{}, 0u}) ==
          WR::scalar(ngen, -c));
}

TEST_CASE("odd translation invariance of the Berezin integral") {
    std::mt19937_64 rng(19);
    const int ngen = 6, n = 3;
    SymplecticSuperSpace sp = SymplecticSuperSpace::standard(0, n);
    for (int trial = 0; trial < 15; ++trial) {
        PR phi = random_poly(rng, 0, n, ngen, 5);
        // translate: xi^b -> xi^b + a_b with odd Weil constants a_b
        std::vector<WR> shift;
        for (int b = 0; b < n; ++b) shift.push_back(random_weil<Rational>(rng, ngen, 1, false, 2));
        PR translated(0, n, ngen);
        for (const auto& [k, c] : phi.terms()) {
            PR term = PR::constant(0, n, WR::one(ngen));
            for (int b = 0; b < n; ++b)
                if (k.J & (std::uint32_t(1) << b))
                    term = term * (PR::xi(0, n, ngen, b + 1) + PR::constant(0, n, shift[b]));
            translated += term * c;
        }
        CHECK(odd_top_integral(sp, translated) == odd_top_integral(sp, phi));
    }
}

TEST_CASE("gaussian moments: examples and quadrature oracle") {
    const int ngen = 2;
    // I = 0, S = c Id on m=2: det^{-1/2} = 1/c
    WMat<Rational> s = wmat_zero<Rational>(2, 2, ngen);
    s(0, 0) = WR::scalar(ngen, Rational(3));
    s(1, 1) = WR::scalar(ngen, Rational(3));
    CHECK(gaussian_moment<Rational>({0, 0}, s) == WR::scalar(ngen, Rational(1, 3)));
    CHECK(gaussian_moment<Rational>({1, 0}, s).is_zero());
    CHECK(gaussian_moment<Rational>({1, 2}, s).is_zero());
    CHECK(gaussian_moment<Rational>({2, 0}, s) == WR::scalar(ngen, Rational(1, 9)));

    // quadrature oracle for the (2,0) moment at c = 3:
    // (1/2pi) int x^2 e^{-3x^2/2} dx int e^{-3y^2/2} dy
    double c = 3.0;
    double ix2 = simpson([&](double x) { return x * x * std::exp(-c * x * x / 2); }, -12, 12, 4000);
    double i1 = simpson([&](double y) { return std::exp(-c * y * y / 2); }, -12, 12, 4000);
    double expect = ix2 * i1 / (2 * M_PI);
    CHECK(std::abs(expect - 1.0 / 9.0) < 1e-9);

    // scaled moments give pure Wick values: E[x_i x_j] = (S^{-1})_{ij}
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 10; ++trial) {
        WMat<Rational> r = wmat_zero<Rational>(2, 2, 4);
        WR off = random_weil<Rational>(rng, 4, 0, true, 1);
        r(0, 0) = WR::scalar(4, Rational(5)) + random_weil<Rational>(rng, 4, 0, false, 1).soul();
        r(1, 1) = WR::scalar(4, Rational(7)) + random_weil<Rational>(rng, 4, 0, false, 1).soul();
        r(0, 1) = off;
        r(1, 0) = off;
        WMat<Rational> ri = even_inverse(r);
        CHECK(gaussian_moment_scaled<Rational>({1, 1}, r) == ri(0, 1));
        CHECK(gaussian_moment_scaled<Rational>({2, 0}, r) == ri(0, 0));
    }

    CHECK_THROWS_AS(gaussian_moment<Rational>({14, 0}, s), capacity_error);
}

TEST_CASE("integrate: pure Gaussian, Liouville normalization") {
    const int ngen = 2;
    SymplecticSuperSpace sp = SymplecticSuperSpace::standard(2, 0);
    WMat<Rational> s = wmat_zero<Rational>(2, 2, ngen);
    s(0, 0) = WR::scalar(ngen, Rational(3));
    s(1, 1) = WR::scalar(ngen, Rational(3));
    GaussianIntegrand<Rational> g{sp, s, {}, PR::one(2, 0, ngen), 12};
    CHECK(integrate(g) == WR::scalar(ngen, Rational(1, 3)));

    // non-positive body errors
    WMat<Rational> bad = wmat_zero<Rational>(2, 2, ngen);
    bad(0, 0) = WR::scalar(ngen, Rational(-1));
    bad(1, 1) = WR::scalar(ngen, Rational(1));
    GaussianIntegrand<Rational> gb{sp, bad, {}, PR::one(2, 0, ngen), 12};
    CHECK_THROWS_AS(integrate(gb), domain_error);
}

TEST_CASE("integrate is linear in the prefactor; orientation flips results") {
    std::mt19937_64 rng(31);
    SymplecticSuperSpace sp = SymplecticSuperSpace::standard(2, 2);
    SymplecticSuperSpace flipped(2, 2, 2, 0, -1);
    const int ngen = 4;
    WMat<Rational> s = wmat_zero<Rational>(2, 2, ngen);
    s(0, 0) = WR::scalar(ngen, Rational(2)) + WR::blade(ngen, {1, 2}, Rational(1));
    s(0, 1) = WR::scalar(ngen, Rational(1));
    s(1, 0) = s(0, 1);
    s(1, 1) = WR::scalar(ngen, Rational(1));  // det body = 1, perfect square
    for (int trial = 0; trial < 10; ++trial) {
        PR p = random_poly(rng, 2, 2, ngen, 4);
        PR q = random_poly(rng, 2, 2, ngen, 4);
        GaussianIntegrand<Rational> gp{sp, s, {}, p, 12};
        GaussianIntegrand<Rational> gq{sp, s, {}, q, 12};
        GaussianIntegrand<Rational> gpq{sp, s, {}, p + q, 12};
        CHECK(integrate(gpq) == integrate(gp) + integrate(gq));
        GaussianIntegrand<Rational> gflip{flipped, s, {}, p, 12};
        CHECK(integrate(gflip) == -integrate(gp));
    }
}

TEST_CASE("Fubini: product integrands over product spaces factorize") {
    std::mt19937_64 rng(37);
    const int ngen = 4;
    SymplecticSuperSpace v = SymplecticSuperSpace::standard(2, 2);
    SymplecticSuperSpace w = SymplecticSuperSpace::standard(2, 2);
    SymplecticSuperSpace vw = SymplecticSuperSpace::standard(4, 4);
    WMat<Rational> s1 = wmat_zero<Rational>(2, 2, ngen);
    s1(0, 0) = WR::scalar(ngen, Rational(2));
    s1(0, 1) = s1(1, 0) = WR::scalar(ngen, Rational(1));
    s1(1, 1) = WR::scalar(ngen, Rational(1));  // det 1
    WMat<Rational> s2 = wmat_zero<Rational>(2, 2, ngen);
    s2(0, 0) = WR::scalar(ngen, Rational(5));
    s2(0, 1) = s2(1, 0) = WR::scalar(ngen, Rational(2));
    s2(1, 1) = WR::scalar(ngen, Rational(1));  // det 1
    WMat<Rational> sj = wmat_zero<Rational>(4, 4, ngen);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            sj(i, j) = s1(i, j);
            sj(i + 2, j + 2) = s2(i, j);
        }
    for (int trial = 0; trial < 10; ++trial) {
        // phi1 even so the iterated integral has no parity sign
        PR phi1(2, 2, ngen);
        for (int t = 0; t < 4; ++t) {
            PR raw = random_poly(rng, 2, 2, ngen, 1);
            for (const auto& [k, c] : raw.terms()) {
                WR ce = (MultiIndexPair::abs_J(k.J) & 1) ? c.odd_part() : c.even_part();
                phi1.add_term(k, ce);
            }
        }
        PR phi2 = random_poly(rng, 2, 2, ngen, 4);
        // embed into the product space coordinates (x,y,xi,eta)
        auto embed = [&](const PR& p, int xoff, int joff) {
            PR out(4, 4, ngen);
            for (const auto& [k, c] : p.terms()) {
                MultiIndexPair kk;
                kk.I.assign(4, 0);
                for (int i = 0; i < 2; ++i) kk.I[i + xoff] = k.I[i];
                kk.J = k.J << joff;
                out.add_term(kk, c);
            }
            return out;
        };
        PR joint = embed(phi1, 0, 0) * embed(phi2, 2, 2);
        GaussianIntegrand<Rational> gj{vw, sj, {}, joint, 16};
        GaussianIntegrand<Rational> g1{v, s1, {}, phi1, 12};
        GaussianIntegrand<Rational> g2{w, s2, {}, phi2, 12};
        CHECK(integrate(gj) == integrate(g1) * integrate(g2));
    }
}

TEST_CASE("Gaussian shift identity: soul-only linear term vs series expansion") {
    std::mt19937_64 rng(41);
    const int ngen = 6;
    SymplecticSuperSpace sp = SymplecticSuperSpace::standard(2, 2);
    WMat<Rational> s = wmat_zero<Rational>(2, 2, ngen);
    s(0, 0) = WR::scalar(ngen, Rational(2));
    s(0, 1) = s(1, 0) = WR::scalar(ngen, Rational(1));
    s(1, 1) = WR::scalar(ngen, Rational(1));
    for (int trial = 0; trial < 10; ++trial) {
        PR phi = random_poly(rng, 2, 2, ngen, 3, 1);
        std::vector<WR> ell{random_weil<Rational>(rng, ngen, 0, false, 2).soul(),
                            random_weil<Rational>(rng, ngen, 0, false, 2).soul()};
        // route 1: completed square inside integrate()
        GaussianIntegrand<Rational> g1{sp, s, ell, phi, 16};
        WR via_shift = integrate(g1);
        // route 2: exp(l^T x) folded into the prefactor as a finite series
        PR lx(2, 2, ngen);
        lx.add_term(MultiIndexPair{{1, 0}, 0u}, ell[0]);
        lx.add_term(MultiIndexPair{{0, 1}, 0u}, ell[1]);
        GaussianIntegrand<Rational> g2{sp, s, {}, phi * PR::exp_nilpotent(lx, ngen + 2), 16};
        CHECK(via_shift == integrate(g2));
    }
}

TEST_CASE("Gaussian shift identity with body: quadrature oracle") {
    const int ngen = 2;
    SymplecticSuperSpace sp = SymplecticSuperSpace::standard(2, 0);
    using PC = SuperPolynomial<Complex>;
    WMat<Complex> s = wmat_zero<Complex>(2, 2, ngen);
    double c = 2.0;
    s(0, 0) = WC::scalar(ngen, Complex(c, 0));
    s(1, 1) = WC::scalar(ngen, Complex(c, 0));
    double l1 = 0.7, l2 = -0.4;
    std::vector<WC> ell{WC::scalar(ngen, Complex(l1, 0)), WC::scalar(ngen, Complex(l2, 0))};
    // prefactor x^2 y
    PC phi(2, 0, ngen);
    phi.add_term(MultiIndexPair{{2, 1}, 0u}, WC::one(ngen));
    GaussianIntegrand<Complex> g{sp, s, ell, phi, 12};
    Complex got = integrate(g).body();
    double ix = simpson([&](double x) { return x * x * std::exp(-c * x * x / 2 + l1 * x); },
                        -14, 14, 6000);
    double iy = simpson([&](double y) { return y * std::exp(-c * y * y / 2 + l2 * y); },
                        -14, 14, 6000);
    double expect = ix * iy / (2 * M_PI);
    CHECK(std::abs(got.real() - expect) < 1e-9 * (1 + std::abs(expect)));
    CHECK(std::abs(got.imag()) < 1e-12);
}

TEST_CASE("integrate_exp_mu on the paper's two-dimensional examples") {
    const int ngen = 2;
    // (2,0), X = [[0,-c],[c,0]], c = 3: Spf = 1/3
    SymplecticSuperSpace s20 = SymplecticSuperSpace::standard(2, 0);
    SuperMatrix<Rational> x(s20, ngen);
    x.at(0, 1) = WR::scalar(ngen, Rational(-3));
    x.at(1, 0) = WR::scalar(ngen, Rational(3));
    CHECK(integrate_exp_mu(x) == WR::scalar(ngen, Rational(1, 3)));

    // (0,2), X = [[0,-c],[c,0]]: Spf = c, any rational c
    SymplecticSuperSpace s02 = SymplecticSuperSpace::standard(0, 2);
    for (Rational c : {Rational(1), Rational(-2), Rational(5, 2)}) {
        SuperMatrix<Rational> y(s02, ngen);
        y.at(0, 1) = WR::scalar(ngen, -c);
        y.at(1, 0) = WR::scalar(ngen, c);
        CHECK(integrate_exp_mu(y) == WR::scalar(ngen, c));
    }

    // body outside the convergence stratum errors
    SuperMatrix<Rational> neg(s20, ngen);
    neg.at(0, 1) = WR::scalar(ngen, Rational(3));
    neg.at(1, 0) = WR::scalar(ngen, Rational(-3));
    CHECK_THROWS_AS(integrate_exp_mu(neg), domain_error);
}

TEST_CASE("integrate_exp_mu with nilpotent perturbations stays exact") {
    const int ngen = 4;
    SymplecticSuperSpace s20 = SymplecticSuperSpace::standard(2, 0);
    SuperMatrix<Rational> x(s20, ngen);
    WR alpha = WR::blade(ngen, {1, 2}, Rational(1));
    // X = [[a, b],[c, -a]] with a = alpha, b = -1 - alpha, c = 1
    x.at(0, 0) = alpha;
    x.at(0, 1) = -WR::one(ngen) - alpha;
    x.at(1, 0) = WR::one(ngen);
    x.at(1, 1) = -alpha;
    // det X = -a^2 - bc = 1 + alpha; the oracle must equal det^{-1/2} as a jet
    WR oracle = integrate_exp_mu(x);
    WR det = WR::one(ngen) + alpha;
    CHECK(oracle * oracle * det == WR::one(ngen));
    CHECK(oracle == inverse_even(sqrt_even(det)));
}

TEST_CASE("complex-stratum oracle: continued determinant root") {
    const int ngen = 2;
    SymplecticSuperSpace s20 = SymplecticSuperSpace::standard(2, 0);
    // X = (1 + it) J2: Spf = 1/(1+it) by holomorphic continuation
    for (double t : {0.1, 0.4, 0.9}) {
        SuperMatrix<Complex> x(s20, ngen);
        Complex u(1.0, t);
        x.at(0, 1) = WC::scalar(ngen, -u);
        x.at(1, 0) = WC::scalar(ngen, u);
        WC got = integrate_exp_mu(x);
        Complex expect = Complex(1.0, 0.0) / u;
        CHECK(std::abs(got.body() - expect) < 1e-10);
    }
}
