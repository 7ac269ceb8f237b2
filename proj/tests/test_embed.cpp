#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "monotone_elliptic/embed.hpp"

using namespace monotone_elliptic;

namespace {

GridFunction random_box_function(const GridSpec& s, std::mt19937_64& rng, Index lo, Index hi) {
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    GridFunction u(s);
    const int d = s.dim;
    MultiIndex k(d, lo);
    while (true) {
        if (s.on_grid(k)) u.set(k, val(rng));
        int i = 0;
        while (i < d && ++k[i] > hi) k[i++] = lo;
        if (i == d) break;
    }
    return u;
}

}  // namespace

TEST(HatBasis, MassAndPartitionOfUnity) {
    const HatBasis b(GridSpec(3, 2));
    EXPECT_DOUBLE_EQ(b.mass(), 1.0 / 64.0);
    const HatBasis b3(GridSpec(3, MultiIndex{0, 0}, MultiIndex{3, 1}));
    EXPECT_DOUBLE_EQ(b3.mass(), 3.0 / 64.0);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> x(0.0, 1.0);
    for (const HatBasis* basis : {&b, &b3})
        for (int t = 0; t < 1000; ++t) {
            const Point p{x(rng), x(rng)};
            double s = 0.0;
            for (const auto& k : basis->supporting(p)) s += basis->psi(k, p);
            EXPECT_NEAR(s, 1.0, 1e-14);
        }
}

TEST(HatBasis, IntegralOverMatchesQuadrature) {
    const HatBasis b(GridSpec(2, 2));
    const MultiIndex k{2, 1};
    EXPECT_NEAR(b.integral_over(k, {0, 0}, {1, 1}), b.mass(), 1e-15);
    EXPECT_NEAR(b.integral_over(k, {0.5, 0}, {1, 1}), 0.5 * b.mass(), 1e-15);
    const auto one = [](const Point&) { return 1.0; };
    EXPECT_NEAR(b.integrate(k, one, DomainBox({0.5, 0.0}, {1.0, 1.0})), 0.5 * b.mass(), 1e-15);
}

TEST(Embed, DeltaIsHatAndKnotInterpolation) {
    const GridSpec s(2, 2);
    GridFunction d(s);
    d.set({2, 2}, 1.0);
    const auto e = embed(d);
    const HatBasis b(s);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> x(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        const Point p{x(rng), x(rng)};
        EXPECT_NEAR(e(p), b.psi({2, 2}, p), 1e-14);
    }
    const auto u = random_box_function(s, rng, 0, 4);
    const auto back = embed(u).restrict_to([&] {
        std::vector<MultiIndex> at;
        for (const auto& [k, v] : u.values()) at.push_back(k);
        return at;
    }());
    for (const auto& [k, v] : u.values()) EXPECT_NEAR(back[k], v, 1e-15);
}

TEST(Embed, ReproducesAffine) {
    const GridSpec s(3, 2);
    std::vector<MultiIndex> at;
    for (Index i = 0; i <= 8; ++i)
        for (Index j = 0; j <= 8; ++j) at.push_back({i, j});
    const auto f = [](const Point& x) { return 0.3 + 2.0 * x[0] - 1.5 * x[1]; };
    const auto e = embed(GridFunction::sample(s, at, f));
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> x(0.0, 1.0);
    for (int t = 0; t < 500; ++t) {
        const Point p{x(rng), x(rng)};
        EXPECT_NEAR(e(p), f(p), 1e-13);
    }
}

TEST(Fourier, ConstantAffineQuadratic) {
    const GridSpec s(3, 1);
    const HatBasis b(s);
    const std::vector<MultiIndex> at{{1}, {3}, {6}};
    const auto c = fourier_coefficients([](const Point&) { return 2.5; }, b, at);
    for (const auto& k : at) EXPECT_NEAR(c[k], 2.5, 1e-14);
    const auto a = fourier_coefficients([](const Point& x) { return 1.0 - 3.0 * x[0]; }, b, at);
    for (const auto& k : at) EXPECT_NEAR(a[k], 1.0 - 3.0 * s.coordinate(k[0]), 1e-14);
    const double h = s.step();
    const auto q = fourier_coefficients([](const Point& x) { return x[0] * x[0]; }, b, at);
    for (const auto& k : at) {
        const double xk = s.coordinate(k[0]);
        EXPECT_NEAR(q[k], xk * xk + h * h / 6.0, 1e-15);
    }
}

TEST(Inner, MassProfile) {
    const GridSpec s(3, 1);
    GridFunction a(s), b(s), c(s);
    a.set({3}, 1.0);
    b.set({4}, 1.0);
    c.set({7}, 1.0);
    const double h = s.step();
    EXPECT_NEAR(l2_inner(a, a), 2.0 / 3.0 * h, 1e-16);
    EXPECT_NEAR(l2_inner(a, b), 1.0 / 6.0 * h, 1e-16);
    EXPECT_DOUBLE_EQ(l2_inner(a, c), 0.0);
    EXPECT_THROW(l2_inner(a, GridFunction(GridSpec(4, 1))), GridError);
}

TEST(Inner, MassMatchesQuadratureOfEmbedding) {
    std::mt19937_64 rng(6);
    const GridSpec s(3, MultiIndex{0, 0}, MultiIndex{2, 1});
    const auto u = random_box_function(s, rng, 2, 6);
    const auto v = random_box_function(s, rng, 1, 5);
    const auto eu = embed(u), ev = embed(v);
    // cellwise 3-point Gauss is exact for the biquadratic product
    double q = 0.0;
    const double h = s.step();
    for (Index i = -2; i < 10; i += 2)
        for (Index j = -2; j < 10; ++j)
            for (int a = 0; a < 3; ++a)
                for (int c = 0; c < 3; ++c) {
                    const Point p{(i + 2 * kGaussNodes[a]) * h, (j + kGaussNodes[c]) * h};
                    q += kGaussWeights[a] * kGaussWeights[c] * 2 * h * h * eu(p) * ev(p);
                }
    EXPECT_NEAR(l2_inner(u, v), q, 1e-13);
}

TEST(Inner, GradientEnergyTwoWays) {
    std::mt19937_64 rng(8);
    for (const auto& s : {GridSpec(3, 2), GridSpec(3, MultiIndex{0, 0}, MultiIndex{3, 1}), GridSpec(2, 3)}) {
        const auto u = random_box_function(s, rng, 1, 6);
        for (int axis = 0; axis < s.dim; ++axis) {
            const double a = stiffness_inner(u, u, axis);
            const double b = gradient_energy_chi(u, axis);
            EXPECT_NEAR(a, b, 1e-12 * std::abs(a));
        }
    }
}

TEST(Inner, NormEquivalence) {
    std::mt19937_64 rng(10);
    for (int d = 1; d <= 3; ++d)
        for (int t = 0; t < 30; ++t) {
            const GridSpec s(3, d);
            const auto u = random_box_function(s, rng, 1, 5);
            const double hd = std::pow(s.step(), d);
            const double r2 = std::pow(lp_norm(u, 2.0), 2);
            const double m = l2_inner(u, u);
            EXPECT_LE(m, hd * r2 * (1 + 1e-12));
            EXPECT_GE(m, std::pow(3.0, -d) * hd * r2 * (1 - 1e-12));
        }
}

TEST(Fourier, Contraction) {
    const GridSpec s(4, 2);
    const HatBasis b(s);
    const auto f = [](const Point& x) { return std::sin(std::numbers::pi * x[0]) * std::sin(std::numbers::pi * x[1]); };
    const auto fh = fourier_coefficients(f, b, knots(s, DomainBox::unit(2), KnotSelection::interior));
    // ||f||_1 = 4/pi^2, ||f||_2 = 1/2, ||f||_inf = 1
    const double h2 = s.step() * s.step();
    EXPECT_LE(h2 * lp_norm(fh, 1.0), 4.0 / (std::numbers::pi * std::numbers::pi));
    EXPECT_LE(std::sqrt(h2) * lp_norm(fh, 2.0), 0.5);
    EXPECT_LE(lp_norm(fh, INFINITY), 1.0);
}

TEST(Errors, ExactSamplesAndExclusion) {
    const GridSpec s(3, 2);
    const auto at = knots(s, DomainBox::unit(2), KnotSelection::interior);
    const auto f = [](const Point& x) { return x[0] * x[1] + 1.0; };
    const auto u = GridFunction::sample(s, at, f);
    const auto r = relative_errors(u, f);
    EXPECT_EQ(r.eps1, 0.0);
    EXPECT_EQ(r.eps_inf, 0.0);
    auto w = u;
    w.set({4, 4}, f({0.5, 0.5}) + 0.5);
    w.set({2, 2}, f({0.25, 0.25}) - 0.1);
    const auto e = relative_errors(w, f);
    EXPECT_EQ(e.argmax, (MultiIndex{4, 4}));
    EXPECT_DOUBLE_EQ(e.max_abs_diff, 0.5);
    const auto x = relative_errors(w, f, {{4, 4}});
    EXPECT_EQ(x.argmax, (MultiIndex{2, 2}));
    EXPECT_EQ(x.knots, at.size() - 1);
    GridFunction one(s);
    one.set({1, 1}, 1.0);
    EXPECT_THROW(relative_errors(one, f, {{1, 1}}), GridError);
}
