#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "monotone_elliptic/grid.hpp"

using namespace monotone_elliptic;

namespace {

GridFunction random_function(const GridSpec& spec, std::mt19937_64& rng, Index lo, Index hi) {
    std::uniform_real_distribution<double> val(-1.0, 1.0);
    GridFunction u(spec);
    std::vector<Index> k(spec.dim);
    std::function<void(int)> fill = [&](int i) {
        if (i == spec.dim) {
            if (spec.on_grid(k)) u.set(k, val(rng));
            return;
        }
        for (k[i] = lo; k[i] <= hi; ++k[i]) fill(i + 1);
    };
    fill(0);
    return u;
}

double pair_sum(const GridFunction& a, const GridFunction& b) {
    double s = 0.0;
    for (const auto& [k, v] : a.values()) s += v * b[k];
    return s;
}

}  // namespace

TEST(Knots, InteriorCounts) {
    const auto D = DomainBox::unit(2);
    EXPECT_EQ(knots(GridSpec(1, 2), D, KnotSelection::interior).size(), 1u);
    EXPECT_EQ(knots(GridSpec(1, 2), D, KnotSelection::interior)[0], (MultiIndex{1, 1}));
    EXPECT_EQ(knots(GridSpec(2, 2), D, KnotSelection::interior).size(), 9u);
    EXPECT_EQ(knots(GridSpec::with_divisions(400, 2), D, KnotSelection::interior).size(), 399u * 399u);
}

TEST(Knots, ClosureIsInteriorPlusBoundaryInLexicographicOrder) {
    const GridSpec s(3, 2);
    const auto D = DomainBox::unit(2);
    const auto cl = knots(s, D, KnotSelection::closure);
    const auto in = knots(s, D, KnotSelection::interior);
    const auto bd = knots(s, D, KnotSelection::boundary);
    EXPECT_EQ(cl.size(), 81u);
    EXPECT_EQ(in.size() + bd.size(), cl.size());
    EXPECT_TRUE(std::is_sorted(cl.begin(), cl.end()));
    EXPECT_TRUE(std::is_sorted(in.begin(), in.end()));
}

TEST(Knots, MisalignedDomainThrows) {
    const DomainBox D({0.0, 0.0}, {0.3, 1.0});
    EXPECT_THROW(knots(GridSpec(2, 2), D, KnotSelection::interior), AlignmentError);
}

TEST(GridSpec, StepVolumeAndCoordinates) {
    const GridSpec s(2, MultiIndex{0, 0}, MultiIndex{3, 1});
    EXPECT_DOUBLE_EQ(s.step(), 0.25);
    EXPECT_EQ(s.volume(), 3);
    EXPECT_TRUE(s.on_grid({3, 5}));
    EXPECT_FALSE(s.on_grid({1, 5}));
    EXPECT_DOUBLE_EQ(s.coordinates({3, 2})[0], 0.75);
    EXPECT_THROW(GridSpec(0, 2).validate(), ParameterError);
}

TEST(GridSpec, NonDyadicDivisions) {
    const auto s = GridSpec::with_divisions(400, 2);
    EXPECT_EQ(s.divisions, 400);
    EXPECT_DOUBLE_EQ(s.step(), 1.0 / 400.0);
    EXPECT_EQ(GridSpec::with_divisions(64, 2).level, 6);
}

TEST(GridFunction, RejectsNonFiniteAndOffGrid) {
    GridFunction u(GridSpec(2, MultiIndex{0}, MultiIndex{2}));
    EXPECT_THROW(u.set({1}, 1.0), GridError);
    EXPECT_THROW(u.set({2}, std::nan("")), GridError);
    u.set({2}, 1.5);
    EXPECT_DOUBLE_EQ(u[{2}], 1.5);
    EXPECT_DOUBLE_EQ(u[{40}], 0.0);
}

TEST(Shift, DefinitionAndInverse) {
    const GridSpec s(3, 1);
    GridFunction d(s);
    d.set({0}, 1.0);
    const auto z = shift(d, 0, 1);
    EXPECT_DOUBLE_EQ(z[{-1}], 1.0);
    EXPECT_DOUBLE_EQ(z[{0}], 0.0);
    EXPECT_EQ(shift(d, 0, 0).values(), d.values());
    std::mt19937_64 rng(11);
    const auto u = random_function(GridSpec(3, 2), rng, -3, 3);
    EXPECT_EQ(shift(shift(u, 1, 2), 1, -2).values(), u.values());
}

TEST(Differences, ConstantAffineAndQuadratic) {
    const GridSpec s(2, 1);
    const std::vector<MultiIndex> at{{0}, {1}, {2}, {3}, {4}};
    const auto c = GridFunction::sample(s, at, [](const Point&) { return 3.0; });
    const auto dc = forward_diff(c, 0, 1);
    for (const auto& [k, v] : dc.values())
        if (k[0] >= 0 && k[0] < 4) EXPECT_DOUBLE_EQ(v, 0.0);
    std::vector<MultiIndex> wide;
    for (Index k = -10; k <= 20; ++k) wide.push_back({k});
    const auto lin = GridFunction::sample(s, wide, [](const Point& x) { return x[0]; });
    for (Index r : {1, 2, 3}) {
        const auto du = forward_diff(lin, 0, r);
        for (Index k = -10; k + r <= 20; ++k) EXPECT_NEAR(du[{k}], 1.0, 1e-14);
    }
    const auto sq = GridFunction::sample(s, at, [](const Point& x) { return x[0] * x[0]; });
    EXPECT_DOUBLE_EQ(forward_diff(sq, 0, 1)[{2}], 1.25);
}

TEST(Differences, BackwardIsNegativeTransposeOfForward) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const GridSpec s(3, 2);
        const auto u = random_function(s, rng, -4, 4);
        const auto v = random_function(s, rng, -3, 5);
        for (int axis = 0; axis < 2; ++axis)
            for (Index r : {1, 2, 3}) {
                const double lhs = pair_sum(forward_diff(u, axis, r), v);
                const double rhs = -pair_sum(u, backward_diff(v, axis, r));
                EXPECT_NEAR(lhs, rhs, 1e-9 * (1.0 + std::abs(lhs)));
            }
    }
}

TEST(Differences, BackwardEqualsShiftedForward) {
    std::mt19937_64 rng(8);
    const GridSpec s(3, 2);
    const auto u = random_function(s, rng, -3, 3);
    for (Index r : {1, 3}) {
        const auto lhs = backward_diff(u, 0, r);
        const auto rhs = shift(forward_diff(u, 0, r), 0, -r);
        for (const auto& [k, v] : lhs.values()) EXPECT_NEAR(v, rhs[k], 1e-12);
        for (const auto& [k, v] : rhs.values()) EXPECT_NEAR(v, lhs[k], 1e-12);
    }
}

TEST(Differences, CommuteWithTransverseShift) {
    std::mt19937_64 rng(9);
    const GridSpec s(3, 2);
    const auto u = random_function(s, rng, -3, 3);
    const auto a = forward_diff(shift(u, 1, 2), 0, 3);
    const auto b = shift(forward_diff(u, 0, 3), 1, 2);
    for (const auto& [k, v] : a.values()) EXPECT_NEAR(v, b[k], 1e-12);
    for (const auto& [k, v] : b.values()) EXPECT_NEAR(v, a[k], 1e-12);
}

TEST(Norms, SingleValue) {
    GridFunction u(GridSpec(2, 2));
    EXPECT_DOUBLE_EQ(lp_norm(u, 1.0), 0.0);
    EXPECT_DOUBLE_EQ(lp_norm(u, INFINITY), 0.0);
    u.set({1, 1}, 2.0);
    EXPECT_DOUBLE_EQ(lp_norm(u, 1.0), 2.0);
    EXPECT_DOUBLE_EQ(lp_norm(u, INFINITY), 2.0);
    GridFunction w(GridSpec(2, MultiIndex{0, 0}, MultiIndex{3, 1}));
    w.set({3, 1}, 2.0);
    EXPECT_DOUBLE_EQ(lp_norm(w, 1.0), 6.0);
    EXPECT_THROW(lp_norm(u, 0.5), ParameterError);
}

TEST(Norms, SobolevSeminormOfIndicator) {
    GridFunction u(GridSpec(1, 1));
    u.set({1}, 1.0);
    EXPECT_DOUBLE_EQ(sobolev_seminorm_sq(u), 8.0);
    EXPECT_DOUBLE_EQ(sobolev_norm_sq(u), 9.0);
}

TEST(Nesting, CoarseKnotsAreFineKnots) {
    const auto D = DomainBox::unit(2);
    for (int n = 1; n < 5; ++n) {
        const auto coarse = knots(GridSpec(n, 2), D, KnotSelection::closure);
        const GridSpec fine(n + 1, 2);
        for (const auto& k : coarse) {
            const MultiIndex f{2 * k[0], 2 * k[1]};
            EXPECT_TRUE(fine.on_grid(f));
            EXPECT_DOUBLE_EQ(fine.coordinates(f)[0], GridSpec(n, 2).coordinates(k)[0]);
        }
    }
}

TEST(Subgrid, TranslationInvariant) {
    const GridSpec s(3, MultiIndex{1, 0}, MultiIndex{3, 2});
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<Index> idx(-20, 20), p(-4, 4);
    for (int t = 0; t < 200; ++t) {
        MultiIndex k{idx(rng), idx(rng)};
        const int axis = t % 2;
        MultiIndex m = k;
        m[axis] += p(rng) * s.stride[axis];
        EXPECT_EQ(s.on_grid(k), s.on_grid(m));
    }
}
