#include <random>

#include <gtest/gtest.h>

#include "monotone_elliptic/builtins.hpp"
#include "monotone_elliptic/scheme.hpp"
#include "monotone_elliptic/solver.hpp"

using namespace monotone_elliptic;

namespace {

SparseMatrix from_dense(const std::vector<std::vector<double>>& a) {
    std::vector<MultiIndex> ks;
    for (std::size_t i = 0; i < a.size(); ++i) ks.push_back({static_cast<Index>(i)});
    std::vector<std::tuple<std::size_t, std::size_t, double>> t;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j)
            if (a[i][j] != 0.0) t.emplace_back(i, j, a[i][j]);
    return SparseMatrix::from_triplets(KnotSet(ks), t);
}

SparseMatrix laplacian_1d(std::size_t n, double h) {
    std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        a[i][i] = 2 / (h * h);
        if (i > 0) a[i][i - 1] = -1 / (h * h);
        if (i + 1 < n) a[i][i + 1] = -1 / (h * h);
    }
    return from_dense(a);
}

SparseMatrix example72_restricted(int level) {
    return restrict_dirichlet(assemble(example72_field(), GridSpec(level, 2), DomainBox::unit(2))).matrix;
}

}  // namespace

TEST(Jacobi, IdentityConvergesInOneStep) {
    const auto a = from_dense({{1, 0}, {0, 1}});
    const auto r = jacobi_solve(a, {2.0, -3.0}, {});
    EXPECT_TRUE(r.report.converged);
    EXPECT_LE(r.report.iterations, 2u);
    EXPECT_DOUBLE_EQ(r.u[0], 2.0);
    EXPECT_DOUBLE_EQ(r.u[1], -3.0);
}

TEST(GaussSeidel, DiagonalAndTridiagonal) {
    const auto d = from_dense({{2, 0}, {0, 4}});
    const auto r = gauss_seidel_solve(d, {2.0, 2.0}, {});
    EXPECT_LE(r.report.iterations, 2u);
    EXPECT_DOUBLE_EQ(r.u[1], 0.5);
    const double h = 0.25;
    const auto a = laplacian_1d(3, h);
    SolveConfig cfg;
    cfg.tol = 1e-12;
    const auto s = gauss_seidel_solve(a, {1 / (h * h), 0, 0}, cfg);
    EXPECT_TRUE(s.report.converged);
    EXPECT_NEAR(s.u[0], 0.75, 1e-10);
    EXPECT_NEAR(s.u[1], 0.5, 1e-10);
    EXPECT_NEAR(s.u[2], 0.25, 1e-10);
    EXPECT_LT(s.report.final_delta, cfg.tol);
}

TEST(Solver, StructuralAndParameterErrors) {
    const auto a = from_dense({{0, -1}, {-1, 2}});
    EXPECT_THROW(jacobi_solve(a, {1, 1}, {}), StructuralError);
    SolveConfig bad;
    bad.tol = 0;
    EXPECT_THROW(jacobi_solve(laplacian_1d(3, 0.25), {1, 1, 1}, bad), ParameterError);
    bad = {};
    bad.lambda = -1;
    EXPECT_THROW(jacobi_solve(laplacian_1d(3, 0.25), {1, 1, 1}, bad), ParameterError);
}

TEST(Solver, IterationCapIsReportedNotThrown) {
    SolveConfig cfg;
    cfg.max_iters = 5;
    const auto r = jacobi_solve(laplacian_1d(50, 0.02), std::vector<double>(50, 1.0), cfg);
    EXPECT_FALSE(r.report.converged);
    EXPECT_EQ(r.report.iterations, 5u);
}

TEST(Residual, Basics) {
    const auto a = laplacian_1d(3, 0.25);
    const std::vector<double> mu{3, -7, 1};
    EXPECT_DOUBLE_EQ(residual(a, {0, 0, 0}, mu), 7.0);
    SolveConfig cfg;
    cfg.tol = 1e-13;
    const auto r = gauss_seidel_solve(a, mu, cfg);
    EXPECT_LT(residual(a, r.u, mu), 1e-9);
    const auto j = jacobi_solve(a, mu, cfg);
    EXPECT_LE(j.report.residual_inf, 32.0 * cfg.tol * 10);
}

TEST(Jacobi, NeumannSeriesPartialSums) {
    const auto a = example72_restricted(2);  // 3x3 interior fixture
    const std::size_t n = a.order();
    std::vector<double> mu(n);
    for (std::size_t p = 0; p < n; ++p) mu[p] = 1.0 + 0.1 * static_cast<double>(p);
    std::vector<double> invK(n), term(n), sum(n, 0.0);
    for (std::size_t p = 0; p < n; ++p) invK[p] = 1.0 / a.diagonal(p);
    for (std::size_t p = 0; p < n; ++p) term[p] = invK[p] * mu[p];
    for (std::size_t m = 1; m <= 12; ++m) {
        for (std::size_t p = 0; p < n; ++p) sum[p] += term[p];
        SolveConfig cfg;
        cfg.max_iters = m;
        cfg.tol = 1e-300;
        const auto r = jacobi_solve(a, mu, cfg);
        for (std::size_t p = 0; p < n; ++p) EXPECT_NEAR(r.u[p], sum[p], 1e-13 * std::abs(sum[p]));
        // term <- K^{-1} Q term
        std::vector<double> next(n, 0.0);
        for (std::size_t q = 0; q < n; ++q)
            for (const auto& e : a.row(q))
                if (e.col != q) next[q] -= e.value * term[e.col];
        for (std::size_t q = 0; q < n; ++q) term[q] = invK[q] * next[q];
    }
}

TEST(Jacobi, SplittingIsColumnContraction) {
    // column c of Q K^{-1} has 1-norm sum_{r != c} |A_rc| / A_cc
    const auto a = example72_restricted(4);
    std::vector<double> off(a.order(), 0.0);
    for (std::size_t r = 0; r < a.order(); ++r)
        for (const auto& e : a.row(r))
            if (e.col != r) off[e.col] += std::abs(e.value);
    double worst = 0.0, best = 1.0;
    for (std::size_t c = 0; c < a.order(); ++c) {
        worst = std::max(worst, off[c] / a.diagonal(c));
        best = std::min(best, off[c] / a.diagonal(c));
    }
    EXPECT_LE(worst, 1.0 + 1e-12);
    EXPECT_LT(best, 1.0);
}

TEST(Jacobi, NonnegativeDataGivesNonnegativeIterates) {
    std::mt19937_64 rng(40);
    std::uniform_real_distribution<double> u(0, 1);
    const auto a = example72_restricted(4);
    for (int t = 0; t < 10; ++t) {
        std::vector<double> mu(a.order());
        for (auto& v : mu) v = u(rng) < 0.3 ? u(rng) : 0.0;
        for (std::size_t m : {1u, 5u, 50u, 500u}) {
            SolveConfig cfg;
            cfg.max_iters = m;
            const auto r = jacobi_solve(a, mu, cfg);
            for (double v : r.u) EXPECT_GE(v, 0.0);
        }
    }
}

TEST(Solvers, SameFixedPoint) {
    const auto a = example72_restricted(4);
    std::vector<double> mu(a.order());
    for (std::size_t p = 0; p < mu.size(); ++p) mu[p] = std::sin(0.1 * static_cast<double>(p));
    SolveConfig cfg;
    cfg.tol = 1e-10;
    const auto j = jacobi_solve(a, mu, cfg);
    const auto g = gauss_seidel_solve(a, mu, cfg);
    ASSERT_TRUE(j.report.converged && g.report.converged);
    EXPECT_LT(g.report.iterations, j.report.iterations);
    for (std::size_t p = 0; p < mu.size(); ++p) EXPECT_NEAR(j.u[p], g.u[p], 10 * cfg.tol);
}

TEST(Solvers, ThreadCountDoesNotChangeResult) {
    const auto a = example72_restricted(5);
    std::vector<double> mu(a.order(), 1.0);
    SolveConfig one, four;
    four.threads = 4;
    const auto x = jacobi_solve(a, mu, one);
    const auto y = jacobi_solve(a, mu, four);
    EXPECT_EQ(x.report.iterations, y.report.iterations);
    EXPECT_EQ(x.u, y.u);
}

TEST(Solvers, DiaAndCsrPathsAgree) {
    // an isolated extra knot breaks the index box and forces the CSR path
    const auto a = example72_restricted(4);
    std::vector<std::tuple<std::size_t, std::size_t, double>> t;
    for (std::size_t r = 0; r < a.order(); ++r)
        for (const auto& e : a.row(r)) t.emplace_back(r, e.col, e.value);
    std::vector<MultiIndex> ks = a.knots().knots();
    ks.push_back({100, 100});
    t.emplace_back(a.order(), a.order(), 1.0);
    const auto b = SparseMatrix::from_triplets(KnotSet(ks), t);
    std::vector<double> mu(a.order(), 1.0), mu2(b.order(), 1.0);
    mu2.back() = 0.0;
    const auto x = jacobi_solve(a, mu, {});
    const auto y = jacobi_solve(b, mu2, {});
    EXPECT_EQ(x.report.iterations, y.report.iterations);
    for (std::size_t p = 0; p < a.order(); ++p) EXPECT_NEAR(x.u[p], y.u[p], 1e-12);
}
