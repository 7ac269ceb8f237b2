#pragma once

// Built-in coefficient fields and exact solutions.

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "coeff.hpp"

namespace monotone_elliptic {

struct ExactSolution {
    std::string name;
    std::function<double(const Point&)> value;
    std::function<Point(const Point&)> gradient;
    /// Points where the solution is singular; knots there are excluded from errors.
    std::vector<Point> singular;
};

inline Tensor tensor2(double a11, double a12, double a22) {
    Tensor a(2, 2);
    a << a11, a12, a12, a22;
    return a;
}

inline CoefficientField identity_field(int dim, std::vector<Index> stride = {}) {
    Region r;
    r.id = "all";
    r.constant = Tensor::Identity(dim, dim);
    r.stride = stride.empty() ? std::vector<Index>(dim, 1) : std::move(stride);
    CoefficientField f(dim, {r});
    f.set_bounds(1.0, 1.0);
    return f;
}

inline CoefficientField constant_field(const Tensor& a, std::vector<Index> stride) {
    Region r;
    r.id = "all";
    r.constant = a;
    r.stride = std::move(stride);
    CoefficientField f(static_cast<int>(a.rows()), {r});
    Eigen::SelfAdjointEigenSolver<Tensor> es(a, Eigen::EigenvaluesOnly);
    f.set_bounds(es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff());
    return f;
}

/// diag(1,1) for x_1 < 1/2, diag(sigma^2, 1) otherwise (unscaled).
inline CoefficientField example71_field(double sigma2 = 10.0) {
    Region left;
    left.id = "left";
    left.boxes = {Box{{-kInf, -kInf}, {0.5, kInf}, false}};
    left.constant = tensor2(1.0, 0.0, 1.0);
    left.stride = {1, 1};
    Region right;
    right.id = "right";
    right.constant = tensor2(sigma2, 0.0, 1.0);
    right.stride = {1, 1};
    CoefficientField f(2, {left, right});
    f.set_bounds(std::min(1.0, sigma2), std::max(1.0, sigma2));
    return f;
}

/// [[sigma^2, rho], [rho, 1]] on the closed box [1/4, 3/4]^2, diag(sigma^2, 1) elsewhere.
inline CoefficientField example72_field(double sigma2 = 10.0, double rho = 2.0, std::vector<Index> r = {3, 1}) {
    if (!(rho * rho < sigma2)) throw ParameterError("example72 requires rho^2 < sigma^2");
    Region d0;
    d0.id = "D0";
    d0.boxes = {Box{{0.25, 0.25}, {0.75, 0.75}, true}};
    d0.constant = tensor2(sigma2, rho, 1.0);
    d0.stride = std::move(r);
    Region outer;
    outer.id = "outer";
    outer.constant = tensor2(sigma2, 0.0, 1.0);
    outer.stride = {1, 1};
    CoefficientField f(2, {d0, outer});
    Eigen::SelfAdjointEigenSolver<Tensor> es(*d0.constant, Eigen::EigenvaluesOnly);
    f.set_bounds(std::min(es.eigenvalues().minCoeff(), 1.0), std::max(es.eigenvalues().maxCoeff(), sigma2));
    return f;
}

/// Fundamental solution of the example71 operator with pole t = (1/2, 1/2).
inline ExactSolution example71_exact(double sigma2 = 10.0) {
    const double sigma = std::sqrt(sigma2);
    const double c = 1.0 / (2.0 * std::numbers::pi * (1.0 + sigma));
    ExactSolution s;
    s.name = "example71";
    s.value = [=](const Point& x) {
        const double dx = x[0] - 0.5, dy = x[1] - 0.5;
        if (x[0] < 0.5) return -c * std::log(dx * dx + dy * dy);
        return -c * (std::log(dx * dx + sigma2 * dy * dy) - std::log(sigma2));
    };
    s.gradient = [=](const Point& x) {
        const double dx = x[0] - 0.5, dy = x[1] - 0.5;
        if (x[0] < 0.5) {
            const double q = dx * dx + dy * dy;
            return Point{-c * 2.0 * dx / q, -c * 2.0 * dy / q};
        }
        const double q = dx * dx + sigma2 * dy * dy;
        return Point{-c * 2.0 * dx / q, -c * 2.0 * sigma2 * dy / q};
    };
    s.singular = {{0.5, 0.5}};
    return s;
}

inline ExactSolution example72_exact() {
    ExactSolution s;
    s.name = "example72";
    s.value = [](const Point& x) { return x[0] * x[1]; };
    s.gradient = [](const Point& x) { return Point{x[1], x[0]}; };
    return s;
}

/// prod_i sin(pi x_i); -Laplace of it is d pi^2 times itself.
inline ExactSolution sine_product_exact() {
    ExactSolution s;
    s.name = "sine_product";
    s.value = [](const Point& x) {
        double v = 1.0;
        for (double xi : x) v *= std::sin(std::numbers::pi * xi);
        return v;
    };
    s.gradient = [](const Point& x) {
        Point g(x.size(), std::numbers::pi);
        for (std::size_t i = 0; i < x.size(); ++i)
            for (std::size_t j = 0; j < x.size(); ++j)
                g[i] *= i == j ? std::cos(std::numbers::pi * x[j]) : std::sin(std::numbers::pi * x[j]);
        return g;
    };
    return s;
}

inline ExactSolution named_exact(const std::string& name) {
    if (name == "example71") return example71_exact();
    if (name == "example72") return example72_exact();
    if (name == "sine_product") return sine_product_exact();
    throw ConfigurationError("unknown exact solution '" + name + "'");
}

}  // namespace monotone_elliptic
