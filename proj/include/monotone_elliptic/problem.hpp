#pragma once

// Dirichlet problem pipeline: assemble, certify, restrict, lift, solve, compare.

#include <chrono>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "builtins.hpp"
#include "coeff.hpp"
#include "embed.hpp"
#include "rhs.hpp"
#include "scheme.hpp"
#include "solver.hpp"

namespace monotone_elliptic {

/// mu_k := a(psi_k, u*) / ||psi_k||_1, integrated cellwise.
struct WeakFormOfExact {};

enum class InitialGuess { zero, boundary_interpolant };

inline const char* to_string(InitialGuess g) {
    return g == InitialGuess::zero ? "zero" : "boundary_interpolant";
}

struct Problem {
    DomainBox domain = DomainBox::unit(2);
    Index divisions = 16;
    SchemeVariant variant = SchemeVariant::extended;
    MixedRule mixed_rule = MixedRule::cell_fraction;
    CoefficientField field;
    std::variant<MeasureSpec, FunctionalSpec, WeakFormOfExact> rhs = MeasureSpec{};
    std::optional<ExactSolution> exact;
    /// Boundary data; empty means homogeneous.
    BoundaryData boundary;
    SolveConfig solver;
    InitialGuess initial_guess = InitialGuess::zero;

    GridSpec grid() const { return GridSpec::with_divisions(divisions, domain.dim()); }
};

struct Outcome {
    SchemeMatrix scheme;
    RestrictedMatrix restricted;
    StencilCertificate certificate_full;
    StencilCertificate certificate_restricted;
    GridFunction mu;
    GridFunction lift;
    /// Interior values from the solver, boundary values from the data.
    GridFunction solution;
    SolveReport report;
    std::optional<ErrorReport> errors;
    double assembly_seconds = 0.0;
};

/// Weak-form functional of an exact solution: f_0 = 0, f_i = -sum_j a_ij d_j u*.
inline FunctionalSpec weak_form_functional(const CoefficientField& field, const ExactSolution& u) {
    FunctionalSpec F;
    const int d = field.dim();
    for (int i = 0; i < d; ++i)
        F.f.push_back([&field, u, i, d](const Point& x) {
            const Point g = u.gradient(x);
            const int l = detail::locate_or_nearest(field, x);
            const Tensor a = field.region(l).extended(x);
            double s = 0.0;
            for (int j = 0; j < d; ++j) s += a(i, j) * g[j];
            return -s;
        });
    return F;
}

/// Transfinite (Coons) interpolant of the boundary data on a 1D or 2D box.
inline std::function<double(const Point&)> boundary_interpolant(const DomainBox& D,
                                                                const std::function<double(const Point&)>& g) {
    if (D.dim() == 1)
        return [=](const Point& x) {
            const double s = (x[0] - D.lower[0]) / (D.upper[0] - D.lower[0]);
            return (1.0 - s) * g({D.lower[0]}) + s * g({D.upper[0]});
        };
    if (D.dim() != 2) throw ConfigurationError("boundary_interpolant initial guess needs d <= 2");
    return [=](const Point& x) {
        const double a = D.lower[0], b = D.upper[0], c = D.lower[1], e = D.upper[1];
        const double s = (x[0] - a) / (b - a), t = (x[1] - c) / (e - c);
        const double edges = (1 - s) * g({a, x[1]}) + s * g({b, x[1]}) + (1 - t) * g({x[0], c}) + t * g({x[0], e});
        const double corners = (1 - s) * (1 - t) * g({a, c}) + s * (1 - t) * g({b, c}) + (1 - s) * t * g({a, e}) +
                               s * t * g({b, e});
        return edges - corners;
    };
}

inline Outcome solve_problem(const Problem& pb) {
    Outcome out;
    const GridSpec spec = pb.grid();
    const auto t0 = std::chrono::steady_clock::now();
    AssemblyOptions ao;
    ao.variant = pb.variant;
    ao.mixed_rule = pb.mixed_rule;
    out.scheme = assemble(pb.field, spec, pb.domain, ao);
    out.certificate_full = verify_compartmental(out.scheme.matrix, false);
    out.restricted = restrict_dirichlet(out.scheme);
    out.certificate_restricted = verify_compartmental(out.restricted.matrix, true);
    out.assembly_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!out.certificate_full.compartmental || !out.certificate_restricted.compartmental)
        throw AssemblyError("assembled matrix is not compartmental");

    if (const auto* m = std::get_if<MeasureSpec>(&pb.rhs)) {
        out.mu = discretize_measure(*m, spec, pb.domain);
    } else if (const auto* f = std::get_if<FunctionalSpec>(&pb.rhs)) {
        out.mu = discretize_functional(*f, spec, pb.domain);
    } else {
        if (!pb.exact) throw ConfigurationError("weak-form right-hand side needs an exact solution");
        out.mu = discretize_functional(weak_form_functional(pb.field, *pb.exact), spec, pb.domain);
    }
    out.lift = dirichlet_lift(out.scheme.matrix, pb.boundary, out.scheme.interior, spec);

    const SparseMatrix& A = out.restricted.matrix;
    std::vector<double> rhs = to_vector(A, out.mu);
    const std::vector<double> c = to_vector(A, out.lift);
    for (std::size_t p = 0; p < rhs.size(); ++p) rhs[p] += c[p];

    std::vector<double> u0;
    if (pb.initial_guess == InitialGuess::boundary_interpolant && pb.boundary.g) {
        const auto ip = boundary_interpolant(pb.domain, pb.boundary.g);
        u0.resize(A.order());
        for (std::size_t p = 0; p < A.order(); ++p) u0[p] = ip(spec.coordinates(A.knots()[p]));
    }
    SolveResult res = iterate(A, rhs, pb.solver, std::move(u0));
    out.report = res.report;

    GridFunction interior_solution = to_grid_function(A, res.u, spec);
    out.solution = interior_solution;
    for (const auto& k : knots(spec, pb.domain, KnotSelection::boundary))
        out.solution.set(k, pb.boundary.g ? pb.boundary.g(spec.coordinates(k)) : 0.0);

    if (pb.exact) {
        std::set<MultiIndex> exclude;
        for (const auto& p : pb.exact->singular) {
            MultiIndex k(p.size());
            bool on_grid = true;
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double q = p[i] * static_cast<double>(spec.divisions);
                k[i] = static_cast<Index>(std::llround(q));
                on_grid = on_grid && q == static_cast<double>(k[i]);
            }
            if (on_grid) exclude.insert(k);
        }
        out.errors = relative_errors(interior_solution, pb.exact->value, exclude);
    }
    return out;
}

}  // namespace monotone_elliptic
