#pragma once

// Measure and W_2^{-1} right-hand sides as grid functionals, and Dirichlet
// lifting of boundary data.

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "embed.hpp"
#include "grid.hpp"
#include "sparse.hpp"

namespace monotone_elliptic {

class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Piecewise-constant density: sum of value * indicator(box), clipped to D.
struct BoxPiece {
    Point lower, upper;
    double value = 0.0;
};

struct Density {
    std::vector<BoxPiece> pieces;
    std::function<double(const Point&)> function;  // used when pieces is empty
    double weight = 1.0;
};

struct PointDirac {
    Point location;
    double weight = 1.0;
};

/// weight * delta(x_axis - level) on the transverse box [lower, upper]
/// (entries for `axis` ignored).
struct LineDirac {
    int axis = 0;
    double level = 0.0;
    Point lower, upper;
    double weight = 1.0;
};

using MeasureComponent = std::variant<Density, PointDirac, LineDirac>;

struct MeasureSpec {
    std::vector<MeasureComponent> components;
};

/// mu = f_0 + sum_i d_i f_i.
struct FunctionalSpec {
    std::function<double(const Point&)> f0;
    std::vector<std::function<double(const Point&)>> f;
};

struct BoundaryData {
    std::function<double(const Point&)> g;
};

namespace detail {

inline bool in_closure(const DomainBox& d, const Point& x) {
    for (int i = 0; i < d.dim(); ++i)
        if (x[i] < d.lower[i] || x[i] > d.upper[i]) return false;
    return true;
}

}  // namespace detail

/// <psi_k | component> (unnormalized).
inline double hat_integral(const MeasureComponent& c, const HatBasis& basis, const MultiIndex& k,
                           const DomainBox& domain) {
    const int d = basis.spec().dim;
    if (const auto* p = std::get_if<PointDirac>(&c)) return p->weight * basis.psi(k, p->location);
    if (const auto* l = std::get_if<LineDirac>(&c)) {
        const double c0 = basis.spec().coordinate(k[l->axis]);
        const double w0 = basis.width(l->axis);
        double v = l->weight * std::max(0.0, 1.0 - std::abs(l->level - c0) / w0);
        for (int i = 0; i < d && v != 0.0; ++i) {
            if (i == l->axis) continue;
            const double ci = basis.spec().coordinate(k[i]), wi = basis.width(i);
            v *= wi * unit_hat_integral((l->lower[i] - ci) / wi, (l->upper[i] - ci) / wi);
        }
        return v;
    }
    const auto& den = std::get<Density>(c);
    if (!den.pieces.empty()) {
        double v = 0.0;
        for (const auto& p : den.pieces) {
            Point lo(d), hi(d);
            for (int i = 0; i < d; ++i) {
                lo[i] = std::max(p.lower[i], domain.lower[i]);
                hi[i] = std::min(p.upper[i], domain.upper[i]);
            }
            v += p.value * basis.integral_over(k, lo, hi);
        }
        return den.weight * v;
    }
    return den.weight * basis.integrate(k, den.function, domain);
}

inline void validate(const MeasureSpec& mu, const DomainBox& domain) {
    for (const auto& c : mu.components) {
        if (const auto* p = std::get_if<PointDirac>(&c)) {
            if (!detail::in_closure(domain, p->location))
                throw DomainError("point Dirac at " + to_string(p->location) + " lies outside the domain closure");
            if (!std::isfinite(p->weight)) throw DomainError("non-finite Dirac weight");
        } else if (const auto* l = std::get_if<LineDirac>(&c)) {
            if (l->level < domain.lower[l->axis] || l->level > domain.upper[l->axis])
                throw DomainError("line Dirac level outside the domain closure");
            for (int i = 0; i < domain.dim(); ++i)
                if (i != l->axis && (l->lower[i] < domain.lower[i] || l->upper[i] > domain.upper[i]))
                    throw DomainError("line Dirac support outside the domain closure");
        }
    }
}

/// mu_k = <psi_k | mu> / (h^d vol(R)) on the interior knots of `spec`.
inline GridFunction discretize_measure(const MeasureSpec& mu, const GridSpec& spec, const DomainBox& domain) {
    validate(mu, domain);
    const HatBasis basis(spec);
    GridFunction out(spec);
    for (const auto& k : knots(spec, domain, KnotSelection::interior)) {
        double v = 0.0;
        for (const auto& c : mu.components) v += hat_integral(c, basis, k, domain);
        if (v != 0.0) out.set(k, v / basis.mass());
    }
    return out;
}

/// mu_k = <psi_k | f_0> / ||psi_k||_1 - sum_i <d_i psi_k | f_i> / ||psi_k||_1.
inline GridFunction discretize_functional(const FunctionalSpec& F, const GridSpec& spec, const DomainBox& domain) {
    const HatBasis basis(spec);
    GridFunction out(spec);
    for (const auto& k : knots(spec, domain, KnotSelection::interior)) {
        double v = 0.0;
        if (F.f0) v += basis.integrate(k, F.f0, domain);
        for (std::size_t i = 0; i < F.f.size(); ++i)
            if (F.f[i]) v -= basis.integrate(k, F.f[i], domain, static_cast<int>(i));
        if (v != 0.0) out.set(k, v / basis.mass());
    }
    return out;
}

/// c_k = -sum_{l not interior} A_kl g(x_l) for interior k.
inline GridFunction dirichlet_lift(const SparseMatrix& a_full, const BoundaryData& g, const KnotSet& interior,
                                   const GridSpec& spec) {
    GridFunction out(spec);
    if (!g.g) return out;
    for (std::size_t p = 0; p < interior.size(); ++p) {
        const auto r = a_full.knots().find(interior[p]);
        if (r < 0) continue;
        double c = 0.0;
        for (const auto& e : a_full.row(static_cast<std::size_t>(r))) {
            const MultiIndex& l = a_full.knots()[e.col];
            if (interior.contains(l)) continue;
            c -= e.value * g.g(spec.coordinates(l));
        }
        if (c != 0.0) out.set(interior[p], c);
    }
    return out;
}

}  // namespace monotone_elliptic
