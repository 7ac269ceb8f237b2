#pragma once

// Hat-function embedding Phi_n(R), exact mass/stiffness products, Fourier
// coefficients and relative error metrics.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <vector>

#include "grid.hpp"

namespace monotone_elliptic {

/// Three-point Gauss-Legendre rule on [0, 1].
inline constexpr std::array<double, 3> kGaussNodes{0.11270166537925831, 0.5, 0.88729833462074169};
inline constexpr std::array<double, 3> kGaussWeights{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

/// Integral of the unit hat max(0, 1 - |s|) over [a, b].
inline double unit_hat_integral(double a, double b) {
    auto F = [](double s) {
        s = std::clamp(s, -1.0, 1.0);
        return s <= 0.0 ? 0.5 * (1.0 + s) * (1.0 + s) : 1.0 - 0.5 * (1.0 - s) * (1.0 - s);
    };
    if (b <= a) return 0.0;
    return F(b) - F(a);
}

class HatBasis {
public:
    HatBasis() = default;
    explicit HatBasis(GridSpec spec) : spec_(std::move(spec)) {}

    const GridSpec& spec() const { return spec_; }

    double width(int i) const { return static_cast<double>(spec_.stride[i]) * spec_.step(); }

    /// ||psi_k||_1 = h^d vol(R).
    double mass() const { return std::pow(spec_.step(), spec_.dim) * static_cast<double>(spec_.volume()); }

    double psi(const MultiIndex& k, const Point& x) const {
        double v = 1.0;
        for (int i = 0; i < spec_.dim; ++i) {
            v *= std::max(0.0, 1.0 - std::abs(x[i] - spec_.coordinate(k[i])) / width(i));
            if (v == 0.0) return 0.0;
        }
        return v;
    }

    /// Knots whose hat support contains x (closed support).
    std::vector<MultiIndex> supporting(const Point& x) const {
        const int d = spec_.dim;
        std::vector<std::vector<Index>> cand(d);
        for (int i = 0; i < d; ++i) {
            const double s = (x[i] / spec_.step() - static_cast<double>(spec_.offset[i])) /
                             static_cast<double>(spec_.stride[i]);
            const auto f = static_cast<Index>(std::floor(s));
            for (Index m = f - 1; m <= f + 1; ++m) {
                const Index k = spec_.offset[i] + m * spec_.stride[i];
                if (std::abs(x[i] - spec_.coordinate(k)) <= width(i)) cand[i].push_back(k);
            }
        }
        std::vector<MultiIndex> out{MultiIndex{}};
        for (int i = 0; i < d; ++i) {
            std::vector<MultiIndex> next;
            for (const auto& p : out)
                for (Index k : cand[i]) {
                    MultiIndex q = p;
                    q.push_back(k);
                    next.push_back(std::move(q));
                }
            out = std::move(next);
        }
        return out;
    }

    /// Integral of psi_k over the box [lo, hi] (closed form).
    double integral_over(const MultiIndex& k, const Point& lo, const Point& hi) const {
        double v = 1.0;
        for (int i = 0; i < spec_.dim; ++i) {
            const double c = spec_.coordinate(k[i]), w = width(i);
            v *= w * unit_hat_integral((lo[i] - c) / w, (hi[i] - c) / w);
            if (v == 0.0) return 0.0;
        }
        return v;
    }

    /// Integral of f psi_k (or f d_axis psi_k) over supp(psi_k) intersected
    /// with `clip`, by per-cell 3-point Gauss in every axis.
    double integrate(const MultiIndex& k, const std::function<double(const Point&)>& f,
                     const std::optional<DomainBox>& clip = std::nullopt, int derivative_axis = -1) const {
        const int d = spec_.dim;
        double total = 0.0;
        for (int cell = 0; cell < (1 << d); ++cell) {
            Point lo(d), hi(d);
            bool empty = false;
            for (int i = 0; i < d; ++i) {
                const double c = spec_.coordinate(k[i]), w = width(i);
                lo[i] = (cell >> i & 1) ? c : c - w;
                hi[i] = (cell >> i & 1) ? c + w : c;
                if (clip) {
                    lo[i] = std::max(lo[i], clip->lower[i]);
                    hi[i] = std::min(hi[i], clip->upper[i]);
                }
                empty = empty || !(hi[i] > lo[i]);
            }
            if (empty) continue;
            std::size_t npts = 1;
            for (int i = 0; i < d; ++i) npts *= 3;
            Point x(d);
            for (std::size_t q = 0; q < npts; ++q) {
                std::size_t rem = q;
                double wgt = 1.0;
                for (int i = 0; i < d; ++i) {
                    const std::size_t g = rem % 3;
                    rem /= 3;
                    x[i] = lo[i] + kGaussNodes[g] * (hi[i] - lo[i]);
                    wgt *= kGaussWeights[g] * (hi[i] - lo[i]);
                }
                double basis = 1.0;
                for (int i = 0; i < d; ++i) {
                    const double c = spec_.coordinate(k[i]), w = width(i);
                    if (i == derivative_axis)
                        basis *= x[i] < c ? 1.0 / w : -1.0 / w;
                    else
                        basis *= std::max(0.0, 1.0 - std::abs(x[i] - c) / w);
                }
                total += wgt * basis * f(x);
            }
        }
        return total;
    }

private:
    GridSpec spec_;
};

/// u(n) = sum_k u_k psi_k.
class EmbeddedFunction {
public:
    explicit EmbeddedFunction(GridFunction u) : u_(std::move(u)), basis_(u_.spec()) {}

    const GridFunction& coefficients() const { return u_; }
    const HatBasis& basis() const { return basis_; }

    /// Multilinear form on the containing cell. On cell faces the smallest
    /// containing cell is used.
    double operator()(const Point& x) const {
        const GridSpec& s = u_.spec();
        const int d = s.dim;
        MultiIndex base(d);
        std::vector<double> t(d);
        for (int i = 0; i < d; ++i) {
            const double q = (x[i] / s.step() - static_cast<double>(s.offset[i])) / static_cast<double>(s.stride[i]);
            Index b = static_cast<Index>(std::ceil(q)) - 1;
            t[i] = q - static_cast<double>(b);
            base[i] = s.offset[i] + b * s.stride[i];
        }
        double v = 0.0;
        for (int m = 0; m < (1 << d); ++m) {
            MultiIndex k = base;
            double w = 1.0;
            for (int i = 0; i < d; ++i) {
                if (m >> i & 1) {
                    k[i] += s.stride[i];
                    w *= t[i];
                } else {
                    w *= 1.0 - t[i];
                }
            }
            if (w != 0.0) v += w * u_[k];
        }
        return v;
    }

    /// Phi^-1: knot evaluation.
    GridFunction restrict_to(const std::vector<MultiIndex>& at) const {
        GridFunction out(u_.spec());
        for (const auto& k : at) out.set(k, (*this)(u_.spec().coordinates(k)));
        return out;
    }

private:
    GridFunction u_;
    HatBasis basis_;
};

inline EmbeddedFunction embed(const GridFunction& u) { return EmbeddedFunction(u); }

/// u_k = <psi_k | f> / ||psi_k||_1 at the given knots.
inline GridFunction fourier_coefficients(const std::function<double(const Point&)>& f, const HatBasis& basis,
                                         const std::vector<MultiIndex>& at) {
    GridFunction out(basis.spec());
    for (const auto& k : at) out.set(k, basis.integrate(k, f) / basis.mass());
    return out;
}

namespace detail {

/// Tensor-product bilinear form sum_{k,l} v_k u_l prod_i s_i(l_i - k_i), with
/// 1D profile s_i given at offsets 0 and +-r_i.
template <class Profile>
double tensor_form(const GridFunction& u, const GridFunction& v, Profile&& profile) {
    if (!(u.spec() == v.spec())) throw GridError("basis mismatch in inner product");
    const GridSpec& s = u.spec();
    const int d = s.dim;
    std::size_t n = 1;
    for (int i = 0; i < d; ++i) n *= 3;
    double total = 0.0;
    for (const auto& [k, uk] : u.values()) {
        for (std::size_t q = 0; q < n; ++q) {
            std::size_t rem = q;
            MultiIndex l = k;
            double w = 1.0;
            for (int i = 0; i < d; ++i) {
                const int off = static_cast<int>(rem % 3) - 1;
                rem /= 3;
                l[i] += off * s.stride[i];
                w *= profile(i, off);
            }
            if (w != 0.0) total += w * uk * v[l];
        }
    }
    return total;
}

}  // namespace detail

/// (u(n) | v(n)) = h^d vol(R) sum s_kl v_k u_l, s = tensor product of (1/6, 2/3, 1/6).
inline double l2_inner(const GridFunction& u, const GridFunction& v) {
    const double s = detail::tensor_form(u, v, [](int, int off) { return off == 0 ? 2.0 / 3.0 : 1.0 / 6.0; });
    return HatBasis(u.spec()).mass() * s;
}

/// Integral of d_axis u(n) d_axis v(n) (exact stiffness product).
inline double stiffness_inner(const GridFunction& u, const GridFunction& v, int axis) {
    const GridSpec& g = u.spec();
    const double s = detail::tensor_form(u, v, [&](int i, int off) {
        if (i == axis) {
            const double w = static_cast<double>(g.stride[i]) * g.step();
            return (off == 0 ? 2.0 : -1.0) / (w * w);
        }
        return off == 0 ? 2.0 / 3.0 : 1.0 / 6.0;
    });
    return HatBasis(g).mass() * s;
}

/// Integral of |d_axis u(n)|^2 from the expansion d_i u(n) = sum_k (U_i(r_i)u)_k chi_{k i +}:
/// the chi are indicator(axis) x hat(other axes), so the integral is the
/// tensor form of the forward differences with the 1D profile (1 on axis, mass elsewhere).
inline double gradient_energy_chi(const GridFunction& u, int axis) {
    const GridFunction du = forward_diff(u, axis, u.spec().stride[axis]);
    const double s = detail::tensor_form(du, du, [&](int i, int off) {
        if (i == axis) return off == 0 ? 1.0 : 0.0;
        return off == 0 ? 2.0 / 3.0 : 1.0 / 6.0;
    });
    return HatBasis(u.spec()).mass() * s;
}

struct ErrorReport {
    double eps1 = 0.0;
    double eps_inf = 0.0;
    double max_abs_diff = 0.0;
    MultiIndex argmax;
    Point argmax_x;
    double exact_at_argmax = 0.0;
    /// |u* - u| / |u*| at the argmax knot.
    double pointwise_rel_at_argmax = 0.0;
    std::size_t knots = 0;
    std::vector<MultiIndex> excluded;
};

/// eps_{p,rel} = |||u* - u|||_p / |||u*|||_p over the stored knots of u_num
/// minus `exclude`.
inline ErrorReport relative_errors(const GridFunction& u_num, const std::function<double(const Point&)>& exact,
                                   const std::set<MultiIndex>& exclude = {}) {
    ErrorReport r;
    double num1 = 0.0, den1 = 0.0, den_inf = 0.0;
    for (const auto& [k, v] : u_num.values()) {
        if (exclude.count(k)) continue;
        const Point x = u_num.spec().coordinates(k);
        const double e = exact(x);
        const double diff = std::abs(e - v);
        num1 += diff;
        den1 += std::abs(e);
        den_inf = std::max(den_inf, std::abs(e));
        if (diff > r.max_abs_diff || r.knots == 0) {
            r.max_abs_diff = diff;
            r.argmax = k;
            r.argmax_x = x;
            r.exact_at_argmax = e;
        }
        ++r.knots;
    }
    if (r.knots == 0) throw GridError("relative_errors: no knots left after exclusion");
    r.eps1 = den1 > 0.0 ? num1 / den1 : num1;
    r.eps_inf = den_inf > 0.0 ? r.max_abs_diff / den_inf : r.max_abs_diff;
    r.pointwise_rel_at_argmax = r.exact_at_argmax != 0.0 ? r.max_abs_diff / std::abs(r.exact_at_argmax) : 0.0;
    r.excluded.assign(exclude.begin(), exclude.end());
    return r;
}

}  // namespace monotone_elliptic
