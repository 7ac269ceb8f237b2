#pragma once

// Dyadic grids G_n, homogeneous subgrids G_n(r0, r), grid functions and the
// difference / norm algebra that acts on them.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace monotone_elliptic {

using Index = std::int64_t;

/// Multi-index into the lattice Z^d. Ordering is lexicographic, which is the
/// canonical unknown ordering everywhere in the library.
using MultiIndex = std::vector<Index>;

/// Point of R^d.
using Point = std::vector<double>;

class GridError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class AlignmentError : public GridError {
public:
    using GridError::GridError;
};

class ParameterError : public GridError {
public:
    using GridError::GridError;
};

inline std::string to_string(const MultiIndex& k) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < k.size(); ++i) os << (i ? "," : "") << k[i];
    os << ')';
    return os.str();
}

inline std::string to_string(const Point& x) {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
    os << ')';
    return os.str();
}

/// Mathematical modulo (result in [0, m)).
inline Index floor_mod(Index a, Index m) {
    const Index r = a % m;
    return r < 0 ? r + m : r;
}

/// Grid-step h = 2^-n; exact in binary floating point.
inline double grid_step(int level) { return std::ldexp(1.0, -level); }

/// The grid G_n (stride all ones) or a homogeneous subgrid G_n(r0, r).
///
/// Multi-indices always address the full lattice, i.e. knot k sits at
/// x = h k. A knot belongs to the subgrid iff k_i = r0_i (mod r_i) on every
/// axis; the offset is only meaningful modulo the stride.
///
/// The step is h = 1/N. Dyadic grids have N = 2^level; other N (the h = 1/400
/// runs) carry level 0.
struct GridSpec {
    int level = 1;
    Index divisions = 2;  // N
    int dim = 2;
    MultiIndex offset;  // r0
    MultiIndex stride;  // r

    GridSpec() = default;

    GridSpec(int level_, int dim_)
        : level(level_), divisions(level_ >= 1 && level_ < 62 ? Index{1} << level_ : 0), dim(dim_),
          offset(dim_, 0), stride(dim_, 1) {
        validate();
    }

    GridSpec(int level_, MultiIndex offset_, MultiIndex stride_)
        : level(level_), divisions(level_ >= 1 && level_ < 62 ? Index{1} << level_ : 0),
          dim(static_cast<int>(stride_.size())), offset(std::move(offset_)), stride(std::move(stride_)) {
        validate();
    }

    /// h = 1/N for arbitrary N >= 2.
    static GridSpec with_divisions(Index n, int dim_) {
        GridSpec g;
        g.divisions = n;
        g.level = 0;
        for (int l = 1; l < 62; ++l)
            if ((Index{1} << l) == n) g.level = l;
        g.dim = dim_;
        g.offset.assign(dim_, 0);
        g.stride.assign(dim_, 1);
        g.validate();
        return g;
    }

    void validate() const {
        if (divisions < 2) throw ParameterError("grid level must be >= 1 (at least 2 divisions per unit)");
        if (dim < 1) throw ParameterError("grid dimension must be >= 1");
        if (static_cast<int>(offset.size()) != dim || static_cast<int>(stride.size()) != dim)
            throw ParameterError("grid offset/stride size does not match dimension");
        for (Index r : stride)
            if (r < 1) throw ParameterError("grid strides must be >= 1");
    }

    double step() const { return 1.0 / static_cast<double>(divisions); }

    /// vol(R) = prod r_i.
    Index volume() const {
        return std::accumulate(stride.begin(), stride.end(), Index{1}, std::multiplies<>());
    }

    bool on_grid(const MultiIndex& k) const {
        if (static_cast<int>(k.size()) != dim) return false;
        for (int i = 0; i < dim; ++i)
            if (floor_mod(k[i] - offset[i], stride[i]) != 0) return false;
        return true;
    }

    double coordinate(Index k) const { return static_cast<double>(k) / static_cast<double>(divisions); }

    /// Coordinate of the half-integer lattice point (2k + off) h / 2.
    double half_coordinate(Index twice) const {
        return static_cast<double>(twice) / static_cast<double>(2 * divisions);
    }

    Point coordinates(const MultiIndex& k) const {
        Point x(dim);
        for (int i = 0; i < dim; ++i) x[i] = coordinate(k[i]);
        return x;
    }

    bool operator==(const GridSpec& o) const {
        if (divisions != o.divisions || dim != o.dim || stride != o.stride) return false;
        for (int i = 0; i < dim; ++i)
            if (floor_mod(offset[i] - o.offset[i], stride[i]) != 0) return false;
        return true;
    }
};

/// Axis-aligned bounded domain D = prod (lower_i, upper_i).
struct DomainBox {
    Point lower;
    Point upper;

    DomainBox() = default;
    DomainBox(Point lo, Point hi) : lower(std::move(lo)), upper(std::move(hi)) { validate(); }

    static DomainBox unit(int dim) { return DomainBox(Point(dim, 0.0), Point(dim, 1.0)); }

    int dim() const { return static_cast<int>(lower.size()); }

    void validate() const {
        if (lower.size() != upper.size() || lower.empty())
            throw ParameterError("domain box bounds must have equal, nonzero dimension");
        for (std::size_t i = 0; i < lower.size(); ++i)
            if (!(lower[i] < upper[i])) throw ParameterError("domain box requires lower < upper");
    }

    /// Integer corners on the grid with N divisions per unit; throws
    /// AlignmentError when a corner is off-grid.
    std::pair<MultiIndex, MultiIndex> index_bounds(Index divisions) const {
        const auto inv_h = static_cast<double>(divisions);
        MultiIndex lo(dim()), hi(dim());
        for (int i = 0; i < dim(); ++i) {
            const double a = lower[i] * inv_h;
            const double b = upper[i] * inv_h;
            if (a != std::floor(a) || b != std::floor(b))
                throw AlignmentError("domain corner not aligned with grid step 1/" +
                                     std::to_string(divisions));
            lo[i] = static_cast<Index>(a);
            hi[i] = static_cast<Index>(b);
        }
        return {lo, hi};
    }
};

enum class KnotSelection { interior, closure, boundary };

/// Lexicographically ordered integer box [lo, hi] (inclusive) restricted to a
/// subgrid. Provides O(1) linear indexing for dense box-shaped knot sets.
class IndexBox {
public:
    IndexBox() = default;
    IndexBox(MultiIndex lo, MultiIndex hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
        extent_.resize(lo_.size());
        size_ = 1;
        for (std::size_t i = 0; i < lo_.size(); ++i) {
            extent_[i] = hi_[i] >= lo_[i] ? hi_[i] - lo_[i] + 1 : 0;
            size_ *= static_cast<std::size_t>(extent_[i]);
        }
    }

    int dim() const { return static_cast<int>(lo_.size()); }
    std::size_t size() const { return size_; }
    const MultiIndex& lower() const { return lo_; }
    const MultiIndex& upper() const { return hi_; }

    bool contains(const MultiIndex& k) const {
        for (std::size_t i = 0; i < lo_.size(); ++i)
            if (k[i] < lo_[i] || k[i] > hi_[i]) return false;
        return true;
    }

    /// Lexicographic linear position (last axis fastest).
    std::size_t linear(const MultiIndex& k) const {
        std::size_t p = 0;
        for (std::size_t i = 0; i < lo_.size(); ++i)
            p = p * static_cast<std::size_t>(extent_[i]) + static_cast<std::size_t>(k[i] - lo_[i]);
        return p;
    }

    MultiIndex at(std::size_t p) const {
        MultiIndex k(lo_.size());
        for (std::size_t i = lo_.size(); i-- > 0;) {
            const auto e = static_cast<std::size_t>(extent_[i]);
            k[i] = lo_[i] + static_cast<Index>(p % e);
            p /= e;
        }
        return k;
    }

    std::vector<MultiIndex> all() const {
        std::vector<MultiIndex> out;
        out.reserve(size_);
        for (std::size_t p = 0; p < size_; ++p) out.push_back(at(p));
        return out;
    }

private:
    MultiIndex lo_, hi_, extent_;
    std::size_t size_ = 0;
};

/// Knots of the subgrid inside D (interior), in its closure, or on the
/// discrete boundary cls \ int. Lexicographic order.
inline std::vector<MultiIndex> knots(const GridSpec& spec, const DomainBox& domain,
                                     KnotSelection which) {
    if (domain.dim() != spec.dim) throw ParameterError("domain/grid dimension mismatch");
    auto [lo, hi] = domain.index_bounds(spec.divisions);
    std::vector<MultiIndex> out;
    IndexBox box(lo, hi);
    for (std::size_t p = 0; p < box.size(); ++p) {
        MultiIndex k = box.at(p);
        if (!spec.on_grid(k)) continue;
        bool interior = true;
        for (int i = 0; i < spec.dim; ++i)
            if (k[i] == lo[i] || k[i] == hi[i]) interior = false;
        const bool keep = which == KnotSelection::closure ||
                          (which == KnotSelection::interior && interior) ||
                          (which == KnotSelection::boundary && !interior);
        if (keep) out.push_back(std::move(k));
    }
    return out;
}

/// Grid function with compact (stored) support. Reads outside the stored
/// support return 0, so every formula implicitly extends by zero.
class GridFunction {
public:
    GridFunction() = default;
    explicit GridFunction(GridSpec spec) : spec_(std::move(spec)) {}

    const GridSpec& spec() const { return spec_; }
    const std::map<MultiIndex, double>& values() const { return values_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    double operator[](const MultiIndex& k) const {
        auto it = values_.find(k);
        return it == values_.end() ? 0.0 : it->second;
    }

    void set(const MultiIndex& k, double v) {
        if (!spec_.on_grid(k)) throw GridError("index " + to_string(k) + " is not on the subgrid");
        if (!std::isfinite(v)) throw GridError("grid function values must be finite");
        values_[k] = v;
    }

    void add(const MultiIndex& k, double v) { set(k, (*this)[k] + v); }

    /// Bounding index box of the stored support; empty function gives an empty box.
    IndexBox support() const {
        if (values_.empty()) return {};
        MultiIndex lo = values_.begin()->first, hi = lo;
        for (const auto& [k, v] : values_)
            for (int i = 0; i < spec_.dim; ++i) {
                lo[i] = std::min(lo[i], k[i]);
                hi[i] = std::max(hi[i], k[i]);
            }
        return IndexBox(lo, hi);
    }

    template <class F>
    static GridFunction sample(const GridSpec& spec, const std::vector<MultiIndex>& at, F&& f) {
        GridFunction u(spec);
        for (const auto& k : at) u.set(k, f(spec.coordinates(k)));
        return u;
    }

private:
    GridSpec spec_;
    std::map<MultiIndex, double> values_;
};

/// (Z u)_k = u_{k + p e_axis}.
inline GridFunction shift(const GridFunction& u, int axis, Index steps) {
    GridSpec spec = u.spec();
    spec.offset[axis] = floor_mod(spec.offset[axis] - steps, spec.stride[axis]);
    GridFunction out(spec);
    for (const auto& [k, v] : u.values()) {
        MultiIndex j = k;
        j[axis] -= steps;
        out.set(j, v);
    }
    return out;
}

/// U_i(s) u with signed step s: ((u_{k + s e_i} - u_k) / (s h)). Negative s
/// yields the backward operator V_i(|s|) = U_i(-|s|).
inline GridFunction signed_diff(const GridFunction& u, int axis, Index s) {
    if (s == 0) throw ParameterError("difference stride must be nonzero");
    const double scale = 1.0 / (static_cast<double>(s) * u.spec().step());
    std::map<MultiIndex, double> acc;
    for (const auto& [k, v] : u.values()) {
        acc[k] -= v;
        MultiIndex j = k;
        j[axis] -= s;  // u_k appears as u_{j + s e_i} in row j
        acc[j] += v;
    }
    GridFunction out(u.spec());
    for (const auto& [k, v] : acc)
        if (v != 0.0) out.set(k, v * scale);
    return out;
}

/// Forward difference U_i(r), r >= 1.
inline GridFunction forward_diff(const GridFunction& u, int axis, Index stride) {
    if (stride < 1) throw ParameterError("forward_diff stride must be >= 1");
    return signed_diff(u, axis, stride);
}

/// Backward difference V_i(r) = U_i(-r), r >= 1.
inline GridFunction backward_diff(const GridFunction& u, int axis, Index stride) {
    if (stride < 1) throw ParameterError("backward_diff stride must be >= 1");
    return signed_diff(u, axis, -stride);
}

/// |||u|||_{Rp} = [vol(R) sum |u_k|^p]^{1/p}; sup norm for p = infinity.
/// Summation runs in lexicographic order, so the result is deterministic.
inline double lp_norm(const GridFunction& u, double p) {
    if (!(p >= 1.0)) throw ParameterError("lp_norm requires p >= 1");
    if (std::isinf(p)) {
        double m = 0.0;
        for (const auto& [k, v] : u.values()) m = std::max(m, std::abs(v));
        return m;
    }
    double s = 0.0;
    for (const auto& [k, v] : u.values()) s += std::pow(std::abs(v), p);
    return std::pow(static_cast<double>(u.spec().volume()) * s, 1.0 / p);
}

/// q_R(u) = vol(R) sum_i |||U_i(r_i) u|||_{R2}^2.
inline double sobolev_seminorm_sq(const GridFunction& u) {
    double q = 0.0;
    for (int i = 0; i < u.spec().dim; ++i) {
        const double n = lp_norm(forward_diff(u, i, u.spec().stride[i]), 2.0);
        q += n * n;
    }
    return static_cast<double>(u.spec().volume()) * q;
}

/// |||u|||_{R2,1}^2 = |||u|||_{R2}^2 + q_R(u).
inline double sobolev_norm_sq(const GridFunction& u) {
    const double n = lp_norm(u, 2.0);
    return n * n + sobolev_seminorm_sq(u);
}

}  // namespace monotone_elliptic
