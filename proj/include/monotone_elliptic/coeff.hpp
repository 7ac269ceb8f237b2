#pragma once

// Piecewise-continuous diffusion tensors over a region partition, the
// auxiliary tensor, and the admissibility checks that gate compartmental
// assembly.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "grid.hpp"

namespace monotone_elliptic {

using Tensor = Eigen::MatrixXd;
using TensorFunction = std::function<Tensor(const Point&)>;
using ScalarFunction = std::function<double(const Point&)>;
using VectorFunction = std::function<Point(const Point&)>;

class RegionResolutionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigurationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ClassificationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Sign { zero, nonpositive, nonnegative };

inline const char* to_string(Sign s) {
    switch (s) {
        case Sign::zero: return "zero";
        case Sign::nonpositive: return "nonpositive";
        case Sign::nonnegative: return "nonnegative";
    }
    return "?";
}

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Axis-aligned box, possibly unbounded. Half-open [lower, upper) unless
/// `closed`, matching unions of semi-closed grid cells.
struct Box {
    Point lower;
    Point upper;
    bool closed = false;

    bool contains(const Point& x) const {
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] < lower[i]) return false;
            if (closed ? x[i] > upper[i] : x[i] >= upper[i]) return false;
        }
        return true;
    }

    bool contains_closure(const Point& x) const {
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i] < lower[i] || x[i] > upper[i]) return false;
        return true;
    }

    Point nearest(const Point& x) const {
        Point y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::clamp(x[i], lower[i], upper[i]);
        return y;
    }

    /// Clip to a finite window; nullopt when the intersection is empty.
    std::optional<Box> clipped(const DomainBox& w) const {
        Box b{lower, upper, true};
        for (std::size_t i = 0; i < lower.size(); ++i) {
            b.lower[i] = std::max(lower[i], w.lower[i]);
            b.upper[i] = std::min(upper[i], w.upper[i]);
            if (b.lower[i] > b.upper[i]) return std::nullopt;
        }
        return b;
    }
};

/// One member D_l of the partition. A region without boxes is the
/// background and matches every point not claimed by an earlier region.
struct Region {
    std::string id;
    std::vector<Box> boxes;
    std::optional<Tensor> constant;
    TensorFunction function;
    /// Per-axis scheme strides p(l) / r(l); empty when unset.
    std::vector<Index> stride;
    /// Optional per-plane strides (r_k, r_l) keyed by (k, l), k < l.
    std::map<std::pair<int, int>, std::pair<Index, Index>> pair_strides;

    bool is_background() const { return boxes.empty(); }
    bool is_constant() const { return constant.has_value(); }

    bool contains(const Point& x) const {
        if (boxes.empty()) return true;
        return std::any_of(boxes.begin(), boxes.end(), [&](const Box& b) { return b.contains(x); });
    }

    bool contains_closure(const Point& x) const {
        if (boxes.empty()) return true;
        return std::any_of(boxes.begin(), boxes.end(),
                           [&](const Box& b) { return b.contains_closure(x); });
    }

    Tensor raw(const Point& x) const { return constant ? *constant : function(x); }

    /// Constant extension: a point outside the region reads the tensor at the
    /// nearest point of the region's closure.
    Tensor extended(const Point& x) const {
        if (constant) return *constant;
        if (contains_closure(x)) return function(x);
        Point best;
        double best_d = kInf;
        for (const auto& b : boxes) {
            Point y = b.nearest(x);
            double d = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) d += (y[i] - x[i]) * (y[i] - x[i]);
            if (d < best_d) {
                best_d = d;
                best = std::move(y);
            }
        }
        return function(best);
    }
};

/// Reserved lower-order terms b', b'', c. Assembly rejects them.
struct LowerOrderTerms {
    VectorFunction drift;       // b'
    VectorFunction divergence;  // b''
    ScalarFunction reaction;    // c

    bool any() const { return drift || divergence || reaction; }
};

struct SamplingOptions {
    /// Finite window used to clip unbounded regions.
    std::optional<DomainBox> window;
    /// Sampling lattice level for non-constant regions (step 2^-level).
    int level = 4;
    /// Extra user probe points, used for every region that contains them.
    std::vector<Point> probes;
};

class CoefficientField {
public:
    CoefficientField() = default;
    CoefficientField(int dim, std::vector<Region> regions) : dim_(dim), regions_(std::move(regions)) {}

    int dim() const { return dim_; }
    const std::vector<Region>& regions() const { return regions_; }
    std::vector<Region>& regions() { return regions_; }
    const Region& region(int l) const { return regions_.at(static_cast<std::size_t>(l)); }

    std::pair<double, double> bounds() const { return {m_lower_, m_upper_}; }
    void set_bounds(double lo, double hi) {
        m_lower_ = lo;
        m_upper_ = hi;
    }

    LowerOrderTerms& lower_order() { return lower_order_; }
    const LowerOrderTerms& lower_order() const { return lower_order_; }

    /// First region containing x, or -1.
    int locate(const Point& x) const {
        for (std::size_t l = 0; l < regions_.size(); ++l)
            if (regions_[l].contains(x)) return static_cast<int>(l);
        return -1;
    }

    Tensor evaluate(const Point& x, std::optional<int> hint = std::nullopt) const {
        if (hint) {
            const Region& r = region(*hint);
            return r.contains_closure(x) ? r.raw(x) : r.extended(x);
        }
        const int l = locate(x);
        if (l < 0) throw RegionResolutionError("point " + to_string(x) + " lies in no region");
        return regions_[static_cast<std::size_t>(l)].raw(x);
    }

    double entry(int i, int j, const Point& x, std::optional<int> hint = std::nullopt) const {
        if (hint) {
            const Region& r = region(*hint);
            if (r.constant) return (*r.constant)(i, j);
        }
        return evaluate(x, hint)(i, j);
    }

    /// Points at which inf/sup over a region are estimated. Constant regions
    /// need a single representative point.
    std::vector<Point> sample_points(int l, const SamplingOptions& opt) const {
        const Region& r = region(l);
        std::vector<Point> pts;
        std::vector<Box> boxes = r.boxes;
        if (boxes.empty()) boxes.push_back(Box{Point(dim_, -kInf), Point(dim_, kInf), true});
        for (const auto& b0 : boxes) {
            std::optional<Box> b = opt.window ? b0.clipped(*opt.window) : std::optional<Box>(b0);
            if (!b) continue;
            bool finite = true;
            for (int i = 0; i < dim_; ++i)
                finite = finite && std::isfinite(b->lower[i]) && std::isfinite(b->upper[i]);
            if (!finite) {
                if (r.constant) pts.push_back(Point(dim_, 0.0));
                continue;
            }
            Point c(dim_);
            for (int i = 0; i < dim_; ++i) c[i] = 0.5 * (b->lower[i] + b->upper[i]);
            pts.push_back(c);
            if (r.constant) continue;
            // corners
            for (int m = 0; m < (1 << dim_); ++m) {
                Point p(dim_);
                for (int i = 0; i < dim_; ++i) p[i] = (m >> i & 1) ? b->upper[i] : b->lower[i];
                pts.push_back(p);
            }
            // lattice plus cell midpoints
            const double s = 0.5 * grid_step(opt.level);
            std::vector<Index> n(dim_);
            std::size_t total = 1;
            for (int i = 0; i < dim_; ++i) {
                n[i] = static_cast<Index>(std::floor((b->upper[i] - b->lower[i]) / s)) + 1;
                total *= static_cast<std::size_t>(n[i]);
            }
            for (std::size_t q = 0; q < total; ++q) {
                std::size_t rem = q;
                Point p(dim_);
                for (int i = 0; i < dim_; ++i) {
                    p[i] = b->lower[i] + s * static_cast<double>(rem % static_cast<std::size_t>(n[i]));
                    rem /= static_cast<std::size_t>(n[i]);
                }
                pts.push_back(p);
            }
        }
        for (const auto& p : opt.probes)
            if (r.contains_closure(p)) pts.push_back(p);
        if (pts.empty() && r.constant) pts.push_back(Point(dim_, 0.0));
        return pts;
    }

    /// Sign of a_ij over a region (sampled; exact for constant regions).
    Sign region_sign(int l, int i, int j, const SamplingOptions& opt = {}) const {
        bool pos = false, neg = false;
        for (const auto& p : sample_points(l, opt)) {
            const double v = region(l).extended(p)(i, j);
            pos = pos || v > 0.0;
            neg = neg || v < 0.0;
        }
        if (pos && neg)
            throw ClassificationError("a_" + std::to_string(i + 1) + std::to_string(j + 1) +
                                      " changes sign inside region '" + region(l).id + "'");
        return pos ? Sign::nonnegative : (neg ? Sign::nonpositive : Sign::zero);
    }

    /// Strides of region l in the (k, m) plane, k < m.
    std::pair<Index, Index> plane_strides(int l, int k, int m) const {
        const Region& r = region(l);
        if (auto it = r.pair_strides.find({k, m}); it != r.pair_strides.end()) return it->second;
        if (r.stride.empty())
            throw ConfigurationError("region '" + r.id + "' has no scheme strides");
        return {r.stride.at(static_cast<std::size_t>(k)), r.stride.at(static_cast<std::size_t>(m))};
    }

private:
    int dim_ = 2;
    std::vector<Region> regions_;
    double m_lower_ = 0.0;
    double m_upper_ = 0.0;
    LowerOrderTerms lower_order_;
};

/// â: â_ii = a_ii, â_ij = -|a_ij| (i != j).
inline Tensor auxiliary_tensor(const Tensor& a) {
    Tensor b = a;
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            if (i != j) b(i, j) = -std::abs(a(i, j));
    return b;
}

inline Tensor auxiliary_tensor(const CoefficientField& field, const Point& x,
                               std::optional<int> hint = std::nullopt) {
    return auxiliary_tensor(field.evaluate(x, hint));
}

inline double min_eigenvalue(const Tensor& a) {
    Eigen::SelfAdjointEigenSolver<Tensor> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

struct Violation {
    std::string region;
    int axis = -1;  // -1: not axis specific (positive-definiteness)
    Point witness;
    double value = 0.0;
    std::string what;
};

struct AdmissibilityReport {
    double omega = 0.0;
    std::vector<bool> aux_posdef;
    std::vector<Violation> violations;

    bool admissible() const {
        return omega > 0.0 && std::all_of(aux_posdef.begin(), aux_posdef.end(), [](bool b) { return b; });
    }
};

/// Strict positive definiteness of â per region, with witnesses on failure.
inline std::vector<bool> check_aux_posdef(const CoefficientField& field, const SamplingOptions& opt = {},
                                          std::vector<Violation>* violations = nullptr) {
    std::vector<bool> ok(field.regions().size(), true);
    for (std::size_t l = 0; l < field.regions().size(); ++l) {
        for (const auto& p : field.sample_points(static_cast<int>(l), opt)) {
            const double lam = min_eigenvalue(auxiliary_tensor(field.region(static_cast<int>(l)).extended(p)));
            if (!(lam > 0.0)) {
                ok[l] = false;
                if (violations)
                    violations->push_back({field.region(static_cast<int>(l)).id, -1, p, lam,
                                           "auxiliary tensor not positive definite"});
                break;
            }
        }
    }
    return ok;
}

/// ω(a) = min_l min_i [ (1/p_i) inf a_ii - sum_{m != i} (1/p_m) sup |a_im| ].
inline double omega(const CoefficientField& field, const SamplingOptions& opt = {},
                    std::vector<Violation>* violations = nullptr) {
    const int d = field.dim();
    double w = kInf;
    for (std::size_t l = 0; l < field.regions().size(); ++l) {
        const Region& r = field.region(static_cast<int>(l));
        if (static_cast<int>(r.stride.size()) != d)
            throw ConfigurationError("region '" + r.id + "' has no per-axis scheme strides");
        const auto pts = field.sample_points(static_cast<int>(l), opt);
        if (pts.empty()) continue;
        std::vector<double> inf_diag(d, kInf);
        Tensor sup_off = Tensor::Zero(d, d);
        std::vector<Point> arg_inf(d);
        for (const auto& p : pts) {
            const Tensor a = r.extended(p);
            for (int i = 0; i < d; ++i) {
                if (a(i, i) < inf_diag[i]) {
                    inf_diag[i] = a(i, i);
                    arg_inf[i] = p;
                }
                for (int m = 0; m < d; ++m)
                    if (m != i) sup_off(i, m) = std::max(sup_off(i, m), std::abs(a(i, m)));
            }
        }
        for (int i = 0; i < d; ++i) {
            double margin = inf_diag[i] / static_cast<double>(r.stride[i]);
            for (int m = 0; m < d; ++m)
                if (m != i) margin -= sup_off(i, m) / static_cast<double>(r.stride[m]);
            if (!(margin > 0.0) && violations)
                violations->push_back({r.id, i, arg_inf[i], margin, "omega margin not positive"});
            w = std::min(w, margin);
        }
    }
    return w;
}

inline AdmissibilityReport admissibility(const CoefficientField& field, const SamplingOptions& opt = {}) {
    AdmissibilityReport rep;
    rep.omega = omega(field, opt, &rep.violations);
    rep.aux_posdef = check_aux_posdef(field, opt, &rep.violations);
    return rep;
}

/// Strict ellipticity bounds spot-check at the region sample points and the
/// supplied directions: M_lower |z|^2 <= z^T a z <= M_upper |z|^2.
inline bool check_ellipticity(const CoefficientField& field, const std::vector<Point>& directions,
                              const SamplingOptions& opt = {}) {
    const auto [lo, hi] = field.bounds();
    for (std::size_t l = 0; l < field.regions().size(); ++l)
        for (const auto& p : field.sample_points(static_cast<int>(l), opt)) {
            const Tensor a = field.region(static_cast<int>(l)).extended(p);
            if ((a - a.transpose()).cwiseAbs().maxCoeff() > 0.0) return false;
            for (const auto& z : directions) {
                Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
                const double q = zv.dot(a * zv), n2 = zv.squaredNorm();
                if (q < lo * n2 - 1e-12 * n2 || q > hi * n2 + 1e-12 * n2) return false;
            }
        }
    return true;
}

/// Knot classes G_n(P,-) and G_n(P,+) for the sign of a_ij on cells C_n(p, v).
struct SignPartition {
    std::set<MultiIndex> minus;
    std::set<MultiIndex> plus;
};

inline SignPartition classify_sign_regions(const CoefficientField& field, const GridSpec& spec,
                                           const DomainBox& window, int axis_i = 0, int axis_j = 1) {
    const int d = spec.dim;
    const double h = spec.step();
    auto [lo, hi] = window.index_bounds(spec.divisions);
    // cells are indexed by their lower-left vertex v in G_n(P), fully inside the window
    MultiIndex cell_hi = hi;
    for (int i = 0; i < d; ++i) cell_hi[i] -= spec.stride[i];
    IndexBox cells(lo, cell_hi);
    std::map<MultiIndex, Sign> sign_of;
    for (std::size_t q = 0; q < cells.size(); ++q) {
        MultiIndex v = cells.at(q);
        if (!spec.on_grid(v)) continue;
        bool pos = false, neg = false;
        // center and the 2^d quarter points are strictly interior to the cell
        for (int m = -1; m < (1 << d); ++m) {
            Point x(d);
            for (int i = 0; i < d; ++i) {
                const double frac = m < 0 ? 0.5 : ((m >> i & 1) ? 0.75 : 0.25);
                x[i] = (static_cast<double>(v[i]) + frac * static_cast<double>(spec.stride[i])) * h;
            }
            const double a = field.entry(axis_i, axis_j, x);
            pos = pos || a > 0.0;
            neg = neg || a < 0.0;
        }
        if (pos && neg)
            throw ClassificationError("a_" + std::to_string(axis_i + 1) + std::to_string(axis_j + 1) +
                                      " takes both signs on cell " + to_string(v));
        sign_of[v] = pos ? Sign::nonnegative : (neg ? Sign::nonpositive : Sign::zero);
    }
    SignPartition out;
    for (const auto& [v, s] : sign_of) {
        if (s == Sign::nonnegative) continue;
        for (int m = 0; m < (1 << d); ++m) {
            MultiIndex k = v;
            for (int i = 0; i < d; ++i)
                if (m >> i & 1) k[i] += spec.stride[i];
            out.minus.insert(k);
        }
    }
    // x is in the "+" class when the segment [x, x + p_i e_i] bounds a "+" cell
    IndexBox all(lo, hi);
    for (std::size_t q = 0; q < all.size(); ++q) {
        MultiIndex x = all.at(q);
        if (!spec.on_grid(x) || x[axis_i] + spec.stride[axis_i] > hi[axis_i]) continue;
        const int others = d - 1;
        for (int m = 0; m < (1 << others); ++m) {
            MultiIndex v = x;
            int bit = 0;
            for (int i = 0; i < d; ++i) {
                if (i == axis_i) continue;
                if (m >> bit++ & 1) v[i] -= spec.stride[i];
            }
            auto it = sign_of.find(v);
            if (it != sign_of.end() && it->second == Sign::nonnegative) {
                out.plus.insert(x);
                break;
            }
        }
    }
    return out;
}

}  // namespace monotone_elliptic
