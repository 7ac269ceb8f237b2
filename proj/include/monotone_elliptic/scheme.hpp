#pragma once

// Basic and extended compartmental schemes.
//
// Every term of both schemes is an edge energy c (u_q - u_p)^2 between two
// knots, so A_n is assembled as a weighted graph Laplacian: the edge adds c to
// both diagonals and -c to both couplings. Row sums, column sums and symmetry
// follow from this form; compartmental structure is equivalent to every
// summed edge weight being nonnegative.
//
// Per two-dimensional plane (k, l) and anchor knot x owned by region D_m with
// strides (s_k, s_l) and branch sigma (-1 when a_kl >= 0, +1 otherwise):
//   mixed:  |a_kl| / (s_k s_l h^2) on the long edge  x + s_k e_k -- x + sigma s_l e_l
//   basic:  -|a_kl| / (s_k s_l h^2) on x -- x + s_k e_k and on x -- x + sigma s_l e_l
//   extended: -(s_k / s_l) |a_kl| / h^2 on x -- x + e_k,
//             -(s_l / s_k) |a_kl| / h^2 on x -- x + sigma e_l
// a_kl is read at the center of the anchor's cell. The anchor is owned by
// the first region that contains the center of the cell its own strides and
// branch produce. Pure terms a_mm / (d - 1) live on forward edges of length
// s_m (basic) or 1 (extended), read as the mean over the two adjacent cell
// centers in the plane.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "coeff.hpp"
#include "grid.hpp"
#include "sparse.hpp"

namespace monotone_elliptic {

class AssemblyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotImplementedError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

enum class SchemeVariant { basic, extended };

inline const char* to_string(SchemeVariant v) { return v == SchemeVariant::basic ? "basic" : "extended"; }

/// How a_kl enters an anchor's mixed term: read at the center of the cell of
/// the owning region, or every region's cell weighted by its covered fraction.
enum class MixedRule { owner_center, cell_fraction, corner_cell };

struct AssemblyOptions {
    SchemeVariant variant = SchemeVariant::extended;
    MixedRule mixed_rule = MixedRule::cell_fraction;
    /// Refuse inadmissible parameters (omega <= 0 or a positive coupling).
    bool enforce_admissibility = true;
};

/// Unrestricted matrix over the knots of D expanded by a stencil margin.
struct SchemeMatrix {
    SparseMatrix matrix;
    GridSpec spec;
    DomainBox domain;
    SchemeVariant variant = SchemeVariant::extended;
    MultiIndex box_lower, box_upper;  // extended index box
    KnotSet interior;
    KnotSet closure;
    /// Anchors switched to corner-cell mixed terms to remove positive couplings.
    std::size_t corner_anchors = 0;

    /// Numerical neighbourhood: knots coupled to k by nonzero entries.
    std::vector<MultiIndex> neighbourhood(const MultiIndex& k) const {
        std::vector<MultiIndex> out;
        const auto r = matrix.knots().find(k);
        if (r < 0) return out;
        for (const auto& e : matrix.row(static_cast<std::size_t>(r))) out.push_back(matrix.knots()[e.col]);
        return out;
    }
};

namespace detail {

/// Knot-to-knot edge energies, keyed on lattice positions of an index box.
class EdgeAccumulator {
public:
    explicit EdgeAccumulator(IndexBox box) : box_(std::move(box)) {}

    const IndexBox& box() const { return box_; }

    void add(const MultiIndex& p, const MultiIndex& q, double c) {
        if (c == 0.0) return;
        if (!box_.contains(p) || !box_.contains(q)) throw AssemblyError("stencil leaves the assembly box");
        std::size_t a = box_.linear(p), b = box_.linear(q);
        if (a == b) return;
        if (a > b) std::swap(a, b);
        edges_.emplace_back(a, b, c);
    }

    SparseMatrix build() const {
        std::vector<bool> touched(box_.size(), false);
        for (const auto& [a, b, c] : edges_) touched[a] = touched[b] = true;
        std::vector<MultiIndex> ks;
        std::vector<std::size_t> remap(box_.size(), 0);
        for (std::size_t p = 0; p < box_.size(); ++p)
            if (touched[p]) {
                remap[p] = ks.size();
                ks.push_back(box_.at(p));
            }
        std::vector<std::tuple<std::size_t, std::size_t, double>> t;
        t.reserve(edges_.size() * 4);
        for (const auto& [a, b, c] : edges_) {
            const std::size_t i = remap[a], j = remap[b];
            t.emplace_back(i, i, c);
            t.emplace_back(j, j, c);
            t.emplace_back(i, j, -c);
            t.emplace_back(j, i, -c);
        }
        return SparseMatrix::from_triplets(KnotSet(std::move(ks)), std::move(t));
    }

private:
    IndexBox box_;
    std::vector<std::tuple<std::size_t, std::size_t, double>> edges_;
};

inline Point half_point(const GridSpec& spec, const MultiIndex& twice) {
    Point x(twice.size());
    for (std::size_t i = 0; i < twice.size(); ++i) x[i] = spec.half_coordinate(twice[i]);
    return x;
}

inline MultiIndex doubled(const MultiIndex& k) {
    MultiIndex t(k);
    for (auto& v : t) v *= 2;
    return t;
}

/// Region used for a point that may lie outside every region: the first
/// region containing it, else the nearest one (constant extension).
inline int locate_or_nearest(const CoefficientField& f, const Point& x) {
    const int l = f.locate(x);
    if (l >= 0) return l;
    int best = -1;
    double bd = kInf;
    for (std::size_t m = 0; m < f.regions().size(); ++m)
        for (const auto& b : f.regions()[m].boxes) {
            const Point y = b.nearest(x);
            double d = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) d += (y[i] - x[i]) * (y[i] - x[i]);
            if (d < bd) {
                bd = d;
                best = static_cast<int>(m);
            }
        }
    if (best < 0) throw RegionResolutionError("point " + to_string(x) + " lies in no region");
    return best;
}

inline double coefficient(const CoefficientField& f, int i, int j, const Point& x) {
    const int l = locate_or_nearest(f, x);
    const Region& r = f.region(l);
    if (r.constant) return (*r.constant)(i, j);
    return r.contains(x) ? r.raw(x)(i, j) : r.extended(x)(i, j);
}

struct PlaneAnchor {
    int region = -1;
    Index sk = 1, sl = 1;
    int sigma = 1;
    double mixed = 0.0;  // |a_kl| at the cell center
};

}  // namespace detail

/// Shared-axis stride consistency for d > 2: every plane through axis s must
/// assign the same stride to s.
inline void check_shared_axis_strides(const CoefficientField& field) {
    const int d = field.dim();
    for (std::size_t m = 0; m < field.regions().size(); ++m) {
        const Region& r = field.regions()[m];
        if (r.pair_strides.empty()) continue;
        for (int s = 0; s < d; ++s) {
            std::optional<std::pair<std::pair<int, int>, Index>> first;
            for (int a = 0; a < d; ++a)
                for (int b = a + 1; b < d; ++b) {
                    if (a != s && b != s) continue;
                    const auto st = field.plane_strides(static_cast<int>(m), a, b);
                    const Index v = a == s ? st.first : st.second;
                    if (!first) {
                        first = {{a, b}, v};
                    } else if (first->second != v) {
                        throw ConfigurationError(
                            "region '" + r.id + "': planes (" + std::to_string(first->first.first + 1) + "," +
                            std::to_string(first->first.second + 1) + ") and (" + std::to_string(a + 1) + "," +
                            std::to_string(b + 1) + ") assign different strides to axis " + std::to_string(s + 1));
                    }
                }
        }
    }
}

/// Largest stride used by any region on any axis.
inline Index max_stride(const CoefficientField& field) {
    Index m = 1;
    const int d = field.dim();
    for (std::size_t l = 0; l < field.regions().size(); ++l) {
        const Region& r = field.regions()[l];
        for (Index s : r.stride) m = std::max(m, s);
        for (const auto& [pr, st] : r.pair_strides) m = std::max({m, st.first, st.second});
        if (r.stride.empty() && r.pair_strides.empty() && d > 1)
            throw ConfigurationError("region '" + r.id + "' has no scheme strides");
    }
    return m;
}

/// Assembly on all knots of cls(D) expanded by twice the largest stride.
inline SchemeMatrix assemble(const CoefficientField& field, const GridSpec& spec, const DomainBox& domain,
                             const AssemblyOptions& opt = {}) {
    if (field.lower_order().any())
        throw NotImplementedError("lower-order terms b', b'', c are not implemented in assembly");
    const int d = spec.dim;
    if (field.dim() != d || domain.dim() != d) throw ParameterError("field/grid/domain dimension mismatch");
    if (d > 2) check_shared_axis_strides(field);
    const Index M = max_stride(field);
    const double h = spec.step();
    const double h2 = h * h;
    const bool extended = opt.variant == SchemeVariant::extended;

    auto [lo, hi] = domain.index_bounds(spec.divisions);
    MultiIndex blo = lo, bhi = hi;
    for (int i = 0; i < d; ++i) {
        blo[i] -= 2 * M;
        bhi[i] += 2 * M;
    }
    Point wlo(d), whi(d);
    for (int i = 0; i < d; ++i) {
        wlo[i] = spec.coordinate(blo[i]);
        whi[i] = spec.coordinate(bhi[i]);
    }
    SamplingOptions sampling;
    sampling.window = DomainBox(wlo, whi);

    if (opt.enforce_admissibility && d > 1) {
        std::vector<Violation> v;
        const double w = omega(field, sampling, &v);
        if (!(w > 0.0)) {
            std::string msg = "inadmissible scheme parameters: omega = " + format_real(w);
            for (const auto& x : v)
                msg += "; region '" + x.region + "' axis " + std::to_string(x.axis + 1) + " margin " +
                       format_real(x.value);
            throw AssemblyError(msg);
        }
    }

    IndexBox box(blo, bhi);
    // anchors flagged in `corner` take their mixed terms from the corner unit
    // cells; that choice cannot produce a positive coupling when omega > 0
    auto build = [&](const std::vector<char>& corner) {
        detail::EdgeAccumulator acc(box);
        const double pure_div = d > 1 ? static_cast<double>(d - 1) : 1.0;

        auto fits = [&](const MultiIndex& k) { return box.contains(k); };

        if (d == 1) {
            for (std::size_t q = 0; q < box.size(); ++q) {
                const MultiIndex x = box.at(q);
                const int l = detail::locate_or_nearest(field, spec.coordinates(x));
                const Index s = extended || field.region(l).stride.empty() ? 1 : field.region(l).stride[0];
                MultiIndex y = x;
                y[0] += s;
                if (!fits(y)) continue;
                const double a = detail::coefficient(field, 0, 0, detail::half_point(spec, {2 * x[0] + s}));
                acc.add(x, y, a / (static_cast<double>(s * s) * h2));
            }
        }

        for (int k = 0; k < d; ++k)
            for (int l = k + 1; l < d; ++l) {
                // sign of a_kl per region, fixed for the whole region
                std::vector<int> sigma(field.regions().size(), 1);
                for (std::size_t m = 0; m < field.regions().size(); ++m)
                    sigma[m] = field.region_sign(static_cast<int>(m), k, l, sampling) == Sign::nonnegative ? -1 : 1;

                auto resolve = [&](const MultiIndex& x) {
                    detail::PlaneAnchor a;
                    MultiIndex c = detail::doubled(x);
                    for (std::size_t m = 0; m < field.regions().size() && a.region < 0; ++m) {
                        const auto st = field.plane_strides(static_cast<int>(m), k, l);
                        c[k] = 2 * x[k] + st.first;
                        c[l] = 2 * x[l] + sigma[m] * st.second;
                        if (field.locate(detail::half_point(spec, c)) == static_cast<int>(m)) {
                            a.region = static_cast<int>(m);
                            a.sk = st.first;
                            a.sl = st.second;
                            a.sigma = sigma[m];
                        }
                    }
                    if (a.region < 0) {
                        a.region = detail::locate_or_nearest(field, spec.coordinates(x));
                        const auto st = field.plane_strides(a.region, k, l);
                        a.sk = st.first;
                        a.sl = st.second;
                        a.sigma = sigma[static_cast<std::size_t>(a.region)];
                        c[k] = 2 * x[k] + a.sk;
                        c[l] = 2 * x[l] + a.sigma * a.sl;
                    }
                    const Region& r = field.region(a.region);
                    const Point p = detail::half_point(spec, c);
                    double v = r.constant ? (*r.constant)(k, l) : r.extended(p)(k, l);
                    // a value of the wrong sign for the branch is treated as zero
                    if ((a.sigma < 0 && v < 0.0) || (a.sigma > 0 && v > 0.0)) v = 0.0;
                    a.mixed = std::abs(v);
                    return a;
                };

                for (std::size_t q = 0; q < box.size(); ++q) {
                    const MultiIndex x = box.at(q);
                    const detail::PlaneAnchor a = resolve(x);
                    const Index sk = a.sk, sl = a.sl;

                    // pure terms on forward edges
                    for (int side = 0; side < 2; ++side) {
                        const int m = side == 0 ? k : l, o = side == 0 ? l : k;
                        const Index sm = extended ? 1 : (side == 0 ? sk : sl);
                        const Index so = extended ? 1 : (side == 0 ? sl : sk);
                        MultiIndex y = x;
                        y[m] += sm;
                        if (!fits(y)) continue;
                        MultiIndex c = detail::doubled(x);
                        c[m] += sm;
                        c[o] += so;
                        const double up = detail::coefficient(field, m, m, detail::half_point(spec, c));
                        c[o] -= 2 * so;
                        const double down = detail::coefficient(field, m, m, detail::half_point(spec, c));
                        const double amm = 0.5 * (up + down) / pure_div;
                        acc.add(x, y, amm / (static_cast<double>(sm * sm) * h2));
                    }

                    // orientation dir = +1 uses the cell [x, x + mk e_k] x [x, x + sg ml e_l],
                    // dir = -1 its point reflection through x; each carries half the weight
                    auto add_mixed = [&](Index mk, Index ml, int sg, int dir, double mixed) {
                        if (mixed == 0.0) return;
                        MultiIndex ek = x, el = x;
                        ek[k] += dir * mk;
                        el[l] += dir * sg * ml;
                        if (!fits(ek) || !fits(el)) return;
                        const double w = mixed / (static_cast<double>(mk * ml) * h2);
                        acc.add(ek, el, w);
                        if (extended) {
                            MultiIndex uk = x, ul = x;
                            uk[k] += dir;
                            ul[l] += dir * sg;
                            acc.add(x, uk, -mixed * static_cast<double>(mk) / static_cast<double>(ml) / h2);
                            acc.add(x, ul, -mixed * static_cast<double>(ml) / static_cast<double>(mk) / h2);
                        } else {
                            acc.add(x, ek, -w);
                            acc.add(x, el, -w);
                        }
                    };

                    for (int dir : {1, -1}) {
                        if (opt.mixed_rule == MixedRule::owner_center && !corner[q]) {
                            if (dir > 0) add_mixed(sk, sl, a.sigma, 1, a.mixed);
                            continue;
                        }
                        if (opt.mixed_rule == MixedRule::corner_cell || corner[q]) {
                            // the unit cell at the anchor corner on either side of e_l
                            // supplies tensor, strides and orientation
                            for (int s : {1, -1}) {
                                MultiIndex c = detail::doubled(x);
                                c[k] += dir;
                                c[l] += dir * s;
                                const Point p = detail::half_point(spec, c);
                                const int m = detail::locate_or_nearest(field, p);
                                if (sigma[static_cast<std::size_t>(m)] != s) continue;
                                const Region& r = field.region(m);
                                const double v = r.constant ? (*r.constant)(k, l) : r.extended(p)(k, l);
                                if ((s < 0 && v > 0.0) || (s > 0 && v < 0.0)) {
                                    const auto st = field.plane_strides(m, k, l);
                                    add_mixed(st.first, st.second, s, dir, 0.5 * std::abs(v));
                                }
                            }
                            continue;
                        }
                        // every region adds its own cell, weighted by the mean of
                        // |a_kl| over the unit subcells of that cell lying in the region
                        for (std::size_t m = 0; m < field.regions().size(); ++m) {
                            const auto st = field.plane_strides(static_cast<int>(m), k, l);
                            const int sg = sigma[m];
                            double sum = 0.0;
                            MultiIndex c = detail::doubled(x);
                            for (Index i = 0; i < st.first; ++i)
                                for (Index j = 0; j < st.second; ++j) {
                                    c[k] = 2 * (x[k] + dir * i) + dir;
                                    c[l] = 2 * (x[l] + dir * sg * j) + dir * sg;
                                    const Point p = detail::half_point(spec, c);
                                    if (field.locate(p) != static_cast<int>(m)) continue;
                                    const Region& r = field.region(static_cast<int>(m));
                                    const double v = r.constant ? (*r.constant)(k, l) : r.raw(p)(k, l);
                                    if ((sg < 0 && v > 0.0) || (sg > 0 && v < 0.0)) sum += std::abs(v);
                                }
                            add_mixed(st.first, st.second, sg, dir, 0.5 * sum / static_cast<double>(st.first * st.second));
                        }
                    }
                }
            }
        return acc.build();
    };

    std::vector<char> corner(box.size(), 0);
    SparseMatrix built = build(corner);
    std::size_t repaired = 0;
    if (d > 1 && opt.mixed_rule != MixedRule::corner_cell)
        for (bool changed = true; changed;) {
            changed = false;
            const double tol = 1e-12 * built.max_abs();
            for (std::size_t r = 0; r < built.order(); ++r)
                for (const auto& e : built.row(r))
                    if (e.col != r && e.value > tol)
                        for (std::size_t end : {r, e.col}) {
                            char& f = corner[box.linear(built.knots()[end])];
                            if (!f) {
                                f = 1;
                                ++repaired;
                                changed = true;
                            }
                        }
            if (changed) built = build(corner);
        }

    SchemeMatrix out;
    out.matrix = std::move(built);
    out.corner_anchors = repaired;
    out.spec = spec;
    out.domain = domain;
    out.variant = opt.variant;
    out.box_lower = blo;
    out.box_upper = bhi;
    out.interior = KnotSet(knots(GridSpec::with_divisions(spec.divisions, d), domain, KnotSelection::interior));
    out.closure = KnotSet(knots(GridSpec::with_divisions(spec.divisions, d), domain, KnotSelection::closure));

    if (opt.enforce_admissibility) {
        const SparseMatrix& A = out.matrix;
        const double tol = 1e-12 * A.max_abs();
        for (std::size_t r = 0; r < A.order(); ++r)
            for (const auto& e : A.row(r))
                if (e.col != r && e.value > tol)
                    throw AssemblyError("positive coupling " + format_real(e.value) + " between knot " +
                                        to_string(A.knots()[r]) + " and " + to_string(A.knots()[e.col]));
    }
    return out;
}

inline SchemeMatrix assemble_basic_2d(const CoefficientField& field, const GridSpec& spec, const DomainBox& domain,
                                      bool enforce = true) {
    if (spec.dim != 2) throw ParameterError("assemble_basic_2d requires d = 2");
    return assemble(field, spec, domain, {SchemeVariant::basic, MixedRule::cell_fraction, enforce});
}

inline SchemeMatrix assemble_extended_2d(const CoefficientField& field, const GridSpec& spec,
                                         const DomainBox& domain, bool enforce = true) {
    if (spec.dim != 2) throw ParameterError("assemble_extended_2d requires d = 2");
    return assemble(field, spec, domain, {SchemeVariant::extended, MixedRule::cell_fraction, enforce});
}

inline SchemeMatrix assemble_nd(const CoefficientField& field, const GridSpec& spec, const DomainBox& domain,
                                const AssemblyOptions& opt = {}) {
    return assemble(field, spec, domain, opt);
}

struct Coupling {
    MultiIndex row;
    MultiIndex col;
    double value;
};

struct RestrictedMatrix {
    SparseMatrix matrix;
    std::vector<Coupling> dropped;
};

/// Principal submatrix on the interior knots (homogeneous Dirichlet) and the
/// couplings it drops.
inline RestrictedMatrix restrict_dirichlet(const SparseMatrix& a, const KnotSet& interior) {
    RestrictedMatrix out;
    out.matrix = a.principal(interior);
    for (std::size_t p = 0; p < interior.size(); ++p) {
        const auto r = a.knots().find(interior[p]);
        if (r < 0) continue;
        for (const auto& e : a.row(static_cast<std::size_t>(r)))
            if (!interior.contains(a.knots()[e.col])) out.dropped.push_back({interior[p], a.knots()[e.col], e.value});
    }
    return out;
}

inline RestrictedMatrix restrict_dirichlet(const SchemeMatrix& s) { return restrict_dirichlet(s.matrix, s.interior); }

struct Offender {
    MultiIndex knot;
    MultiIndex neighbor;
    double value;
    std::string what;
};

struct StencilCertificate {
    bool compartmental = true;
    bool conservative_rows = true;
    bool conservative_cols = true;
    std::vector<Offender> offenders;
};

/// diag > 0, off-diagonals <= 0; unrestricted matrices additionally need zero
/// row and column sums, restricted ones nonnegative column sums. Tolerance
/// 1e-12 max|entry|.
inline StencilCertificate verify_compartmental(const SparseMatrix& a, bool restricted) {
    StencilCertificate c;
    const double tol = 1e-12 * a.max_abs();
    const auto& ks = a.knots();
    for (std::size_t r = 0; r < a.order(); ++r) {
        bool has_diag = false;
        for (const auto& e : a.row(r)) {
            if (e.col == r) {
                has_diag = true;
                if (!(e.value > 0.0)) {
                    c.compartmental = false;
                    c.offenders.push_back({ks[r], ks[r], e.value, "nonpositive diagonal"});
                }
            } else if (e.value > tol) {
                c.compartmental = false;
                c.offenders.push_back({ks[r], ks[e.col], e.value, "positive off-diagonal"});
            }
        }
        if (!has_diag) {
            c.compartmental = false;
            c.offenders.push_back({ks[r], ks[r], 0.0, "missing diagonal"});
        }
    }
    const auto rs = a.row_sums();
    const auto cs = a.col_sums();
    for (std::size_t r = 0; r < a.order(); ++r) {
        if (std::abs(rs[r]) > tol) c.conservative_rows = false;
        if (std::abs(cs[r]) > tol) c.conservative_cols = false;
        const bool bad = restricted ? cs[r] < -tol : (std::abs(rs[r]) > tol || std::abs(cs[r]) > tol);
        if (bad) {
            c.compartmental = false;
            c.offenders.push_back({ks[r], ks[r], restricted ? cs[r] : std::max(std::abs(rs[r]), std::abs(cs[r])),
                                   restricted ? "negative column sum" : "nonzero row or column sum"});
        }
    }
    return c;
}

/// Every Gershgorin column disc lies in Re(lambda) >= 0.
inline bool gershgorin_check(const SparseMatrix& a) {
    const double tol = 1e-12 * a.max_abs();
    std::vector<double> center(a.order(), 0.0), radius(a.order(), 0.0);
    for (std::size_t r = 0; r < a.order(); ++r)
        for (const auto& e : a.row(r)) {
            if (e.col == r)
                center[r] = e.value;
            else
                radius[e.col] += std::abs(e.value);
        }
    for (std::size_t j = 0; j < a.order(); ++j)
        if (center[j] - radius[j] < -tol) return false;
    return true;
}

/// <u | A u>_R = vol(R) sum_k u_k (A u)_k over the matrix knots.
inline double quadratic_form(const SparseMatrix& a, const GridFunction& u) {
    std::vector<double> x(a.order(), 0.0);
    for (const auto& [k, v] : u.values()) {
        const auto p = a.knots().find(k);
        if (p < 0) throw GridError("grid function value at " + to_string(k) + " outside the matrix knots");
        x[static_cast<std::size_t>(p)] = v;
    }
    const auto y = a.multiply(x);
    double s = 0.0;
    for (std::size_t p = 0; p < x.size(); ++p) s += x[p] * y[p];
    return static_cast<double>(u.spec().volume()) * s;
}

/// (A u) as a grid function on the matrix knots.
inline GridFunction apply(const SparseMatrix& a, const GridFunction& u) {
    std::vector<double> x(a.order(), 0.0);
    for (const auto& [k, v] : u.values()) {
        const auto p = a.knots().find(k);
        if (p >= 0) x[static_cast<std::size_t>(p)] = v;
    }
    const auto y = a.multiply(x);
    GridFunction out(u.spec());
    for (std::size_t p = 0; p < y.size(); ++p)
        if (y[p] != 0.0) out.set(a.knots()[p], y[p]);
    return out;
}

}  // namespace monotone_elliptic
