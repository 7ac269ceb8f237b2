#pragma once

// Jacobi and Gauss-Seidel iterations for (lambda I + A) u = mu.
//
// Knot sets that fill an index box in lexicographic order run on a
// diagonal-offset (DIA) layout with a zero ghost frame; anything else runs on
// CSR. Both paths perform identical floating-point operations per row, in the
// same order.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "sparse.hpp"

namespace monotone_elliptic {

class StructuralError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SolverMethod { jacobi, gauss_seidel };

inline const char* to_string(SolverMethod m) { return m == SolverMethod::jacobi ? "jacobi" : "gauss_seidel"; }

struct SolveConfig {
    SolverMethod method = SolverMethod::jacobi;
    double lambda = 0.0;
    double tol = 1e-9;
    std::size_t max_iters = 10'000'000;
    /// vol(R) weight of the stopping norm |||du|||_1.
    double norm_weight = 1.0;
    int threads = 1;
    /// Called every `progress_every` iterations with (iteration, delta).
    std::function<void(std::size_t, double)> progress;
    std::size_t progress_every = 10000;

    void validate() const {
        if (!(tol > 0.0)) throw ParameterError("solver tolerance must be > 0");
        if (max_iters < 1) throw ParameterError("max_iters must be >= 1");
        if (!(lambda >= 0.0)) throw ParameterError("lambda must be >= 0");
    }
};

struct SolveReport {
    std::string method;
    std::size_t iterations = 0;
    double final_delta = 0.0;
    bool converged = false;
    double residual_inf = 0.0;
    double seconds = 0.0;
};

struct SolveResult {
    std::vector<double> u;
    SolveReport report;
};

/// |||(lambda I + A) u - mu|||_inf.
inline double residual(const SparseMatrix& a, const std::vector<double>& u, const std::vector<double>& mu,
                       double lambda = 0.0) {
    const auto au = a.multiply(u);
    double r = 0.0;
    for (std::size_t p = 0; p < au.size(); ++p) r = std::max(r, std::abs(au[p] + lambda * u[p] - mu[p]));
    return r;
}

namespace detail {

/// Off-diagonal part of A in diagonal-offset storage over a padded box.
struct DiaOperator {
    std::vector<Index> extent, padded;
    Index pad = 0;
    std::vector<std::ptrdiff_t> shift;       // linear offset in the padded layout
    std::vector<std::vector<double>> coeff;  // [offset][row]
    std::vector<std::size_t> line_start;     // padded index of each line's first knot
    std::size_t line_length = 0;
    std::size_t padded_size = 0;

    std::size_t padded_index(const MultiIndex& rel) const {
        std::size_t p = 0;
        for (std::size_t i = 0; i < rel.size(); ++i)
            p = p * static_cast<std::size_t>(padded[i]) + static_cast<std::size_t>(rel[i] + pad);
        return p;
    }
};

inline bool build_dia(const SparseMatrix& a, DiaOperator& op) {
    const auto& ks = a.knots();
    if (ks.size() == 0) return false;
    const std::size_t d = ks[0].size();
    MultiIndex lo = ks[0], hi = ks[ks.size() - 1];
    IndexBox box(lo, hi);
    if (box.size() != ks.size()) return false;
    for (std::size_t p = 0; p < ks.size(); ++p)
        if (ks[p] != box.at(p)) return false;
    std::map<MultiIndex, std::size_t> offsets;
    Index pad = 0;
    for (std::size_t r = 0; r < a.order(); ++r)
        for (std::size_t q = a.row_ptr()[r]; q < a.row_ptr()[r + 1]; ++q) {
            const std::size_t c = a.cols()[q];
            if (c == r) continue;
            MultiIndex o(d);
            for (std::size_t i = 0; i < d; ++i) {
                o[i] = ks[c][i] - ks[r][i];
                pad = std::max(pad, std::abs(o[i]));
            }
            offsets.emplace(o, offsets.size());
            if (offsets.size() > 64) return false;
        }
    op.pad = pad;
    op.extent.resize(d);
    op.padded.resize(d);
    op.padded_size = 1;
    for (std::size_t i = 0; i < d; ++i) {
        op.extent[i] = hi[i] - lo[i] + 1;
        op.padded[i] = op.extent[i] + 2 * pad;
        op.padded_size *= static_cast<std::size_t>(op.padded[i]);
    }
    // offsets in lexicographic order of the offset vector
    std::vector<MultiIndex> ordered;
    for (const auto& [o, id] : offsets) ordered.push_back(o);
    std::map<MultiIndex, std::size_t> slot;
    for (std::size_t s = 0; s < ordered.size(); ++s) slot[ordered[s]] = s;
    op.shift.resize(ordered.size());
    for (std::size_t s = 0; s < ordered.size(); ++s) {
        std::ptrdiff_t lin = 0;
        for (std::size_t i = 0; i < d; ++i) lin = lin * static_cast<std::ptrdiff_t>(op.padded[i]) + ordered[s][i];
        op.shift[s] = lin;
    }
    op.coeff.assign(ordered.size(), std::vector<double>(a.order(), 0.0));
    for (std::size_t r = 0; r < a.order(); ++r)
        for (std::size_t q = a.row_ptr()[r]; q < a.row_ptr()[r + 1]; ++q) {
            const std::size_t c = a.cols()[q];
            if (c == r) continue;
            MultiIndex o(d);
            for (std::size_t i = 0; i < d; ++i) o[i] = ks[c][i] - ks[r][i];
            op.coeff[slot[o]][r] = a.values()[q];
        }
    op.line_length = static_cast<std::size_t>(op.extent[d - 1]);
    const std::size_t lines = a.order() / op.line_length;
    op.line_start.resize(lines);
    for (std::size_t l = 0; l < lines; ++l) {
        MultiIndex rel(d);
        const MultiIndex k = box.at(l * op.line_length);
        for (std::size_t i = 0; i < d; ++i) rel[i] = k[i] - lo[i];
        op.line_start[l] = op.padded_index(rel);
    }
    return true;
}

inline std::vector<double> diagonal_of(const SparseMatrix& a, double lambda) {
    std::vector<double> k(a.order());
    for (std::size_t r = 0; r < a.order(); ++r) {
        const double d = a.diagonal(r);
        if (!(d > 0.0)) throw StructuralError("nonpositive diagonal entry at knot " + to_string(a.knots()[r]));
        k[r] = d + lambda;
    }
    return k;
}

}  // namespace detail

/// Jacobi u <- K^{-1}(Q u + mu), K = lambda I + diag(A), Q = diag(A) - A, or
/// the lexicographic Gauss-Seidel sweep; stops when |||u_new - u|||_1 < tol.
inline SolveResult iterate(const SparseMatrix& a, const std::vector<double>& mu, const SolveConfig& cfg,
                           std::vector<double> u0 = {}) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = a.order();
    if (mu.size() != n) throw ParameterError("right-hand side size does not match matrix order");
    if (u0.empty()) u0.assign(n, 0.0);
    if (u0.size() != n) throw ParameterError("initial guess size does not match matrix order");
    const auto K = detail::diagonal_of(a, cfg.lambda);
    std::vector<double> invK(n);
    for (std::size_t r = 0; r < n; ++r) invK[r] = 1.0 / K[r];
    const bool gs = cfg.method == SolverMethod::gauss_seidel;

    SolveResult res;
    res.report.method = to_string(cfg.method);
    detail::DiaOperator op;
    const bool dia = detail::build_dia(a, op);

    if (dia) {
        std::vector<double> cur(op.padded_size, 0.0), next;
        for (std::size_t l = 0; l < op.line_start.size(); ++l)
            for (std::size_t j = 0; j < op.line_length; ++j) cur[op.line_start[l] + j] = u0[l * op.line_length + j];
        if (!gs) next = cur;
        const std::size_t lines = op.line_start.size(), L = op.line_length, S = op.shift.size();
        std::vector<double> line_delta(lines);
        for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
            double* out = gs ? cur.data() : next.data();
            const double* in = cur.data();
#pragma omp parallel for schedule(static) num_threads(cfg.threads) if (!gs && cfg.threads > 1)
            for (std::size_t l = 0; l < lines; ++l) {
                const std::size_t base = op.line_start[l], row0 = l * L;
                double dl = 0.0;
                if (gs) {
                    for (std::size_t j = 0; j < L; ++j) {
                        const std::size_t r = row0 + j, P = base + j;
                        double s = mu[r];
                        for (std::size_t o = 0; o < S; ++o)
                            s -= op.coeff[o][r] * in[static_cast<std::ptrdiff_t>(P) + op.shift[o]];
                        const double v = s * invK[r];
                        dl += std::abs(v - in[P]);
                        out[P] = v;
                    }
                } else {
                    // offset-major sweep over the line; same per-row operation order
                    thread_local std::vector<double> acc;
                    acc.assign(mu.begin() + static_cast<std::ptrdiff_t>(row0),
                               mu.begin() + static_cast<std::ptrdiff_t>(row0 + L));
                    for (std::size_t o = 0; o < S; ++o) {
                        const double* c = op.coeff[o].data() + row0;
                        const double* x = in + static_cast<std::ptrdiff_t>(base) + op.shift[o];
                        for (std::size_t j = 0; j < L; ++j) acc[j] -= c[j] * x[j];
                    }
                    for (std::size_t j = 0; j < L; ++j) {
                        const double v = acc[j] * invK[row0 + j];
                        dl += std::abs(v - in[base + j]);
                        out[base + j] = v;
                    }
                }
                line_delta[l] = dl;
            }
            double delta = 0.0;
            for (double v : line_delta) delta += v;
            delta *= cfg.norm_weight;
            if (!gs) std::swap(cur, next);
            res.report.iterations = it;
            res.report.final_delta = delta;
            if (cfg.progress && it % cfg.progress_every == 0) cfg.progress(it, delta);
            if (delta < cfg.tol) {
                res.report.converged = true;
                break;
            }
        }
        res.u.resize(n);
        for (std::size_t l = 0; l < op.line_start.size(); ++l)
            for (std::size_t j = 0; j < op.line_length; ++j) res.u[l * op.line_length + j] = cur[op.line_start[l] + j];
    } else {
        std::vector<double> cur = u0, next(n);
        const auto& rp = a.row_ptr();
        const auto& cs = a.cols();
        const auto& vs = a.values();
        for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
            double delta = 0.0;
            double* out = gs ? cur.data() : next.data();
            const double* in = cur.data();
            for (std::size_t r = 0; r < n; ++r) {
                double s = mu[r];
                for (std::size_t q = rp[r]; q < rp[r + 1]; ++q)
                    if (cs[q] != r) s -= vs[q] * in[cs[q]];
                const double v = s * invK[r];
                delta += std::abs(v - in[r]);
                out[r] = v;
            }
            delta *= cfg.norm_weight;
            if (!gs) std::swap(cur, next);
            res.report.iterations = it;
            res.report.final_delta = delta;
            if (cfg.progress && it % cfg.progress_every == 0) cfg.progress(it, delta);
            if (delta < cfg.tol) {
                res.report.converged = true;
                break;
            }
        }
        res.u = std::move(cur);
    }
    res.report.residual_inf = residual(a, res.u, mu, cfg.lambda);
    res.report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

inline SolveResult jacobi_solve(const SparseMatrix& a, const std::vector<double>& mu, SolveConfig cfg,
                                std::vector<double> u0 = {}) {
    cfg.method = SolverMethod::jacobi;
    return iterate(a, mu, cfg, std::move(u0));
}

inline SolveResult gauss_seidel_solve(const SparseMatrix& a, const std::vector<double>& mu, SolveConfig cfg,
                                      std::vector<double> u0 = {}) {
    cfg.method = SolverMethod::gauss_seidel;
    return iterate(a, mu, cfg, std::move(u0));
}

/// Dense vector over the matrix knots from a grid function (0 elsewhere).
inline std::vector<double> to_vector(const SparseMatrix& a, const GridFunction& u) {
    std::vector<double> x(a.order(), 0.0);
    for (const auto& [k, v] : u.values()) {
        const auto p = a.knots().find(k);
        if (p < 0) throw GridError("value at " + to_string(k) + " outside the unknown set");
        x[static_cast<std::size_t>(p)] = v;
    }
    return x;
}

inline GridFunction to_grid_function(const SparseMatrix& a, const std::vector<double>& x, const GridSpec& spec) {
    GridFunction u(spec);
    for (std::size_t p = 0; p < x.size(); ++p) u.set(a.knots()[p], x[p]);
    return u;
}

}  // namespace monotone_elliptic
