#pragma once

// CSR storage, the knot <-> unknown index map, and the serializers
// (MatrixMarket coordinate, index-map CSV).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "grid.hpp"

namespace monotone_elliptic {

struct MultiIndexHash {
    std::size_t operator()(const MultiIndex& k) const noexcept {
        std::size_t h = 1469598103934665603ULL;
        for (Index v : k) {
            h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        }
        return h;
    }
};

/// Ordered knot list with reverse lookup. The order is the unknown order.
class KnotSet {
public:
    KnotSet() = default;
    explicit KnotSet(std::vector<MultiIndex> knots) : knots_(std::move(knots)) {
        lookup_.reserve(knots_.size());
        for (std::size_t p = 0; p < knots_.size(); ++p) lookup_.emplace(knots_[p], p);
        if (lookup_.size() != knots_.size()) throw GridError("duplicate knot in knot set");
    }

    std::size_t size() const { return knots_.size(); }
    const MultiIndex& operator[](std::size_t p) const { return knots_[p]; }
    const std::vector<MultiIndex>& knots() const { return knots_; }

    /// Linear index or -1.
    std::ptrdiff_t find(const MultiIndex& k) const {
        auto it = lookup_.find(k);
        return it == lookup_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
    }
    bool contains(const MultiIndex& k) const { return find(k) >= 0; }

private:
    std::vector<MultiIndex> knots_;
    std::unordered_map<MultiIndex, std::size_t, MultiIndexHash> lookup_;
};

/// Square CSR matrix over a knot set. Columns sorted per row, no explicit
/// zeros, no duplicates.
class SparseMatrix {
public:
    struct Entry {
        std::size_t col;
        double value;
    };

    SparseMatrix() = default;

    /// Builds from triplets, summing duplicates. Entries whose magnitude is at
    /// most `drop_rel` times the summed magnitude of their contributions are
    /// treated as cancelled and removed.
    static SparseMatrix from_triplets(KnotSet knots, std::vector<std::tuple<std::size_t, std::size_t, double>> t,
                                      double drop_rel = 1e-12) {
        SparseMatrix m;
        m.knots_ = std::move(knots);
        const std::size_t n = m.knots_.size();
        std::sort(t.begin(), t.end(), [](const auto& a, const auto& b) {
            return std::get<0>(a) != std::get<0>(b) ? std::get<0>(a) < std::get<0>(b)
                                                    : std::get<1>(a) < std::get<1>(b);
        });
        m.row_ptr_.assign(n + 1, 0);
        for (std::size_t q = 0; q < t.size();) {
            const auto [r, c, v0] = t[q];
            if (r >= n || c >= n) throw std::out_of_range("triplet index outside matrix order");
            double v = 0.0, mag = 0.0;
            for (; q < t.size() && std::get<0>(t[q]) == r && std::get<1>(t[q]) == c; ++q) {
                v += std::get<2>(t[q]);
                mag += std::abs(std::get<2>(t[q]));
            }
            if (!std::isfinite(v)) throw std::runtime_error("non-finite matrix entry");
            if (std::abs(v) <= drop_rel * mag || v == 0.0) continue;
            m.cols_.push_back(c);
            m.vals_.push_back(v);
            ++m.row_ptr_[r + 1];
        }
        for (std::size_t r = 0; r < n; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
        return m;
    }

    std::size_t order() const { return knots_.size(); }
    std::size_t nonzeros() const { return vals_.size(); }
    const KnotSet& knots() const { return knots_; }

    const std::vector<std::size_t>& row_ptr() const { return row_ptr_; }
    const std::vector<std::size_t>& cols() const { return cols_; }
    const std::vector<double>& values() const { return vals_; }

    std::vector<Entry> row(std::size_t r) const {
        std::vector<Entry> out;
        for (std::size_t q = row_ptr_[r]; q < row_ptr_[r + 1]; ++q) out.push_back({cols_[q], vals_[q]});
        return out;
    }

    double at(std::size_t r, std::size_t c) const {
        auto b = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r]);
        auto e = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[r + 1]);
        auto it = std::lower_bound(b, e, c);
        return (it != e && *it == c) ? vals_[static_cast<std::size_t>(it - cols_.begin())] : 0.0;
    }

    double at(const MultiIndex& r, const MultiIndex& c) const {
        const auto i = knots_.find(r), j = knots_.find(c);
        return (i < 0 || j < 0) ? 0.0 : at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }

    double diagonal(std::size_t r) const { return at(r, r); }

    double max_abs() const {
        double m = 0.0;
        for (double v : vals_) m = std::max(m, std::abs(v));
        return m;
    }

    /// y = A x.
    void multiply(const std::vector<double>& x, std::vector<double>& y) const {
        y.assign(order(), 0.0);
        for (std::size_t r = 0; r < order(); ++r) {
            double s = 0.0;
            for (std::size_t q = row_ptr_[r]; q < row_ptr_[r + 1]; ++q) s += vals_[q] * x[cols_[q]];
            y[r] = s;
        }
    }

    std::vector<double> multiply(const std::vector<double>& x) const {
        std::vector<double> y;
        multiply(x, y);
        return y;
    }

    std::vector<double> row_sums() const {
        std::vector<double> s(order(), 0.0);
        for (std::size_t r = 0; r < order(); ++r)
            for (std::size_t q = row_ptr_[r]; q < row_ptr_[r + 1]; ++q) s[r] += vals_[q];
        return s;
    }

    std::vector<double> col_sums() const {
        std::vector<double> s(order(), 0.0);
        for (std::size_t r = 0; r < order(); ++r)
            for (std::size_t q = row_ptr_[r]; q < row_ptr_[r + 1]; ++q) s[cols_[q]] += vals_[q];
        return s;
    }

    /// Principal submatrix on `keep` (given in the new unknown order).
    SparseMatrix principal(const KnotSet& keep) const {
        std::vector<std::tuple<std::size_t, std::size_t, double>> t;
        for (std::size_t p = 0; p < keep.size(); ++p) {
            const auto r = knots_.find(keep[p]);
            if (r < 0) throw GridError("knot " + to_string(keep[p]) + " not in matrix");
            for (std::size_t q = row_ptr_[static_cast<std::size_t>(r)]; q < row_ptr_[static_cast<std::size_t>(r) + 1]; ++q) {
                const auto c = keep.find(knots_[cols_[q]]);
                if (c >= 0) t.emplace_back(p, static_cast<std::size_t>(c), vals_[q]);
            }
        }
        return from_triplets(keep, std::move(t), 0.0);
    }

    /// Deterministic FNV-1a digest of structure and values.
    std::uint64_t hash() const {
        std::uint64_t h = 1469598103934665603ULL;
        auto mix = [&](const void* p, std::size_t n) {
            const auto* b = static_cast<const unsigned char*>(p);
            for (std::size_t i = 0; i < n; ++i) {
                h ^= b[i];
                h *= 1099511628211ULL;
            }
        };
        for (const auto& k : knots_.knots()) mix(k.data(), k.size() * sizeof(Index));
        mix(row_ptr_.data(), row_ptr_.size() * sizeof(std::size_t));
        mix(cols_.data(), cols_.size() * sizeof(std::size_t));
        mix(vals_.data(), vals_.size() * sizeof(double));
        return h;
    }

private:
    KnotSet knots_;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> cols_;
    std::vector<double> vals_;
};

inline std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// MatrixMarket coordinate real general, 1-based.
inline void write_matrix_market(std::ostream& os, const SparseMatrix& a) {
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << a.order() << ' ' << a.order() << ' ' << a.nonzeros() << '\n';
    for (std::size_t r = 0; r < a.order(); ++r)
        for (std::size_t q = a.row_ptr()[r]; q < a.row_ptr()[r + 1]; ++q)
            os << r + 1 << ' ' << a.cols()[q] + 1 << ' ' << format_real(a.values()[q]) << '\n';
}

/// linear_index,k_1,...,k_d
inline void write_index_map(std::ostream& os, const KnotSet& knots, int dim) {
    os << "linear_index";
    for (int i = 1; i <= dim; ++i) os << ",k_" << i;
    os << "\r\n";
    for (std::size_t p = 0; p < knots.size(); ++p) {
        os << p;
        for (Index v : knots[p]) os << ',' << v;
        os << "\r\n";
    }
}

}  // namespace monotone_elliptic
