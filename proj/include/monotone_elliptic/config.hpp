#pragma once

// JSON problem configuration: parsing, normalization and conversion to a Problem.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "builtins.hpp"
#include "problem.hpp"

namespace monotone_elliptic {

inline constexpr const char* kSchemaVersion = "monotone-elliptic/1";

/// Malformed configuration; `field` is a JSON pointer to the offending entry.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(field) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct RegionConfig {
    std::string id;
    std::vector<Box> boxes;
    std::vector<std::vector<double>> tensor;
    std::vector<Index> stride;
};

struct CoefficientConfig {
    std::string builtin;  // example71 | example72 | identity | "" (inline regions)
    double sigma2 = 10.0;
    double rho = 2.0;
    std::vector<Index> r{3, 1};
    std::vector<RegionConfig> regions;
};

struct MeasureConfig {
    std::string kind;  // point | line | density
    Point location;
    int axis = 0;
    double level = 0.0;
    Point lower, upper;
    double value = 1.0;
    std::string function;  // named density
    double weight = 1.0;
};

struct ProblemConfig {
    std::string schema = kSchemaVersion;
    DomainBox domain = DomainBox::unit(2);
    int level = 4;
    Index divisions = 0;  // overrides level when > 0
    SchemeVariant scheme = SchemeVariant::extended;
    CoefficientConfig coefficients;
    std::string rhs = "measure";  // measure | weak-form-of-exact
    std::vector<MeasureConfig> measure;
    std::string boundary = "zero";  // zero | exact
    std::string exact;
    SolverMethod method = SolverMethod::jacobi;
    double lambda = 0.0;
    double tol = 1e-9;
    std::size_t max_iters = 10000000;
    double norm_weight = 1.0;
    InitialGuess initial_guess = InitialGuess::zero;
    std::vector<int> levels;  // convergence study
    std::string out = "out";

    int dim() const { return domain.dim(); }
    Index resolved_divisions() const { return divisions > 0 ? divisions : Index{1} << level; }
};

namespace detail {

using nlohmann::json;

inline const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw ParseError(path + "/" + key, "missing required field");
    return j.at(key);
}

template <class T>
T read(const json& j, const std::string& path) {
    try {
        return j.get<T>();
    } catch (const json::exception& e) {
        throw ParseError(path, std::string("wrong type (") + e.what() + ")");
    }
}

template <class T>
T read_or(const json& j, const std::string& key, const std::string& path, T fallback) {
    if (!j.contains(key)) return fallback;
    return read<T>(j.at(key), path + "/" + key);
}

inline void reject_unknown(const json& j, const std::string& path, std::initializer_list<const char*> known) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || it.key() == k;
        if (!ok) throw ParseError(path + "/" + it.key(), "unknown field");
    }
}

inline double read_bound(const json& v, const std::string& path) {
    if (v.is_string()) {
        const auto t = v.get<std::string>();
        if (t == "inf") return kInf;
        if (t == "-inf") return -kInf;
        throw ParseError(path, "expected a number, \"inf\" or \"-inf\"");
    }
    return read<double>(v, path);
}

inline Point read_bounds(const json& j, const std::string& path) {
    if (!j.is_array()) throw ParseError(path, "expected an array");
    Point p;
    for (std::size_t i = 0; i < j.size(); ++i) p.push_back(read_bound(j[i], path + "/" + std::to_string(i)));
    return p;
}

inline Box read_box(const json& j, const std::string& path) {
    Box b;
    b.lower = read_bounds(require(j, "lower", path), path + "/lower");
    b.upper = read_bounds(require(j, "upper", path), path + "/upper");
    b.closed = read_or<bool>(j, "closed", path, false);
    if (b.lower.size() != b.upper.size()) throw ParseError(path, "lower/upper dimension mismatch");
    return b;
}

inline json write_bound(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

}  // namespace detail

inline ProblemConfig parse_config(const nlohmann::json& j) {
    using detail::read;
    using detail::read_or;
    using detail::require;
    ProblemConfig c;
    if (!j.is_object()) throw ParseError("", "configuration must be a JSON object");
    detail::reject_unknown(j, "", {"schema", "domain", "level", "divisions", "scheme", "coefficients", "rhs",
                                   "boundary", "exact", "solver", "levels", "outputs"});
    c.schema = read<std::string>(require(j, "schema", ""), "/schema");
    if (c.schema != kSchemaVersion)
        throw ParseError("/schema", "unsupported schema '" + c.schema + "', expected " + kSchemaVersion);

    if (j.contains("domain")) {
        const auto& d = j.at("domain");
        c.domain.lower = read<Point>(require(d, "lower", "/domain"), "/domain/lower");
        c.domain.upper = read<Point>(require(d, "upper", "/domain"), "/domain/upper");
        try {
            c.domain.validate();
        } catch (const std::exception& e) {
            throw ParseError("/domain", e.what());
        }
    }
    c.level = read_or<int>(j, "level", "", c.level);
    c.divisions = read_or<Index>(j, "divisions", "", 0);
    if (c.level < 1 || c.level > 24) throw ParseError("/level", "level must lie in [1, 24]");
    if (c.divisions != 0 && c.divisions < 2) throw ParseError("/divisions", "divisions must be >= 2");

    const auto scheme = read_or<std::string>(j, "scheme", "", "extended");
    if (scheme == "extended")
        c.scheme = SchemeVariant::extended;
    else if (scheme == "basic")
        c.scheme = SchemeVariant::basic;
    else
        throw ParseError("/scheme", "expected 'basic' or 'extended'");

    const auto& co = require(j, "coefficients", "");
    detail::reject_unknown(co, "/coefficients", {"builtin", "sigma2", "rho", "r", "regions"});
    c.coefficients.builtin = read_or<std::string>(co, "builtin", "/coefficients", "");
    c.coefficients.sigma2 = read_or<double>(co, "sigma2", "/coefficients", 10.0);
    c.coefficients.rho = read_or<double>(co, "rho", "/coefficients", 2.0);
    c.coefficients.r = read_or<std::vector<Index>>(co, "r", "/coefficients", {3, 1});
    const auto& b = c.coefficients.builtin;
    if (!b.empty() && b != "example71" && b != "example72" && b != "identity")
        throw ParseError("/coefficients/builtin", "unknown built-in '" + b + "'");
    if (b.empty()) {
        const auto& regs = require(co, "regions", "/coefficients");
        if (!regs.is_array() || regs.empty()) throw ParseError("/coefficients/regions", "expected a non-empty array");
        for (std::size_t i = 0; i < regs.size(); ++i) {
            const std::string p = "/coefficients/regions/" + std::to_string(i);
            const auto& r = regs[i];
            detail::reject_unknown(r, p, {"id", "boxes", "tensor", "stride"});
            RegionConfig rc;
            rc.id = read_or<std::string>(r, "id", p, "region" + std::to_string(i));
            if (r.contains("boxes"))
                for (std::size_t q = 0; q < r.at("boxes").size(); ++q)
                    rc.boxes.push_back(detail::read_box(r.at("boxes")[q], p + "/boxes/" + std::to_string(q)));
            rc.tensor = read<std::vector<std::vector<double>>>(require(r, "tensor", p), p + "/tensor");
            const std::size_t d = static_cast<std::size_t>(c.dim());
            if (rc.tensor.size() != d) throw ParseError(p + "/tensor", "expected a d x d matrix");
            for (const auto& row : rc.tensor)
                if (row.size() != d) throw ParseError(p + "/tensor", "expected a d x d matrix");
            rc.stride = read_or<std::vector<Index>>(r, "stride", p, std::vector<Index>(d, 1));
            if (rc.stride.size() != d) throw ParseError(p + "/stride", "expected d strides");
            c.coefficients.regions.push_back(std::move(rc));
        }
    }

    if (j.contains("rhs")) {
        const auto& r = j.at("rhs");
        detail::reject_unknown(r, "/rhs", {"type", "components"});
        c.rhs = read<std::string>(require(r, "type", "/rhs"), "/rhs/type");
        if (c.rhs != "measure" && c.rhs != "weak-form-of-exact")
            throw ParseError("/rhs/type", "expected 'measure' or 'weak-form-of-exact'");
        if (r.contains("components"))
            for (std::size_t i = 0; i < r.at("components").size(); ++i) {
                const std::string p = "/rhs/components/" + std::to_string(i);
                const auto& m = r.at("components")[i];
                MeasureConfig mc;
                mc.kind = read<std::string>(require(m, "kind", p), p + "/kind");
                mc.weight = read_or<double>(m, "weight", p, 1.0);
                if (mc.kind == "point") {
                    mc.location = read<Point>(require(m, "location", p), p + "/location");
                } else if (mc.kind == "line") {
                    mc.axis = read<int>(require(m, "axis", p), p + "/axis");
                    mc.level = read<double>(require(m, "level", p), p + "/level");
                    mc.lower = read<Point>(require(m, "lower", p), p + "/lower");
                    mc.upper = read<Point>(require(m, "upper", p), p + "/upper");
                } else if (mc.kind == "density") {
                    mc.function = read_or<std::string>(m, "function", p, "");
                    if (mc.function.empty()) {
                        mc.value = read<double>(require(m, "value", p), p + "/value");
                        mc.lower = read<Point>(require(m, "lower", p), p + "/lower");
                        mc.upper = read<Point>(require(m, "upper", p), p + "/upper");
                    } else if (mc.function != "sine_product_source") {
                        throw ParseError(p + "/function", "unknown density '" + mc.function + "'");
                    }
                } else {
                    throw ParseError(p + "/kind", "expected 'point', 'line' or 'density'");
                }
                c.measure.push_back(std::move(mc));
            }
    }

    c.exact = read_or<std::string>(j, "exact", "", "");
    if (!c.exact.empty() && c.exact != "example71" && c.exact != "example72" && c.exact != "sine_product")
        throw ParseError("/exact", "unknown exact solution '" + c.exact + "'");
    c.boundary = read_or<std::string>(j, "boundary", "", "zero");
    if (c.boundary != "zero" && c.boundary != "exact") throw ParseError("/boundary", "expected 'zero' or 'exact'");
    if (c.boundary == "exact" && c.exact.empty()) throw ParseError("/boundary", "'exact' boundary needs /exact");
    if (c.rhs == "weak-form-of-exact" && c.exact.empty()) throw ParseError("/rhs", "weak form needs /exact");

    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        detail::reject_unknown(s, "/solver",
                               {"method", "lambda", "tol", "max_iters", "norm_weight", "initial_guess"});
        const auto m = read_or<std::string>(s, "method", "/solver", "jacobi");
        if (m == "jacobi")
            c.method = SolverMethod::jacobi;
        else if (m == "gauss_seidel")
            c.method = SolverMethod::gauss_seidel;
        else
            throw ParseError("/solver/method", "expected 'jacobi' or 'gauss_seidel'");
        c.lambda = read_or<double>(s, "lambda", "/solver", 0.0);
        c.tol = read_or<double>(s, "tol", "/solver", 1e-9);
        c.max_iters = read_or<std::size_t>(s, "max_iters", "/solver", 10000000);
        c.norm_weight = read_or<double>(s, "norm_weight", "/solver", 1.0);
        const auto g = read_or<std::string>(s, "initial_guess", "/solver", "zero");
        if (g == "zero")
            c.initial_guess = InitialGuess::zero;
        else if (g == "boundary_interpolant")
            c.initial_guess = InitialGuess::boundary_interpolant;
        else
            throw ParseError("/solver/initial_guess", "expected 'zero' or 'boundary_interpolant'");
        if (!(c.tol > 0.0)) throw ParseError("/solver/tol", "must be positive");
        if (c.lambda < 0.0) throw ParseError("/solver/lambda", "must be nonnegative");
    }
    c.levels = read_or<std::vector<int>>(j, "levels", "", {});
    if (j.contains("outputs")) c.out = read_or<std::string>(j.at("outputs"), "dir", "/outputs", "out");
    return c;
}

inline ProblemConfig parse_config_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("byte " + std::to_string(e.byte), e.what());
    }
    return parse_config(j);
}

/// Every field written out, defaults included.
inline nlohmann::json normalized(const ProblemConfig& c) {
    using nlohmann::json;
    json j;
    j["schema"] = c.schema;
    j["domain"] = {{"lower", c.domain.lower}, {"upper", c.domain.upper}};
    j["level"] = c.level;
    if (c.divisions > 0) j["divisions"] = c.divisions;
    j["scheme"] = to_string(c.scheme);
    json co;
    if (!c.coefficients.builtin.empty()) {
        co["builtin"] = c.coefficients.builtin;
        co["sigma2"] = c.coefficients.sigma2;
        co["rho"] = c.coefficients.rho;
        co["r"] = c.coefficients.r;
    } else {
        co["regions"] = json::array();
        for (const auto& r : c.coefficients.regions) {
            json boxes = json::array();
            for (const auto& b : r.boxes) {
                json lo = json::array(), hi = json::array();
                for (double v : b.lower) lo.push_back(detail::write_bound(v));
                for (double v : b.upper) hi.push_back(detail::write_bound(v));
                boxes.push_back({{"lower", lo}, {"upper", hi}, {"closed", b.closed}});
            }
            co["regions"].push_back({{"id", r.id}, {"boxes", boxes}, {"tensor", r.tensor}, {"stride", r.stride}});
        }
    }
    j["coefficients"] = co;
    json comps = json::array();
    for (const auto& m : c.measure) {
        json e{{"kind", m.kind}, {"weight", m.weight}};
        if (m.kind == "point") e["location"] = m.location;
        if (m.kind == "line") {
            e["axis"] = m.axis;
            e["level"] = m.level;
            e["lower"] = m.lower;
            e["upper"] = m.upper;
        }
        if (m.kind == "density") {
            if (!m.function.empty()) {
                e["function"] = m.function;
            } else {
                e["value"] = m.value;
                e["lower"] = m.lower;
                e["upper"] = m.upper;
            }
        }
        comps.push_back(e);
    }
    j["rhs"] = {{"type", c.rhs}, {"components", comps}};
    j["boundary"] = c.boundary;
    if (!c.exact.empty()) j["exact"] = c.exact;
    j["solver"] = {{"method", to_string(c.method)},   {"lambda", c.lambda},
                   {"tol", c.tol},                    {"max_iters", c.max_iters},
                   {"norm_weight", c.norm_weight},    {"initial_guess", to_string(c.initial_guess)}};
    j["levels"] = c.levels;
    j["outputs"] = {{"dir", c.out}};
    return j;
}

inline CoefficientField build_field(const ProblemConfig& c) {
    const auto& co = c.coefficients;
    if (co.builtin == "example71") return example71_field(co.sigma2);
    if (co.builtin == "example72") return example72_field(co.sigma2, co.rho, co.r);
    if (co.builtin == "identity") return identity_field(c.dim());
    std::vector<Region> regions;
    double lo = kInf, hi = 0.0;
    for (const auto& rc : co.regions) {
        Region r;
        r.id = rc.id;
        r.boxes = rc.boxes;
        Tensor a(c.dim(), c.dim());
        for (int i = 0; i < c.dim(); ++i)
            for (int k = 0; k < c.dim(); ++k) a(i, k) = rc.tensor[i][k];
        if (!a.isApprox(a.transpose())) throw ConfigurationError("region '" + rc.id + "' tensor is not symmetric");
        Eigen::SelfAdjointEigenSolver<Tensor> es(a, Eigen::EigenvaluesOnly);
        lo = std::min(lo, es.eigenvalues().minCoeff());
        hi = std::max(hi, es.eigenvalues().maxCoeff());
        r.constant = a;
        r.stride = rc.stride;
        regions.push_back(std::move(r));
    }
    CoefficientField f(c.dim(), std::move(regions));
    f.set_bounds(lo, hi);
    return f;
}

inline MeasureSpec build_measure(const ProblemConfig& c) {
    MeasureSpec mu;
    const int d = c.dim();
    for (const auto& m : c.measure) {
        if (m.kind == "point") {
            mu.components.push_back(PointDirac{m.location, m.weight});
        } else if (m.kind == "line") {
            mu.components.push_back(LineDirac{m.axis, m.level, m.lower, m.upper, m.weight});
        } else if (!m.function.empty()) {
            Density den;
            den.function = [d](const Point& x) {
                double v = d * std::numbers::pi * std::numbers::pi;
                for (double xi : x) v *= std::sin(std::numbers::pi * xi);
                return v;
            };
            den.weight = m.weight;
            mu.components.push_back(std::move(den));
        } else {
            Density den;
            den.pieces.push_back(BoxPiece{m.lower, m.upper, m.value});
            den.weight = m.weight;
            mu.components.push_back(std::move(den));
        }
    }
    return mu;
}

inline Problem build_problem(const ProblemConfig& c, std::optional<int> level = std::nullopt, int threads = 1) {
    Problem pb;
    pb.domain = c.domain;
    pb.divisions = level ? Index{1} << *level : c.resolved_divisions();
    pb.variant = c.scheme;
    pb.field = build_field(c);
    if (!c.exact.empty()) pb.exact = named_exact(c.exact);
    if (c.rhs == "weak-form-of-exact")
        pb.rhs = WeakFormOfExact{};
    else
        pb.rhs = build_measure(c);
    if (c.boundary == "exact") pb.boundary.g = pb.exact->value;
    pb.solver.method = c.method;
    pb.solver.lambda = c.lambda;
    pb.solver.tol = c.tol;
    pb.solver.max_iters = c.max_iters;
    pb.solver.norm_weight = c.norm_weight;
    pb.solver.threads = threads;
    pb.initial_guess = c.initial_guess;
    return pb;
}

}  // namespace monotone_elliptic
