// monotone_cli: check, solve, convergence and export-matrix on a JSON problem config.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "monotone_elliptic/config.hpp"

namespace me = monotone_elliptic;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kInadmissible = 1, kParse = 2, kNotConverged = 3 };

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

LogLevel log_level() {
    const char* e = std::getenv("MONOTONE_ELLIPTIC_LOG");
    const std::string s = e ? e : "warn";
    if (s == "error") return LogLevel::error;
    if (s == "info") return LogLevel::info;
    if (s == "debug") return LogLevel::debug;
    return LogLevel::warn;
}

void log(LogLevel l, const std::string& msg) {
    static const LogLevel threshold = log_level();
    static const char* names[] = {"error", "warn", "info", "debug"};
    if (l <= threshold) std::cerr << "[" << names[static_cast<int>(l)] << "] " << msg << '\n';
}

struct Options {
    std::string config;
    std::optional<int> level;
    int threads = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::string dump;
    std::vector<int> levels;
};

int resolved_threads(int requested) {
    if (requested > 0) return requested;
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return std::max(1u, std::thread::hardware_concurrency());
#endif
}

/// RFC-4180 line.
void csv_row(std::ostream& os, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) os << ',';
        const std::string& c = cells[i];
        if (c.find_first_of(",\"\r\n") == std::string::npos) {
            os << c;
        } else {
            os << '"';
            for (char ch : c) os << (ch == '"' ? "\"\"" : std::string(1, ch));
            os << '"';
        }
    }
    os << "\r\n";
}

fs::path out_dir(const Options& o, const me::ProblemConfig& c) {
    fs::path p = o.out.empty() ? fs::path(c.out) : fs::path(o.out);
    fs::create_directories(p);
    return p;
}

void write_json(const fs::path& p, const json& j) {
    std::ofstream f(p);
    f << j.dump(2) << '\n';
}

json to_json(const me::AdmissibilityReport& r) {
    json v = json::array();
    for (const auto& x : r.violations)
        v.push_back({{"region", x.region}, {"axis", x.axis}, {"witness", x.witness}, {"value", x.value},
                     {"what", x.what}});
    std::vector<bool> pd(r.aux_posdef.begin(), r.aux_posdef.end());
    return {{"admissible", r.admissible()}, {"omega", r.omega}, {"aux_posdef", pd}, {"violations", v}};
}

json to_json(const me::StencilCertificate& c) {
    json off = json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(c.offenders.size(), 50); ++i) {
        const auto& o = c.offenders[i];
        off.push_back({{"knot", o.knot}, {"neighbor", o.neighbor}, {"value", o.value}, {"what", o.what}});
    }
    return {{"compartmental", c.compartmental},
            {"conservative_rows", c.conservative_rows},
            {"conservative_cols", c.conservative_cols},
            {"offender_count", c.offenders.size()},
            {"offenders", off}};
}

json to_json(const me::SolveReport& r) {
    return {{"method", r.method},           {"iterations", r.iterations}, {"final_delta", r.final_delta},
            {"converged", r.converged},     {"residual_inf", r.residual_inf}, {"seconds", r.seconds}};
}

json to_json(const me::ErrorReport& e) {
    return {{"eps1_rel", e.eps1},
            {"epsinf_rel", e.eps_inf},
            {"max_abs_diff", e.max_abs_diff},
            {"argmax_knot", e.argmax},
            {"argmax_x", e.argmax_x},
            {"exact_at_argmax", e.exact_at_argmax},
            {"pointwise_rel_at_argmax", e.pointwise_rel_at_argmax},
            {"knots", e.knots},
            {"excluded", e.excluded}};
}

me::ProblemConfig load(const Options& o) {
    std::ifstream f(o.config);
    if (!f) throw me::ParseError(o.config, "cannot open configuration file");
    std::stringstream ss;
    ss << f.rdbuf();
    me::ProblemConfig c = me::parse_config_text(ss.str());
    if (o.level) {
        c.level = *o.level;
        c.divisions = 0;
    }
    if (!o.dump.empty()) {
        write_json(o.dump, me::normalized(c));
        log(LogLevel::info, "normalized config written to " + o.dump);
    }
    return c;
}

int cmd_check(const Options& o) {
    const me::ProblemConfig c = load(o);
    const me::CoefficientField field = me::build_field(c);
    me::SamplingOptions so;
    so.window = c.domain;
    json report;
    bool ok = true;
    try {
        const auto adm = me::admissibility(field, so);
        report = to_json(adm);
        ok = adm.admissible();
    } catch (const me::ConfigurationError& e) {
        report = {{"admissible", false}, {"error", e.what()}};
        ok = false;
    }
    if (c.dim() >= 2) {
        try {
            const auto part = me::classify_sign_regions(field, me::GridSpec::with_divisions(c.resolved_divisions(), c.dim()),
                                                        c.domain);
            report["classification"] = {{"minus", part.minus.size()}, {"plus", part.plus.size()}};
        } catch (const me::ClassificationError& e) {
            report["classification"] = {{"error", e.what()}};
            ok = false;
        }
    }
    report["schema"] = me::kSchemaVersion;
    report["seed"] = o.seed;
    std::cout << report.dump(2) << '\n';
    write_json(out_dir(o, c) / "check.json", report);
    return ok ? kOk : kInadmissible;
}

json run_solve(const me::ProblemConfig& c, const Options& o, std::optional<int> level, me::Outcome& out) {
    me::Problem pb = me::build_problem(c, level, resolved_threads(o.threads));
    pb.solver.progress = [](std::size_t it, double d) {
        log(LogLevel::debug, "iteration " + std::to_string(it) + " delta " + me::format_real(d));
    };
    log(LogLevel::info, "solving with h = 1/" + std::to_string(pb.divisions));
    out = me::solve_problem(pb);
    json r;
    r["schema"] = me::kSchemaVersion;
    r["config"] = me::normalized(c);
    r["grid"] = {{"divisions", pb.divisions}, {"h", 1.0 / static_cast<double>(pb.divisions)},
                 {"unknowns", out.restricted.matrix.order()}};
    r["matrix"] = {{"order", out.restricted.matrix.order()},
                   {"nonzeros", out.restricted.matrix.nonzeros()},
                   {"hash", out.restricted.matrix.hash()},
                   {"corner_anchors", out.scheme.corner_anchors}};
    r["certificate"] = {{"full", to_json(out.certificate_full)}, {"restricted", to_json(out.certificate_restricted)}};
    r["solve"] = to_json(out.report);
    r["assembly_seconds"] = out.assembly_seconds;
    r["threads"] = pb.solver.threads;
    r["seed"] = o.seed;
    if (out.errors) r["errors"] = to_json(*out.errors);
    return r;
}

int cmd_solve(const Options& o) {
    const me::ProblemConfig c = load(o);
    me::Outcome out;
    const json r = run_solve(c, o, std::nullopt, out);
    const fs::path dir = out_dir(o, c);
    write_json(dir / "report.json", r);
    std::ofstream f(dir / "solution.csv");
    const int d = c.dim();
    std::vector<std::string> head;
    for (int i = 1; i <= d; ++i) head.push_back("k_" + std::to_string(i));
    for (int i = 1; i <= d; ++i) head.push_back("x_" + std::to_string(i));
    head.push_back("u");
    csv_row(f, head);
    for (const auto& [k, v] : out.solution.values()) {
        std::vector<std::string> row;
        for (auto ki : k) row.push_back(std::to_string(ki));
        for (double x : out.solution.spec().coordinates(k)) row.push_back(me::format_real(x));
        row.push_back(me::format_real(v));
        csv_row(f, row);
    }
    std::cout << r["solve"].dump() << '\n';
    if (r.contains("errors")) std::cout << r["errors"].dump() << '\n';
    if (!out.report.converged) {
        log(LogLevel::error, "iteration limit reached before tolerance");
        return kNotConverged;
    }
    return kOk;
}

int cmd_convergence(const Options& o) {
    const me::ProblemConfig c = load(o);
    std::vector<int> levels = o.levels.empty() ? c.levels : o.levels;
    if (levels.empty()) levels = {c.level};
    const fs::path dir = out_dir(o, c);
    std::ofstream f(dir / "convergence.csv");
    csv_row(f, {"level", "h", "eps1", "epsInf", "iterations", "runtime", "status"});
    json rows = json::array();
    bool all_converged = true;
    for (int n : levels) {
        const double h = std::ldexp(1.0, -n);
        try {
            me::Outcome out;
            const json r = run_solve(c, o, n, out);
            const double e1 = out.errors ? out.errors->eps1 : std::nan("");
            const double ei = out.errors ? out.errors->eps_inf : std::nan("");
            const double rt = out.assembly_seconds + out.report.seconds;
            all_converged = all_converged && out.report.converged;
            csv_row(f, {std::to_string(n), me::format_real(h), me::format_real(e1), me::format_real(ei),
                        std::to_string(out.report.iterations), me::format_real(rt),
                        out.report.converged ? "ok" : "not_converged"});
            rows.push_back(r);
        } catch (const std::exception& e) {
            log(LogLevel::error, "level " + std::to_string(n) + ": " + e.what());
            csv_row(f, {std::to_string(n), me::format_real(h), "", "", "", "", std::string("error: ") + e.what()});
            rows.push_back({{"level", n}, {"error", e.what()}});
            all_converged = false;
        }
        f.flush();
    }
    write_json(dir / "convergence.json", rows);
    std::ifstream back(dir / "convergence.csv");
    std::cout << back.rdbuf();
    return all_converged ? kOk : kNotConverged;
}

int cmd_export_matrix(const Options& o) {
    const me::ProblemConfig c = load(o);
    const me::Problem pb = me::build_problem(c, std::nullopt, resolved_threads(o.threads));
    me::AssemblyOptions ao;
    ao.variant = pb.variant;
    const me::SchemeMatrix s = me::assemble(pb.field, pb.grid(), pb.domain, ao);
    const me::RestrictedMatrix r = me::restrict_dirichlet(s);
    const auto cert = me::verify_compartmental(r.matrix, true);
    if (!cert.compartmental) {
        std::cerr << to_json(cert).dump(2) << '\n';
        return kInadmissible;
    }
    const fs::path dir = out_dir(o, c);
    {
        std::ofstream f(dir / "matrix.mtx");
        me::write_matrix_market(f, r.matrix);
    }
    {
        std::ofstream f(dir / "index_map.csv");
        me::write_index_map(f, r.matrix.knots(), c.dim());
    }
    std::cout << r.matrix.order() << ' ' << r.matrix.nonzeros() << ' ' << r.matrix.hash() << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monotone compartmental discretization of divergence-form elliptic problems"};
    app.require_subcommand(1);
    Options o;
    int level = -1;
    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "problem configuration (JSON)")->required();
        sub->add_option("--level", level, "grid level n, h = 2^-n (overrides the config)");
        sub->add_option("--threads", o.threads, "worker threads, 0 = machine parallelism");
        sub->add_option("--seed", o.seed, "seed recorded in reports");
        sub->add_option("--out", o.out, "output directory (overrides the config)");
        sub->add_option("--dump-normalized-config", o.dump, "write the normalized config to this path");
    };
    auto* check = app.add_subcommand("check", "admissibility of the coefficient field and strides");
    auto* solve = app.add_subcommand("solve", "assemble, verify and solve the Dirichlet problem");
    auto* conv = app.add_subcommand("convergence", "solve over several levels and tabulate errors");
    auto* exp = app.add_subcommand("export-matrix", "write the restricted matrix as MatrixMarket");
    for (auto* s : {check, solve, conv, exp}) common(s);
    conv->add_option("--levels", o.levels, "levels to run");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kParse;
    }
    if (level >= 0) o.level = level;

    try {
        if (*check) return cmd_check(o);
        if (*solve) return cmd_solve(o);
        if (*conv) return cmd_convergence(o);
        return cmd_export_matrix(o);
    } catch (const me::ParseError& e) {
        log(LogLevel::error, std::string("parse error at ") + e.what());
        return kParse;
    } catch (const me::ConfigurationError& e) {
        log(LogLevel::error, e.what());
        return kInadmissible;
    } catch (const me::AssemblyError& e) {
        log(LogLevel::error, e.what());
        return kInadmissible;
    } catch (const me::ParameterError& e) {
        log(LogLevel::error, e.what());
        return kParse;
    } catch (const me::DomainError& e) {
        log(LogLevel::error, e.what());
        return kParse;
    } catch (const std::exception& e) {
        log(LogLevel::error, e.what());
        return kInadmissible;
    }
}
