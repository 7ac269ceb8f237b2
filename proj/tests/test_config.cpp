#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "monotone_elliptic/config.hpp"

using namespace monotone_elliptic;

namespace {

std::string slurp(const std::string& name) {
    std::ifstream in(std::string(CONFIG_DIR) + "/" + name);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string field_of(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ParseError& e) {
        return e.field();
    }
    return "<none>";
}

}  // namespace

TEST(Config, ShippedConfigsParse) {
    for (const char* f : {"example71.json", "example72.json", "example72_r13.json", "manufactured.json",
                          "identity.json", "interval.json", "two_regions.json"}) {
        SCOPED_TRACE(f);
        const auto c = parse_config_text(slurp(f));
        EXPECT_NO_THROW(build_problem(c, 3));
    }
}

TEST(Config, Defaults) {
    const auto c = parse_config_text(R"({"schema": "monotone-elliptic/1", "coefficients": {"builtin": "identity"}})");
    EXPECT_EQ(c.level, 4);
    EXPECT_EQ(c.resolved_divisions(), 16);
    EXPECT_EQ(c.scheme, SchemeVariant::extended);
    EXPECT_EQ(c.method, SolverMethod::jacobi);
    EXPECT_DOUBLE_EQ(c.tol, 1e-9);
    EXPECT_EQ(c.initial_guess, InitialGuess::zero);
    EXPECT_EQ(c.boundary, "zero");
}

TEST(Config, NormalizedRoundTrip) {
    for (const char* f : {"example72.json", "identity.json", "interval.json", "two_regions.json"}) {
        SCOPED_TRACE(f);
        const auto a = normalized(parse_config_text(slurp(f)));
        const auto b = normalized(parse_config(a));
        EXPECT_EQ(a, b);
    }
}

TEST(Config, ErrorsNameTheField) {
    const std::string head = R"({"schema": "monotone-elliptic/1", )";
    EXPECT_EQ(field_of("{"), "byte 2");
    EXPECT_EQ(field_of(R"({"coefficients": {"builtin": "identity"}})"), "/schema");
    EXPECT_EQ(field_of(R"({"schema": "other/2", "coefficients": {}})"), "/schema");
    EXPECT_EQ(field_of(head + R"("coefficients": {"builtin": "identity"}, "bogus": 1})"), "/bogus");
    EXPECT_EQ(field_of(head + R"("coefficients": {"builtin": "nope"}})"), "/coefficients/builtin");
    EXPECT_EQ(field_of(head + R"("level": "x", "coefficients": {"builtin": "identity"}})"), "/level");
    EXPECT_EQ(field_of(head + R"("coefficients": {"builtin": "identity"}, "solver": {"tol": 0}})"), "/solver/tol");
    EXPECT_EQ(field_of(head + R"("coefficients": {"builtin": "identity"}, "boundary": "exact"})"), "/boundary");
    EXPECT_EQ(field_of(head + R"("coefficients": {"regions": [{"tensor": [[1, 0]]}]}})"),
              "/coefficients/regions/0/tensor");
    EXPECT_EQ(field_of(head + R"("coefficients": {"builtin": "identity"},
        "rhs": {"type": "measure", "components": [{"kind": "blob"}]}})"),
              "/rhs/components/0/kind");
}

TEST(Config, InlineRegionsBuildField) {
    const auto c = parse_config_text(slurp("two_regions.json"));
    const auto f = build_field(c);
    ASSERT_EQ(f.regions().size(), 2u);
    EXPECT_DOUBLE_EQ(f.evaluate({0.25, 0.5})(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(f.evaluate({0.75, 0.5})(0, 1), -0.5);
    EXPECT_DOUBLE_EQ(f.evaluate({1.0, 1.0})(0, 0), 2.0);
}

TEST(Config, SineSourceMatchesLaplacian) {
    const auto c = parse_config_text(slurp("manufactured.json"));
    const auto mu = build_measure(c);
    ASSERT_EQ(mu.components.size(), 1u);
    const auto& d = std::get<Density>(mu.components[0]);
    EXPECT_NEAR(d.function({0.5, 0.5}), 2 * std::numbers::pi * std::numbers::pi, 1e-12);
}

TEST(Config, LevelOverride) {
    const auto c = parse_config_text(slurp("example72.json"));
    EXPECT_EQ(build_problem(c).divisions, 400);
    EXPECT_EQ(build_problem(c, 5).divisions, 32);
}
