#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "blowup/expr.hpp"

using namespace blowup;

namespace {
double eval_rs(const Expr& e, double r, double s) {
    const double v[2] = {r, s};
    return e.eval(std::span<const double>(v, 2));
}
double eval_r(const Expr& e, double r) {
    const double v[1] = {r};
    return e.eval(std::span<const double>(v, 1));
}
}  // namespace

TEST_CASE("parse and evaluate basic expressions") {
    CHECK(eval_rs(Expr::parse("s^3 / r^2", {"r", "s"}), 2.0, 2.0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(eval_r(Expr::parse("-1*log(r)", {"r"}), std::exp(1.0)) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(eval_rs(Expr::parse("r^(-3) * s^3", {"r", "s"}), 2.0, 2.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(Expr::parse("exp(0)", {}).eval(std::span<const double>{}) == 1.0);
    CHECK(eval_r(Expr::parse("pi", {"r"}), 0.0) == doctest::Approx(std::acos(-1.0)));
}

TEST_CASE("precedence and associativity") {
    // ^ binds tighter than unary minus and is right-associative.
    CHECK(eval_r(Expr::parse("-2^2", {"r"}), 0.0) == -4.0);
    CHECK(eval_r(Expr::parse("2^3^2", {"r"}), 0.0) == 512.0);
    CHECK(eval_r(Expr::parse("2 - 3 - 4", {"r"}), 0.0) == -5.0);
    CHECK(eval_r(Expr::parse("12 / 3 / 2", {"r"}), 0.0) == 2.0);
    CHECK(eval_r(Expr::parse("1 + 2*3", {"r"}), 0.0) == 7.0);
}

TEST_CASE("parse errors") {
    CHECK_THROWS_AS(Expr::parse("s + q", {"r", "s"}), UnknownVariable);
    CHECK_THROWS_AS(Expr::parse("", {"r"}), SyntaxError);
    CHECK_THROWS_AS(Expr::parse("2r", {"r"}), SyntaxError);  // no implicit multiplication
    CHECK_THROWS_AS(Expr::parse("(1+2", {"r"}), SyntaxError);
    CHECK_THROWS_AS(Expr::parse("foo(1)", {"r"}), SyntaxError);
}

TEST_CASE("evaluation domain errors") {
    CHECK_THROWS_AS(eval_r(Expr::parse("log(r)", {"r"}), 0.0), DomainError);
    CHECK_THROWS_AS(eval_r(Expr::parse("sqrt(r)", {"r"}), -1.0), DomainError);
    CHECK_THROWS_AS(eval_r(Expr::parse("1/r", {"r"}), 0.0), DomainError);
    CHECK_THROWS_AS(eval_r(Expr::parse("r^(-1)", {"r"}), 0.0), DomainError);
    CHECK_THROWS_AS(eval_r(Expr::parse("(-2)^(1/2)", {"r"}), 0.0), DomainError);
}

TEST_CASE("map-based evaluation and missing bindings") {
    Expr e = Expr::parse("r + s", {"r", "s"});
    CHECK(e.eval({{"r", 1.0}, {"s", 2.0}}) == 3.0);
    CHECK_THROWS_AS(e.eval({{"r", 1.0}}), MissingBinding);
    // Unused declared variables need no binding.
    Expr f = Expr::parse("r", {"r", "s"});
    CHECK(f.eval({{"r", 5.0}}) == 5.0);
}

TEST_CASE("derivative estimates") {
    Expr sq = Expr::parse("s^2", {"s"});
    CHECK(derivative_estimate(sq, "s", {{"s", 3.0}}, 1e-5) == doctest::Approx(6.0).epsilon(1e-8));
    Expr lg = Expr::parse("log(r)", {"r"});
    CHECK(derivative_estimate(lg, "r", {{"r", 2.0}}, 1e-5) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK_THROWS_AS(derivative_estimate(lg, "r", {{"r", 5e-6}}, 1e-5), DomainError);
}

TEST_CASE("polynomial derivative estimates match symbolic values") {
    // Degree <= 3: central differences carry only the O(step^2) term.
    const double step = 1e-4;
    struct Case { const char* text; double x; double exact; };
    const Case cases[] = {
        {"1 + r", 0.7, 1.0},
        {"r^2 - 3*r", 1.3, 2.0 * 1.3 - 3.0},
        {"2*r^3 + r", 0.9, 6.0 * 0.9 * 0.9 + 1.0},
        {"r^3 - r^2 + 4", -1.1, 3.0 * 1.21 + 2.2},
    };
    for (const Case& c : cases) {
        Expr e = Expr::parse(c.text, {"r"});
        const double est = derivative_estimate(e, "r", {{"r", c.x}}, step);
        CHECK(std::fabs(est - c.exact) <= 10.0 * step * step);
    }
}

TEST_CASE("parse-print-parse roundtrip preserves evaluation") {
    const char* sources[] = {
        "s^3 / r^2",
        "-1*log(r)",
        "r^(-3) * s^3 + 1",
        "exp(-r) * (s + 2)^2",
        "abs(sin(r) - cos(s)) + sqrt(r + 10)",
        "-(r - s)^3 / (1 + r^2)",
        "2^r^2",
    };
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> dist(0.1, 4.0);
    for (const char* src : sources) {
        Expr a = Expr::parse(src, {"r", "s"});
        Expr b = Expr::parse(a.to_string(), {"r", "s"});
        for (int i = 0; i < 100; ++i) {
            const double r = dist(rng), s = dist(rng);
            CHECK(eval_rs(a, r, s) == eval_rs(b, r, s));  // bit-identical
        }
    }
}
