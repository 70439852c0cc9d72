#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "blowup/transform.hpp"

using namespace blowup;

namespace {

ProblemSpec make_spec(int n, const char* h, const char* f) {
    ProblemSpec s;
    s.n = n;
    s.h = Expr::parse(h, {"r"});
    s.f = Expr::parse(f, {"r", "s"});
    return s;
}

}  // namespace

TEST_CASE("growth probe: integrable and non-integrable weights") {
    // n=3, h=0: int_1^inf z^-2 dz = 1.
    auto v = check_growth(make_spec(3, "0", "s"), 1.0);
    CHECK(v.finite);
    CHECK(v.value == doctest::Approx(1.0).epsilon(1e-9));

    // n=2, h=0: harmonic weight, doubling blocks are constant log 2.
    auto w = check_growth(make_spec(2, "0", "s"), 1.0);
    CHECK_FALSE(w.finite);
    REQUIRE(w.evidence.size() >= 2);
    CHECK(w.evidence.back() == doctest::Approx(std::log(2.0)).epsilon(1e-8));

    // n=3, h = -log r: weight reduces to 1/z, the borderline divergent case.
    CHECK_FALSE(check_growth(make_spec(3, "-1*log(r)", "s"), 1.0).finite);
}

TEST_CASE("build_transform closed forms") {
    // n=3, h=0: p(r) = -1/r.
    TransformMap m = build_transform(make_spec(3, "0", "s"), 1.0);
    CHECK(std::fabs(m.eval_p(2.0) - (-0.5)) < 1e-9);

    // n=2, h = 2 log r: weight z^-3, p(1) = -1/2.
    TransformMap m2 = build_transform(make_spec(2, "2*log(r)", "s"), 1.0);
    CHECK(std::fabs(m2.eval_p(1.0) - (-0.5)) < 1e-9);

    CHECK_THROWS_AS(build_transform(make_spec(2, "0", "s"), 1.0), GrowthViolated);
}

TEST_CASE("inverse map and roundtrip") {
    TransformMap m = build_transform(make_spec(3, "0", "s"), 0.5);
    CHECK(std::fabs(m.eval_p_inverse(-0.25) - 4.0) < 1e-8);
    for (int i = 0; i < 50; ++i) {
        const double r = std::exp(std::log(1e5) * i / 49.0);
        const double back = m.eval_p_inverse(m.eval_p(r));
        CHECK(std::fabs(back - r) / r < 1e-9);
    }
    CHECK_THROWS_AS(m.eval_p_inverse(0.1), OutOfRange);
    CHECK_THROWS_AS(m.eval_p_inverse(-3.0), OutOfRange);
    CHECK_THROWS_AS(m.eval_p(0.25), OutOfRange);
}

TEST_CASE("transformed field values") {
    // n=3, h=0: p^{-1}(t) = -1/t, prefactor (p^{-1})^4.
    TransformMap cubic = build_transform(make_spec(3, "0", "s^3"), 1.0);
    CHECK(cubic.eval_F(-0.5, 2.0) == doctest::Approx(128.0).epsilon(1e-8));

    TransformMap decaying = build_transform(make_spec(3, "0", "r^(-3)*s^3"), 1.0);
    CHECK(decaying.eval_F(-0.5, 2.0) == doctest::Approx(16.0).epsilon(1e-8));
    CHECK_THROWS_AS(decaying.eval_F(-0.5, 0.0), Precondition);
}

TEST_CASE("strict monotonicity of p on a fine grid") {
    ProblemSpec damped = make_spec(3, "r/10", "s");
    damped.R_big = 1e3;  // e^{-r/10} underflows long before the default radius
    TransformMap m = build_transform(damped, 1.0);
    // Stay where the weight is representable: e^{-r/10} vanishes in double
    // precision for r beyond ~7000, where p rounds to -0.
    double prev = -1e300;
    for (int i = 0; i < 120; ++i) {
        const double r = std::exp(std::log(500.0) * i / 119.0);
        const double t = m.eval_p(r);
        CHECK(t > prev);
        CHECK(t < 0.0);
        prev = t;
    }
}

TEST_CASE("derivative consistency of p") {
    TransformMap m = build_transform(make_spec(3, "sqrt(r)/5", "s"), 1.0);
    for (int i = 0; i < 20; ++i) {
        const double r = 1.01 + 10.0 * i / 19.0;
        const double d = 1e-4 * r;
        const double fd = (m.eval_p(r + d) - m.eval_p(r - d)) / (2.0 * d);
        const double exact = m.derivative(r);
        CHECK(std::fabs(fd - exact) / exact < 1e-5);
    }
}

TEST_CASE("tail bound beyond the truncation radius") {
    ProblemSpec s = make_spec(3, "0", "s");
    s.R_big = 1e4;
    TransformMap m = build_transform(s, 1.0);
    const double bound = m.tail().integral_from(s.R_big);
    for (double r : {1e4, 3e4, 1e5, 1e6}) CHECK(std::fabs(m.eval_p(r)) <= bound * (1.0 + 1e-9));
}

TEST_CASE("lift to radial coordinates") {
    TransformMap m = build_transform(make_spec(3, "0", "r^(-3)*s^3"), 0.5);
    // Exact pair for this field: z(t) = sqrt(2)/(-t) lifts to u(r) = sqrt(2) r.
    std::vector<double> t, z;
    for (int i = 0; i < 30; ++i) {
        t.push_back(-1.0 + 0.9 * i / 29.0);
        z.push_back(std::sqrt(2.0) / (-t.back()));
    }
    RadialProfile prof = lift_to_radial(m, t, z);
    for (std::size_t i = 0; i < prof.r.size(); ++i) {
        CHECK(prof.u[i] == doctest::Approx(std::sqrt(2.0) * prof.r[i]).epsilon(1e-8));
        if (i) CHECK(prof.r[i] > prof.r[i - 1]);
    }
    CHECK_THROWS_AS(lift_to_radial(m, {}, {}), OutOfRange);
}
