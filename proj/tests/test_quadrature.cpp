#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "blowup/pchip.hpp"
#include "blowup/quadrature.hpp"

using namespace blowup;

TEST_CASE("adaptive quadrature on closed forms") {
    QuadratureOptions opt;
    CHECK(integrate([](double x) { return x * x; }, 0.0, 3.0, opt) ==
          doctest::Approx(9.0).epsilon(1e-12));
    CHECK(integrate([](double x) { return std::exp(-x); }, 0.0, 20.0, opt) ==
          doctest::Approx(1.0 - std::exp(-20.0)).epsilon(1e-12));
    CHECK(integrate([](double x) { return 1.0 / x; }, 1.0, std::exp(1.0), opt) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("block probes classify improper integrals") {
    auto fin = probe_to_infinity([](double x) { return 1.0 / (x * x); }, 1.0, {});
    CHECK(fin.finite);
    CHECK(fin.value == doctest::Approx(1.0).epsilon(1e-9));

    auto div = probe_to_infinity([](double x) { return 1.0 / x; }, 1.0, {});
    CHECK_FALSE(div.finite);

    auto zfin = probe_to_zero([](double x) { return -x; }, -1.0, {});
    CHECK(zfin.finite);
    CHECK(zfin.value == doctest::Approx(0.5).epsilon(1e-9));

    auto zdiv = probe_to_zero([](double x) { return 1.0 / (-x); }, -1.0, {});
    CHECK_FALSE(zdiv.finite);
}

TEST_CASE("tail models recover exponents") {
    TailModel p = fit_tail([](double x) { return 3.0 / (x * x * x); }, 100.0);
    REQUIRE(p.kind == TailModel::Kind::PowerLaw);
    CHECK(p.slope == doctest::Approx(-3.0).epsilon(1e-6));
    CHECK(p.integral_from(100.0) == doctest::Approx(1.5e-4).epsilon(1e-6));

    TailModel e = fit_tail([](double x) { return std::exp(-0.5 * x); }, 50.0);
    REQUIRE(e.kind == TailModel::Kind::Exponential);
    CHECK(e.slope == doctest::Approx(-0.5).epsilon(1e-6));
}

TEST_CASE("monotone cubic interpolation") {
    std::vector<double> x, y;
    for (int i = 0; i <= 20; ++i) {
        x.push_back(i * 0.1);
        y.push_back(std::atan(x.back()));  // monotone, curved
    }
    MonotoneCubic interp(x, y);
    // Shape preservation: interpolant is monotone between knots.
    double prev = interp(0.0);
    for (int i = 1; i <= 400; ++i) {
        const double v = interp(i * 2.0 / 400.0);
        CHECK(v >= prev - 1e-14);
        prev = v;
    }
    // Accuracy on the smooth target.
    for (double q : {0.05, 0.77, 1.23, 1.91})
        CHECK(interp(q) == doctest::Approx(std::atan(q)).epsilon(1e-4));
    CHECK_THROWS_AS(interp(-0.1), OutOfRange);
    CHECK_THROWS_AS(interp(2.1), OutOfRange);
}
