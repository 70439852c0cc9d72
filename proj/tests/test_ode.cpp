#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "blowup/ode.hpp"

using namespace blowup;

namespace {

const Field cubic = [](double, double z) { return z * z * z; };
const double rt2 = std::sqrt(2.0);

// Exact blowing-up family for z'' = z^3: z(t) = sqrt(2)/(rho - t), rho <= 0.

double sup_rel_err_vs_exact(const OdeSolution& sol, double t_hi) {
    double worst = 0.0;
    for (std::size_t i = 0; i < sol.t.size(); ++i) {
        if (sol.t[i] > t_hi) break;
        const double exact = rt2 / (-sol.t[i]);
        worst = std::max(worst, std::fabs(sol.z[i] - exact) / exact);
    }
    return worst;
}

}  // namespace

TEST_CASE("free motion is integrated exactly") {
    const Field zero = [](double, double) { return 0.0; };
    OdeSolution sol = integrate_ivp(zero, -1.0, 1.0, 2.0, -0.5);
    CHECK(sol.classification == OdeClass::ReachedEnd);
    CHECK(sol.z.back() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("cubic field reproduces the exact blow-up trajectory") {
    OdeSolution sol = integrate_ivp(cubic, -1.0, rt2, rt2, 0.0);
    CHECK(sol.classification == OdeClass::BlowUpAt);
    REQUIRE(sol.blowup.has_value());
    CHECK(std::fabs(sol.blowup->t_star) < 1e-4);
    CHECK(sup_rel_err_vs_exact(sol, -1e-3) < 1e-6);
}

TEST_CASE("small data stays bounded") {
    OdeSolution sol = integrate_ivp(cubic, -1.0, 0.1, 0.0, -0.01);
    CHECK(sol.classification == OdeClass::ReachedEnd);
    CHECK(sol.z.back() < 1.0);
}

TEST_CASE("convexity: z' nondecreasing when F >= 0") {
    IvpControl ctrl;
    for (double slope : {0.0, 1.0, 3.0}) {
        OdeSolution sol = integrate_ivp(cubic, -1.0, 1.0, slope, 0.0, ctrl);
        for (std::size_t i = 1; i < sol.zp.size(); ++i)
            CHECK(sol.zp[i] >= sol.zp[i - 1] - 10.0 * ctrl.tol);
    }
}

TEST_CASE("blow-up time strictly decreasing in initial slope") {
    double prev = 0.0;
    bool first = true;
    for (double slope : {1.0, 2.0, 4.0}) {
        OdeSolution sol = integrate_ivp(cubic, -1.0, 2.0, slope, 0.0);
        REQUIRE(sol.classification == OdeClass::BlowUpAt);
        REQUIRE(sol.blowup.has_value());
        if (!first) CHECK(sol.blowup->t_star < prev);
        prev = sol.blowup->t_star;
        first = false;
    }
}

TEST_CASE("halving the tolerance improves accuracy by >= 2x") {
    auto err_at = [&](double tol) {
        IvpControl ctrl;
        ctrl.tol = tol;
        OdeSolution sol = integrate_ivp(cubic, -1.0, rt2, rt2, -0.01, ctrl);
        return sup_rel_err_vs_exact(sol, -0.01);
    };
    const double coarse = err_at(2e-6);
    const double fine = err_at(1e-6);
    CHECK(fine * 2.0 <= coarse);
}

TEST_CASE("Dirichlet problem with closed-form solutions") {
    const Field two = [](double, double) { return 2.0; };
    OdeSolution sol = solve_dirichlet_bvp(two, -2.0, -1.0, 0.0);
    // z = (t+2)(t+1): value at the midpoint is -1/4.
    double mid = 0.0;
    double best = 1e300;
    for (std::size_t i = 0; i < sol.t.size(); ++i)
        if (std::fabs(sol.t[i] + 1.5) < best) {
            best = std::fabs(sol.t[i] + 1.5);
            mid = sol.z[i];
        }
    CHECK(std::fabs(mid - (-0.25)) < 1e-9);

    const Field zero = [](double, double) { return 0.0; };
    OdeSolution flat = solve_dirichlet_bvp(zero, -2.0, -1.0, 3.0);
    for (double z : flat.z) CHECK(z == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("Dirichlet problem flags interior blow-up") {
    const Field stiff = [](double, double z) { return 1e6 * z * z * z; };
    CHECK_THROWS_AS(solve_dirichlet_bvp(stiff, -2.0, -1.0, 10.0), NoConvergence);
}

TEST_CASE("extension past the right endpoint follows the trichotomy") {
    OdeSolution bvp = solve_dirichlet_bvp(cubic, -2.0, -1.0, 2.0);
    auto [t2, ext] = find_blowup_extension(cubic, bvp);
    CHECK(ext.classification == OdeClass::BlowUpAt);
    CHECK(t2 > -1.0);
    CHECK(t2 < 0.0);

    const Field zero = [](double, double) { return 0.0; };
    OdeSolution flat = solve_dirichlet_bvp(zero, -2.0, -1.0, 1.0);
    auto [t2f, extf] = find_blowup_extension(zero, flat);
    CHECK(extf.classification == OdeClass::BoundedAtZero);
    CHECK(extf.z.back() == doctest::Approx(1.0).epsilon(1e-8));

    const Field mild = [](double t, double z) { return (-t) * z; };
    OdeSolution small = solve_dirichlet_bvp(mild, -2.0, -1.0, 0.5);
    auto [t2m, extm] = find_blowup_extension(mild, small);
    CHECK(extm.classification == OdeClass::BoundedAtZero);
}

TEST_CASE("shooting recovers the exact slope") {
    ShootingResult res = shoot_blowup_at(cubic, -1.0, 2.0 * rt2, -0.5);
    CHECK(std::fabs(res.slope - 4.0 * rt2) < 1e-4);
    CHECK(std::fabs(res.achieved_rho - (-0.5)) < 1e-6);
    CHECK(res.bracket.first <= res.slope);
    CHECK(res.slope <= res.bracket.second);
    CHECK_THROWS_AS(shoot_blowup_at(cubic, -1.0, 1.0, 0.5), Precondition);
}

TEST_CASE("minimal large solution of the cubic field") {
    OdeSolution sol = minimal_large_solution(cubic, -1.0, rt2);
    const double m_star = sol.zp.front();
    CHECK(std::fabs(m_star - rt2) < 1e-4);
    CHECK(sol.classification == OdeClass::BlowUpAt);
    CHECK(sup_rel_err_vs_exact(sol, -1e-2) < 1e-5);

    // Bracket re-check around the critical slope.
    OdeSolution below = integrate_ivp(cubic, -1.0, rt2, m_star - 0.1, 0.0);
    CHECK(below.classification == OdeClass::BoundedAtZero);
    OdeSolution above = integrate_ivp(cubic, -1.0, rt2, m_star + 0.1, 0.0);
    CHECK(above.classification == OdeClass::BlowUpAt);
    CHECK(above.blowup->t_star < 0.0);
}

TEST_CASE("minimal large solution reports divergence of t^-4 fields") {
    // Transformed field of f = s^3 in three dimensions: every slope blows up
    // before t reaches zero, so no minimal large solution exists.
    const Field quartic = [](double t, double z) { return z * z * z / (t * t * t * t); };
    CHECK_THROWS_AS(minimal_large_solution(quartic, -1.0, rt2), BracketFailure);
}

TEST_CASE("bounded and blowing sequence ladders") {
    SequencePair seq = build_sequences(cubic, -1.0, 1.0, 4.0, 3);
    REQUIRE(seq.rho.size() == 3);
    CHECK(seq.rho[0] == doctest::Approx(-0.5));
    CHECK(seq.rho[1] == doctest::Approx(-0.25));
    CHECK(seq.rho[2] == doctest::Approx(-0.125));
    for (std::size_t k = 1; k < seq.rho.size(); ++k) CHECK(seq.rho[k] > seq.rho[k - 1]);
    CHECK(seq.orderings_ok);
    for (std::size_t k = 1; k < seq.bounded_slopes.size(); ++k)
        CHECK(seq.bounded_slopes[k] > seq.bounded_slopes[k - 1]);
    CHECK_THROWS_AS(build_sequences(cubic, -1.0, 1.0, 4.0, 0), Precondition);
}

TEST_CASE("large-solution gap shrinks toward the singularity") {
    OdeSolution a = minimal_large_solution(cubic, -1.0, rt2);
    OdeSolution b = minimal_large_solution(cubic, -1.0, 2.0 * rt2);
    MonotoneCubic interp(b.t, b.z);
    double prev_gap = 1e300;
    bool decreasing = true;
    double gap_at_end = 0.0;
    for (double x = -1e-2; x >= -1.0001e-3; x -= 1e-3) {
        std::size_t i = 0;
        while (i + 1 < a.t.size() && a.t[i + 1] <= x) ++i;
        // sample both trajectories at a grid point of a
        const double ta = a.t[i];
        if (ta < interp.x_min() || ta > interp.x_max()) continue;
        const double gap = std::fabs(a.z[i] - interp(ta));
        if (gap > prev_gap * (1.0 + 1e-9)) decreasing = false;
        prev_gap = gap;
        gap_at_end = gap;
    }
    CHECK(decreasing);
    CHECK(gap_at_end < 1e-3);
}
