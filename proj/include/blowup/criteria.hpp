#pragma once

// Numerical audit of the standing hypotheses and sharp conditions: positivity
// (c1), superlinearity (c2), monotonicity of p(r)e^{h(r)}g(r,s) (c3), the
// existence criterion -int_{t0}^0 t F(t,s) dt < inf, and the integral identity
// linking its two forms.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "blowup/errors.hpp"
#include "blowup/expr.hpp"
#include "blowup/io.hpp"
#include "blowup/problem.hpp"
#include "blowup/quadrature.hpp"
#include "blowup/transform.hpp"

namespace blowup {

// Perimeter of the unit ball in R^n.
inline double sigma_n(int n) {
    if (n < 2) throw Precondition("sigma_n requires n >= 2");
    return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n);
}

struct Region {
    double r_lo, s_lo, r_hi, s_hi;
};

struct C2Verdict {
    bool pass = false;
    double lambda_hat = 0.0;
    double witness_r = 0.0, witness_s = 0.0, witness_v = 0.0;  // location of the infimum
};

struct C3Verdict {
    enum class Kind { Increasing, Decreasing, Fail } kind = Kind::Fail;
    // witness pair for Fail: sign change of the finite difference in r at fixed s
    double witness_r1 = 0.0, witness_r2 = 0.0, witness_s = 0.0;
};

struct ExistenceVerdict {
    double s = 0.0;
    bool finite = false;
    double value = 0.0;
    std::vector<double> evidence;  // halving-block integrals
};

struct PositivityVerdict {
    bool pass = true;
    double witness_r = 0.0, witness_s = 0.0, witness_value = 0.0;
};

enum class Verdict { ExistsRadial, NoSolutionExpected, Inconclusive };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::ExistsRadial: return "ExistsRadial";
        case Verdict::NoSolutionExpected: return "NoSolutionExpected";
        case Verdict::Inconclusive: return "Inconclusive";
    }
    return "?";
}

inline const char* to_string(C3Verdict::Kind k) {
    switch (k) {
        case C3Verdict::Kind::Increasing: return "increasing";
        case C3Verdict::Kind::Decreasing: return "decreasing";
        case C3Verdict::Kind::Fail: return "fail";
    }
    return "?";
}

namespace detail {

inline std::vector<double> geometric_grid(double lo, double hi, int n) {
    std::vector<double> g(static_cast<std::size_t>(n));
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < n; ++i)
        g[static_cast<std::size_t>(i)] = std::exp(llo + (lhi - llo) * i / (n - 1));
    g.front() = lo;
    g.back() = hi;
    return g;
}

}  // namespace detail

// Core superlinearity check over an arbitrary positive sampler fn(r, s):
// lambda_hat = inf over the grid and v in {2,4,8} of log(fn(r,vs)/fn(r,s))/log v.
inline C2Verdict check_superlinearity_fn(const std::function<double(double, double)>& fn,
                                         const Region& region, int grid) {
    if (grid < 2) throw Precondition("superlinearity check needs grid >= 2");
    const auto rs = detail::geometric_grid(region.r_lo, region.r_hi, grid);
    const auto ss = detail::geometric_grid(region.s_lo, region.s_hi, grid);
    C2Verdict v;
    v.lambda_hat = std::numeric_limits<double>::infinity();
    for (double r : rs) {
        for (double s : ss) {
            const double base = fn(r, s);
            if (!(base > 0.0))
                throw NonPositiveSample("non-positive sample at r=" + format_double(r) +
                                        ", s=" + format_double(s));
            for (double mult : {2.0, 4.0, 8.0}) {
                const double scaled = fn(r, mult * s);
                if (!(scaled > 0.0))
                    throw NonPositiveSample("non-positive sample at r=" + format_double(r) +
                                            ", s=" + format_double(mult * s));
                const double lam = std::log(scaled / base) / std::log(mult);
                if (lam < v.lambda_hat) {
                    v.lambda_hat = lam;
                    v.witness_r = r;
                    v.witness_s = s;
                    v.witness_v = mult;
                }
            }
        }
    }
    v.pass = v.lambda_hat > 1.0 + 1e-6;
    return v;
}

inline C2Verdict check_superlinearity(const Expr& expr, const Region& region, int grid) {
    return check_superlinearity_fn(
        [&](double r, double s) {
            const double vals[2] = {r, s};
            return expr.eval(std::span<const double>(vals, 2));
        },
        region, grid);
}

// Core directional check: q sampled along an abscissa grid for each s; returns
// increasing/decreasing only when the finite differences have uniform sign at
// every sampled s (differences below 1e-12 * local scale are ignored).
inline C3Verdict check_monotone_fn(const std::function<double(double, double)>& q,
                                   const std::vector<double>& abscissae,
                                   const std::vector<double>& ss) {
    int overall = 0;  // +1 increasing, -1 decreasing
    C3Verdict v;
    for (double s : ss) {
        for (std::size_t i = 0; i + 1 < abscissae.size(); ++i) {
            const double q0 = q(abscissae[i], s);
            const double q1 = q(abscissae[i + 1], s);
            const double diff = q1 - q0;
            const double scale = std::max(std::fabs(q0), std::fabs(q1));
            if (std::fabs(diff) <= 1e-12 * scale) continue;
            const int sign = diff > 0.0 ? 1 : -1;
            if (overall == 0) overall = sign;
            if (sign != overall) {
                v.kind = C3Verdict::Kind::Fail;
                v.witness_r1 = abscissae[i];
                v.witness_r2 = abscissae[i + 1];
                v.witness_s = s;
                return v;
            }
        }
    }
    v.kind = (overall >= 0) ? C3Verdict::Kind::Increasing : C3Verdict::Kind::Decreasing;
    return v;
}

// Condition (c3): monotonicity in r of q(r,s) = p(r) e^{h(r)} expr(r,s).
inline C3Verdict check_c3_monotonicity(const ProblemSpec& spec, const TransformMap& map,
                                       const Expr& expr, const Region& region, int grid) {
    if (grid < 2) throw Precondition("monotonicity check needs grid >= 2");
    const auto rs = detail::geometric_grid(region.r_lo, region.r_hi, grid);
    const auto ss = detail::geometric_grid(region.s_lo, region.s_hi, grid);
    auto q = [&](double r, double s) {
        const double vals[2] = {r, s};
        const double e = expr.eval(std::span<const double>(vals, 2));
        return map.eval_p(r) * std::exp(spec.eval_h(r)) * e;
    };
    return check_monotone_fn(q, rs, ss);
}

// Existence criterion -int_{t0}^0 t F(t,s) dt, probed with halving blocks
// toward 0 (epsilon = 2^{-k} |t0|, k <= 40).
inline ExistenceVerdict existence_criterion_at(const TransformMap& map, double s, double t0) {
    // Allow t0 to sit on the numerical boundary of the table (p(r_min) carries
    // quadrature error of order quad_tol).
    const double slack = 1e-6 * std::fabs(map.t_min());
    if (!(t0 < 0.0) || !(t0 >= map.t_min() - slack))
        throw Precondition("existence_criterion: t0 outside the transform range");
    t0 = std::max(t0, map.t_min());
    if (!(s > 0.0)) throw Precondition("existence_criterion requires s > 0");
    BlockOptions opt;
    opt.rel_tol = map.quad_tol();
    opt.panel.rel_tol = map.quad_tol() * 1e-2;
    opt.max_blocks = 40;
    BlockVerdict bv = probe_to_zero([&](double t) { return -t * map.eval_F(t, s); }, t0, opt);
    ExistenceVerdict v;
    v.s = s;
    v.finite = bv.finite;
    v.value = bv.value;
    v.evidence = std::move(bv.blocks);
    return v;
}

inline std::vector<ExistenceVerdict> existence_criterion(const TransformMap& map,
                                                         const std::vector<double>& s_values,
                                                         double t0) {
    std::vector<ExistenceVerdict> out;
    out.reserve(s_values.size());
    for (double s : s_values) out.push_back(existence_criterion_at(map, s, t0));
    return out;
}

// Relative residual between the two integral forms:
//   LHS = -sigma_n int_R^inf r^{n-1} p(r) e^{h(r)} f(r,s) dr
//   RHS = -sigma_n int_{p(R)}^0 t F(t,s) dt.
inline double klk_identity_residual(const ProblemSpec& spec, const TransformMap& map,
                                    double R, double s) {
    if (!(R >= map.r_min())) throw Precondition("klk residual: R below r_min");
    const double sn = sigma_n(spec.n);
    BlockOptions opt;
    opt.rel_tol = spec.quad_tol;
    opt.panel.rel_tol = spec.quad_tol * 1e-2;
    BlockVerdict lhs_probe = probe_to_infinity(
        [&](double r) {
            return std::exp((spec.n - 1.0) * std::log(r) + spec.eval_h(r)) * map.eval_p(r) *
                   spec.eval_f(r, s);
        },
        R, opt);
    if (!lhs_probe.finite)
        throw DivergentSide("klk identity: the radial-form integral does not converge");
    opt.max_blocks = 40;
    BlockVerdict rhs_probe =
        probe_to_zero([&](double t) { return -t * map.eval_F(t, s); }, map.eval_p(R), opt);
    if (!rhs_probe.finite)
        throw DivergentSide("klk identity: the transformed-form integral does not converge");
    const double lhs = -sn * lhs_probe.value;
    const double rhs = sn * rhs_probe.value;
    return std::fabs(lhs - rhs) / std::max(std::fabs(lhs), std::fabs(rhs));
}

struct CriterionReport {
    GrowthVerdict growth;
    bool growth_finite = false;
    PositivityVerdict c1;
    C2Verdict c2;
    C3Verdict c3;
    std::vector<ExistenceVerdict> existence;
    std::optional<double> klk_residual;   // absent when a side diverges
    std::optional<double> s_hat;          // smallest tested s with a finite criterion
    std::optional<PositivityVerdict> f_dominates_half_g;  // f >= g/2 when g supplied
    std::optional<C2Verdict> F_superlinear;
    std::optional<C2Verdict> Fz_superlinear;
    std::optional<C3Verdict> F_t_monotone;
    Verdict verdict = Verdict::Inconclusive;
};

namespace detail {

inline PositivityVerdict check_positive(const std::function<double(double, double)>& fn,
                                        const Region& region, int grid) {
    PositivityVerdict v;
    for (double r : geometric_grid(region.r_lo, region.r_hi, grid)) {
        for (double s : geometric_grid(region.s_lo, region.s_hi, grid)) {
            const double val = fn(r, s);
            if (!(val > 0.0)) {
                v.pass = false;
                v.witness_r = r;
                v.witness_s = s;
                v.witness_value = val;
                return v;
            }
        }
    }
    return v;
}

}  // namespace detail

inline CriterionReport assemble_report(const ProblemSpec& spec) {
    spec.validate();
    CriterionReport rep;
    const Region region{spec.r0, spec.s0, 8.0 * spec.r0, 8.0 * spec.s0};
    const int grid = 16;

    const Expr& cmp = spec.g ? *spec.g : spec.f;
    auto cmp_fn = [&](double r, double s) {
        const double vals[2] = {r, s};
        return cmp.eval(std::span<const double>(vals, 2));
    };
    rep.c1 = detail::check_positive(cmp_fn, region, grid);
    if (rep.c1.pass) {
        rep.c2 = check_superlinearity(cmp, region, grid);
    }
    if (spec.g) {
        rep.f_dominates_half_g = detail::check_positive(
            [&](double r, double s) { return spec.eval_f(r, s) - 0.5 * spec.eval_g(r, s); },
            region, grid);
    }

    rep.growth = check_growth(spec, spec.r0);
    rep.growth_finite = rep.growth.finite;
    if (!rep.growth.finite) {
        rep.verdict = Verdict::NoSolutionExpected;
        return rep;
    }

    const TransformMap map = build_transform(spec, spec.r0);
    rep.c3 = check_c3_monotonicity(spec, map, cmp, region, grid);

    const double t0 = map.t_min();
    rep.existence = existence_criterion(map, {2.0 * spec.s0, 4.0 * spec.s0, 8.0 * spec.s0}, t0);
    bool all_finite = true, all_divergent = true;
    for (const ExistenceVerdict& e : rep.existence) {
        all_finite = all_finite && e.finite;
        all_divergent = all_divergent && !e.finite;
        if (e.finite && (!rep.s_hat || e.s < *rep.s_hat)) rep.s_hat = e.s;
    }

    try {
        rep.klk_residual = klk_identity_residual(spec, map, 2.0 * spec.r0, 2.0 * spec.s0);
    } catch (const DivergentSide&) {}

    // Hypotheses of the ODE-side lemmas, reported as their own line items: the
    // transformed field's superlinearity in z (both F and F_z readings) and its
    // monotonicity in t.
    const Region far{spec.r0 * 1.5, spec.s0, 8.0 * spec.r0, 8.0 * spec.s0};
    try {
        rep.F_superlinear = check_superlinearity_fn(
            [&](double r, double z) { return map.eval_F(map.eval_p(r), z); }, far, grid);
    } catch (const Error&) {}
    try {
        rep.Fz_superlinear = check_superlinearity_fn(
            [&](double r, double z) {
                const double t = map.eval_p(r);
                const double step = 1e-6 * std::max(1.0, z);
                return (map.eval_F(t, z + step) - map.eval_F(t, z - step)) / (2.0 * step);
            },
            far, grid);
    } catch (const Error&) {}
    try {
        std::vector<double> ts;
        for (double r : detail::geometric_grid(far.r_lo, far.r_hi, grid)) ts.push_back(map.eval_p(r));
        rep.F_t_monotone = check_monotone_fn([&](double t, double z) { return map.eval_F(t, z); },
                                             ts, detail::geometric_grid(far.s_lo, far.s_hi, grid));
    } catch (const Error&) {}

    if (all_finite && rep.c2.pass && rep.c1.pass)
        rep.verdict = Verdict::ExistsRadial;
    else if (all_divergent)
        rep.verdict = Verdict::NoSolutionExpected;
    else
        rep.verdict = Verdict::Inconclusive;
    return rep;
}

}  // namespace blowup
