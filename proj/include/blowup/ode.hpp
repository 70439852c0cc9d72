#pragma once

// Solvers for z'' = F(t, z) on intervals (t0, t_end) with t_end <= 0:
//  - adaptive embedded Runge-Kutta (Dormand-Prince 5(4)) initial-value runs
//    with blow-up detection and power-law extrapolation of the blow-up time,
//  - the two-point Dirichlet problem via Green's-function Picard iteration
//    with a damped-Newton finite-difference fallback,
//  - continuation past the right boundary until blow-up or 0^-,
//  - shooting on the initial slope for a prescribed blow-up time,
//  - the critical-slope (minimal large) solution,
//  - the approximating sequence ladder {z_k}, {Z_k}.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <string>
#include <vector>

#include "blowup/errors.hpp"
#include "blowup/pchip.hpp"

namespace blowup {

using Field = std::function<double(double, double)>;

enum class OdeClass { ReachedEnd, BoundedAtZero, BlowUpAt };

inline const char* to_string(OdeClass c) {
    switch (c) {
        case OdeClass::ReachedEnd: return "ReachedEnd";
        case OdeClass::BoundedAtZero: return "BoundedAtZero";
        case OdeClass::BlowUpAt: return "BlowUpAt";
    }
    return "?";
}

struct BlowupEstimate {
    double t_star = 0.0;
    double alpha = 0.0;   // local exponent in z ~ C (t*-t)^{-alpha}
    double coeff = 0.0;
};

struct OdeSolution {
    std::vector<double> t, z, zp;
    OdeClass classification = OdeClass::ReachedEnd;
    std::optional<BlowupEstimate> blowup;
    double accuracy = 0.0;
};

struct IvpControl {
    double tol = 1e-10;        // error-per-unit-step tolerance
    double z_max = 1e8;        // blow-up threshold
    double rho_tol = 1e-6;     // blow-up-time matching tolerance
    double slope_tol = 1e-12;  // slope-bracket width for bisections
    long max_steps = 4000000;
    int max_bisect = 200;
    int max_expand = 60;
    double bvp_tol = 1e-10;
    int bvp_grid = 2049;
};

namespace detail {

struct State {
    double z, zp;
};

// Dormand-Prince 5(4) step; returns 5th-order state and embedded error.
template <class F>
void dopri_step(const F& f, double t, const State& y, double h, State& out, State& err) {
    auto rhs = [&](double tt, const State& s) { return State{s.zp, f(tt, s.z)}; };
    const State k1 = rhs(t, y);
    const State k2 = rhs(t + h / 5.0, {y.z + h * (k1.z / 5.0), y.zp + h * (k1.zp / 5.0)});
    const State k3 = rhs(t + 3.0 * h / 10.0,
                         {y.z + h * (3.0 / 40 * k1.z + 9.0 / 40 * k2.z),
                          y.zp + h * (3.0 / 40 * k1.zp + 9.0 / 40 * k2.zp)});
    const State k4 = rhs(t + 4.0 * h / 5.0,
                         {y.z + h * (44.0 / 45 * k1.z - 56.0 / 15 * k2.z + 32.0 / 9 * k3.z),
                          y.zp + h * (44.0 / 45 * k1.zp - 56.0 / 15 * k2.zp + 32.0 / 9 * k3.zp)});
    const State k5 = rhs(t + 8.0 * h / 9.0,
                         {y.z + h * (19372.0 / 6561 * k1.z - 25360.0 / 2187 * k2.z +
                                     64448.0 / 6561 * k3.z - 212.0 / 729 * k4.z),
                          y.zp + h * (19372.0 / 6561 * k1.zp - 25360.0 / 2187 * k2.zp +
                                      64448.0 / 6561 * k3.zp - 212.0 / 729 * k4.zp)});
    const State k6 = rhs(t + h,
                         {y.z + h * (9017.0 / 3168 * k1.z - 355.0 / 33 * k2.z +
                                     46732.0 / 5247 * k3.z + 49.0 / 176 * k4.z -
                                     5103.0 / 18656 * k5.z),
                          y.zp + h * (9017.0 / 3168 * k1.zp - 355.0 / 33 * k2.zp +
                                      46732.0 / 5247 * k3.zp + 49.0 / 176 * k4.zp -
                                      5103.0 / 18656 * k5.zp)});
    out.z = y.z + h * (35.0 / 384 * k1.z + 500.0 / 1113 * k3.z + 125.0 / 192 * k4.z -
                       2187.0 / 6784 * k5.z + 11.0 / 84 * k6.z);
    out.zp = y.zp + h * (35.0 / 384 * k1.zp + 500.0 / 1113 * k3.zp + 125.0 / 192 * k4.zp -
                         2187.0 / 6784 * k5.zp + 11.0 / 84 * k6.zp);
    const State k7 = rhs(t + h, out);
    const double e1 = 35.0 / 384 - 5179.0 / 57600;
    const double e3 = 500.0 / 1113 - 7571.0 / 16695;
    const double e4 = 125.0 / 192 - 393.0 / 640;
    const double e5 = -2187.0 / 6784 + 92097.0 / 339200;
    const double e6 = 11.0 / 84 - 187.0 / 2100;
    const double e7 = -1.0 / 40;
    err.z = h * (e1 * k1.z + e3 * k3.z + e4 * k4.z + e5 * k5.z + e6 * k6.z + e7 * k7.z);
    err.zp = h * (e1 * k1.zp + e3 * k3.zp + e4 * k4.zp + e5 * k5.zp + e6 * k6.zp + e7 * k7.zp);
}

template <class F>
void rk4_step(const F& f, double t, State& y, double h) {
    auto rhs = [&](double tt, const State& s) { return State{s.zp, f(tt, s.z)}; };
    const State k1 = rhs(t, y);
    const State k2 = rhs(t + 0.5 * h, {y.z + 0.5 * h * k1.z, y.zp + 0.5 * h * k1.zp});
    const State k3 = rhs(t + 0.5 * h, {y.z + 0.5 * h * k2.z, y.zp + 0.5 * h * k2.zp});
    const State k4 = rhs(t + h, {y.z + h * k3.z, y.zp + h * k3.zp});
    y.z += h / 6.0 * (k1.z + 2 * k2.z + 2 * k3.z + k4.z);
    y.zp += h / 6.0 * (k1.zp + 2 * k2.zp + 2 * k3.zp + k4.zp);
}

// Self-consistent fit of z ~ C (t*-t)^{-alpha} to the last few grid points,
// anchored by t* = t_last + alpha z/z' at the final point.
inline BlowupEstimate fit_blowup(const std::vector<double>& t, const std::vector<double>& z,
                                 double zp_last, double F_last) {
    const std::size_t n = t.size();
    const double tl = t.back();
    const double zl = z.back();
    double ratio = zl * F_last / (zp_last * zp_last);
    double alpha = (ratio > 1.02) ? 1.0 / (ratio - 1.0) : 1.0;
    alpha = std::clamp(alpha, 0.02, 50.0);
    double t_star = tl + alpha * zl / zp_last;
    const std::size_t k = std::min<std::size_t>(5, n);
    for (int iter = 0; iter < 40; ++iter) {
        // regression of log z on log(t*-t) over the last k points
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        bool ok = true;
        for (std::size_t j = n - k; j < n; ++j) {
            const double d = t_star - t[j];
            if (!(d > 0.0) || !(z[j] > 0.0)) { ok = false; break; }
            const double x = std::log(d);
            const double y = std::log(z[j]);
            sx += x; sy += y; sxx += x * x; sxy += x * y;
        }
        if (!ok || k < 2) break;
        const double denom = k * sxx - sx * sx;
        if (std::fabs(denom) < 1e-30) break;
        const double slope = (k * sxy - sx * sy) / denom;  // -alpha
        double a_new = std::clamp(-slope, 0.02, 50.0);
        const double t_new = tl + a_new * zl / zp_last;
        const bool done = std::fabs(t_new - t_star) <= 1e-6 * std::max(t_new - tl, 1e-300);
        alpha = a_new;
        t_star = t_new;
        if (done) break;
    }
    // Keep the reported blow-up time local to the grid: never further than two
    // final spacings past the last sample (knife-edge trajectories whose fit
    // extrapolates past 0 are blow-ups "at 0" for every practical purpose).
    if (n >= 2) {
        const double spacing = tl - t[n - 2];
        t_star = std::min(t_star, tl + 1.9 * spacing);
    }
    const double d_last = t_star - tl;
    const double coeff = (d_last > 0.0) ? zl * std::pow(d_last, alpha) : zl;
    return BlowupEstimate{t_star, alpha, coeff};
}

}  // namespace detail

inline OdeSolution integrate_ivp(const Field& F, double t0, double z0, double zp0,
                                 double t_end, const IvpControl& ctrl = {}) {
    if (!(t0 < t_end) || !(t_end <= 0.0))
        throw Precondition("integrate_ivp requires t0 < t_end <= 0");

    OdeSolution sol;
    sol.accuracy = ctrl.tol;
    const double span = t_end - t0;
    const double floor_h = 1e-14 * std::fabs(t0);
    const double zero_window = 1e-6 * std::fabs(t0);

    detail::State y{z0, zp0};
    double t = t0;
    sol.t.push_back(t);
    sol.z.push_back(y.z);
    sol.zp.push_back(y.zp);

    auto eval_F = [&](double tt, double zz) {
        const double v = F(tt, zz);
        if (!std::isfinite(v)) throw EvalError("field F returned a non-finite value");
        return v;
    };

    // Geometric march into the singularity once divergence is established;
    // steps halve the estimated remaining distance so the extrapolated t*
    // stays within two final grid spacings of the last sample.
    auto closing_march = [&]() {
        for (int iter = 0; iter < 60; ++iter) {
            double Fv;
            try {
                Fv = eval_F(t, y.z);
            } catch (const Error&) { break; }
            const double ratio = y.z * Fv / (y.zp * y.zp);
            if (!(ratio > 1.02) || !(y.zp > 0.0)) break;
            double alpha = std::clamp(1.0 / (ratio - 1.0), 0.02, 50.0);
            const double d = alpha * y.z / y.zp;
            if (!(d > 0.0) || d < 4.0 * std::numeric_limits<double>::epsilon() * std::fabs(t))
                break;
            if (y.z > 1e3 * ctrl.z_max) break;
            double h = 0.5 * d;
            if (t + h >= 0.0) h = 0.45 * (-t);
            if (!(h > 0.0)) break;
            detail::State trial = y;
            bool ok = true;
            try {
                for (int s = 0; s < 8; ++s) detail::rk4_step(eval_F, t + s * h / 8.0, trial, h / 8.0);
            } catch (const Error&) { ok = false; }
            if (!ok || !std::isfinite(trial.z) || !std::isfinite(trial.zp) || !(trial.z > 0.0))
                break;
            y = trial;
            t += h;
            sol.t.push_back(t);
            sol.z.push_back(y.z);
            sol.zp.push_back(y.zp);
        }
        double F_last = 0.0;
        try { F_last = eval_F(t, y.z); } catch (const Error&) { F_last = 0.0; }
        sol.blowup = detail::fit_blowup(sol.t, sol.z, y.zp, F_last);
        sol.classification = OdeClass::BlowUpAt;
    };

    double h = std::min(1e-3 * std::fabs(span), std::fabs(span));
    long steps = 0;
    while (t < t_end) {
        if (++steps > ctrl.max_steps)
            throw IterationLimit("integrate_ivp exceeded the step budget");
        double h_try = h;
        if (y.z > 0.0 && y.zp > 0.0) h_try = std::min(h_try, 0.1 * y.z / y.zp);
        // A step limited only by the endpoint is not a failure of the error
        // control; take it without consulting the step floor.
        const bool end_clipped = h_try > t_end - t;
        if (end_clipped) h_try = t_end - t;
        if (h_try < floor_h && !end_clipped) {
            // Step floor hit. Extrapolate the singularity location from the
            // local power-law asymptote: if it falls before 0 the trajectory is
            // blowing up inside the domain; if beyond 0 the trajectory cannot
            // blow up on (t0, 0) and is reported bounded. Anything else is a
            // genuine failure.
            bool diverging = false, bounded_evidence = false;
            try {
                const double Fv = eval_F(t, y.z);
                const double ratio = y.z * Fv / (y.zp * y.zp);
                if (y.zp > 0.0 && ratio > 1.02 && y.z >= 10.0 * std::max(1.0, std::fabs(z0))) {
                    const double alpha = std::clamp(1.0 / (ratio - 1.0), 0.02, 50.0);
                    const double d = alpha * y.z / y.zp;
                    if (t + d < 0.0) diverging = true; else bounded_evidence = true;
                }
            } catch (const Error&) {}
            if (diverging) { closing_march(); return sol; }
            if (bounded_evidence) {
                sol.classification = OdeClass::BoundedAtZero;
                return sol;
            }
            throw StepUnderflow("integrate_ivp: step below 1e-14*|t0| without meeting tolerance");
        }

        detail::State ynew, err;
        detail::dopri_step(eval_F, t, y, h_try, ynew, err);
        const double wz = ctrl.tol * (1.0 + std::fabs(y.z)) * (h_try / std::fabs(span));
        const double wzp = ctrl.tol * (1.0 + std::fabs(y.zp)) * (h_try / std::fabs(span));
        const double en = std::max(std::fabs(err.z) / wz, std::fabs(err.zp) / wzp);
        if (en <= 1.0 || h_try <= floor_h * 1.0000001) {
            t += h_try;
            y = ynew;
            sol.t.push_back(t);
            sol.z.push_back(y.z);
            sol.zp.push_back(y.zp);
            if (!std::isfinite(y.z) || !std::isfinite(y.zp))
                throw EvalError("integrate_ivp produced a non-finite state");
            if (y.z >= ctrl.z_max) { closing_march(); return sol; }
            if (y.z <= -ctrl.z_max)
                throw DomainError("integrate_ivp: trajectory diverged to -infinity");
        }
        const double fac = std::clamp(0.9 * std::pow(std::max(en, 1e-10), -0.25), 0.2, 5.0);
        h = h_try * fac;
    }

    sol.classification = (std::fabs(t_end) <= zero_window) ? OdeClass::BoundedAtZero
                                                           : OdeClass::ReachedEnd;
    return sol;
}

inline double sup_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

// ---------------------------------------------------------------------------
// Dirichlet problem z'' = F, z(t0) = z(t1) = s1 on [t0, t1].

inline OdeSolution solve_dirichlet_bvp(const Field& F, double t0, double t1, double s1,
                                       const IvpControl& ctrl = {}) {
    if (!(t0 < t1) || !(t1 < 0.0))
        throw Precondition("solve_dirichlet_bvp requires t0 < t1 < 0");
    const int N = std::max(ctrl.bvp_grid, 9);
    const double L = t1 - t0;
    const double h = L / (N - 1);
    std::vector<double> tg(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) tg[static_cast<std::size_t>(i)] = t0 + h * i;
    tg.back() = t1;

    std::vector<double> z(static_cast<std::size_t>(N), s1);
    std::vector<double> Fv(static_cast<std::size_t>(N));

    auto eval_all = [&](const std::vector<double>& zz) {
        for (int i = 0; i < N; ++i) {
            const double v = F(tg[static_cast<std::size_t>(i)], zz[static_cast<std::size_t>(i)]);
            if (!std::isfinite(v)) throw EvalError("field F returned a non-finite value");
            Fv[static_cast<std::size_t>(i)] = v;
        }
    };

    bool converged = false;
    double prev_delta = std::numeric_limits<double>::infinity();
    int grow_count = 0;

    // Picard: z_{j+1}(t) = s1 - int G(t,tau) F(tau, z_j) dtau with the Dirichlet
    // Green's function of -d^2/dt^2. The kernel splits so one sweep is O(N)
    // with prefix/suffix trapezoid sums.
    for (int iter = 0; iter < 200; ++iter) {
        bool eval_ok = true;
        try { eval_all(z); } catch (const Error&) { eval_ok = false; }
        if (!eval_ok) break;
        std::vector<double> A(static_cast<std::size_t>(N), 0.0);  // int_{t0}^{t} (tau-t0) F
        std::vector<double> B(static_cast<std::size_t>(N), 0.0);  // int_{t}^{t1} (t1-tau) F
        for (int i = 1; i < N; ++i) {
            const double a0 = (tg[static_cast<std::size_t>(i - 1)] - t0) * Fv[static_cast<std::size_t>(i - 1)];
            const double a1 = (tg[static_cast<std::size_t>(i)] - t0) * Fv[static_cast<std::size_t>(i)];
            A[static_cast<std::size_t>(i)] = A[static_cast<std::size_t>(i - 1)] + 0.5 * h * (a0 + a1);
        }
        for (int i = N - 2; i >= 0; --i) {
            const double b0 = (t1 - tg[static_cast<std::size_t>(i)]) * Fv[static_cast<std::size_t>(i)];
            const double b1 = (t1 - tg[static_cast<std::size_t>(i + 1)]) * Fv[static_cast<std::size_t>(i + 1)];
            B[static_cast<std::size_t>(i)] = B[static_cast<std::size_t>(i + 1)] + 0.5 * h * (b0 + b1);
        }
        double delta = 0.0, zmax = 0.0;
        bool finite = true;
        for (int i = 0; i < N; ++i) {
            const double ti = tg[static_cast<std::size_t>(i)];
            const double integral = ((t1 - ti) * A[static_cast<std::size_t>(i)] +
                                     (ti - t0) * B[static_cast<std::size_t>(i)]) / L;
            const double znew = s1 - integral;
            if (!std::isfinite(znew)) { finite = false; break; }
            delta = std::max(delta, std::fabs(znew - z[static_cast<std::size_t>(i)]));
            zmax = std::max(zmax, std::fabs(znew));
            z[static_cast<std::size_t>(i)] = znew;
        }
        if (!finite) break;
        if (delta <= ctrl.bvp_tol * std::max(1.0, zmax)) { converged = true; break; }
        grow_count = (delta > prev_delta) ? grow_count + 1 : 0;
        if (grow_count >= 3 || delta > 1e8 * std::max(1.0, zmax)) break;
        prev_delta = delta;
    }

    if (!converged) {
        // Damped Newton on the second-order finite-difference discretization.
        for (double& v : z)
            if (!std::isfinite(v)) v = s1;
        z.front() = s1;
        z.back() = s1;

        auto residual = [&](const std::vector<double>& zz, std::vector<double>& R) -> bool {
            try {
                for (int i = 1; i < N - 1; ++i) {
                    const double fi = F(tg[static_cast<std::size_t>(i)], zz[static_cast<std::size_t>(i)]);
                    if (!std::isfinite(fi)) return false;
                    R[static_cast<std::size_t>(i)] =
                        (zz[static_cast<std::size_t>(i - 1)] - 2.0 * zz[static_cast<std::size_t>(i)] +
                         zz[static_cast<std::size_t>(i + 1)]) / (h * h) - fi;
                }
            } catch (const Error&) { return false; }
            return true;
        };
        auto sup = [&](const std::vector<double>& R) {
            double m = 0.0;
            for (int i = 1; i < N - 1; ++i) m = std::max(m, std::fabs(R[static_cast<std::size_t>(i)]));
            return m;
        };

        std::vector<double> R(static_cast<std::size_t>(N), 0.0), Rt(static_cast<std::size_t>(N), 0.0);
        std::vector<double> lo(static_cast<std::size_t>(N)), di(static_cast<std::size_t>(N)),
            up(static_cast<std::size_t>(N)), rhs(static_cast<std::size_t>(N)),
            dz(static_cast<std::size_t>(N), 0.0), zt(static_cast<std::size_t>(N));
        if (!residual(z, R))
            throw NoConvergence("Dirichlet BVP: residual not evaluable at the initial iterate");
        double rnorm = sup(R);
        bool newton_ok = false;
        for (int iter = 0; iter < 100; ++iter) {
            if (rnorm <= ctrl.bvp_tol * std::max(1.0, sup_abs(z))) { newton_ok = true; break; }
            for (int i = 1; i < N - 1; ++i) {
                const double zi = z[static_cast<std::size_t>(i)];
                const double step = 1e-6 * std::max(1.0, std::fabs(zi));
                double fz;
                try {
                    fz = (F(tg[static_cast<std::size_t>(i)], zi + step) -
                          F(tg[static_cast<std::size_t>(i)], zi - step)) / (2.0 * step);
                } catch (const Error&) { fz = 0.0; }
                lo[static_cast<std::size_t>(i)] = 1.0 / (h * h);
                di[static_cast<std::size_t>(i)] = -2.0 / (h * h) - fz;
                up[static_cast<std::size_t>(i)] = 1.0 / (h * h);
                rhs[static_cast<std::size_t>(i)] = -R[static_cast<std::size_t>(i)];
            }
            // Thomas solve on the interior block.
            for (int i = 2; i < N - 1; ++i) {
                const double m = lo[static_cast<std::size_t>(i)] / di[static_cast<std::size_t>(i - 1)];
                di[static_cast<std::size_t>(i)] -= m * up[static_cast<std::size_t>(i - 1)];
                rhs[static_cast<std::size_t>(i)] -= m * rhs[static_cast<std::size_t>(i - 1)];
            }
            dz[static_cast<std::size_t>(N - 2)] =
                rhs[static_cast<std::size_t>(N - 2)] / di[static_cast<std::size_t>(N - 2)];
            for (int i = N - 3; i >= 1; --i)
                dz[static_cast<std::size_t>(i)] =
                    (rhs[static_cast<std::size_t>(i)] -
                     up[static_cast<std::size_t>(i)] * dz[static_cast<std::size_t>(i + 1)]) /
                    di[static_cast<std::size_t>(i)];

            double lambda = 1.0;
            bool accepted = false;
            double dzmax = 0.0;
            for (int i = 1; i < N - 1; ++i) dzmax = std::max(dzmax, std::fabs(dz[static_cast<std::size_t>(i)]));
            for (int halving = 0; halving <= 30; ++halving) {
                zt = z;
                for (int i = 1; i < N - 1; ++i)
                    zt[static_cast<std::size_t>(i)] += lambda * dz[static_cast<std::size_t>(i)];
                if (residual(zt, Rt)) {
                    const double rt = sup(Rt);
                    if (rt < rnorm * (1.0 - 1e-4 * lambda) || rt <= ctrl.bvp_tol) {
                        z = zt;
                        R = Rt;
                        rnorm = rt;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if (!accepted)
                throw NoConvergence("Dirichlet BVP: Newton line search stalled");
            if (lambda * dzmax <= ctrl.bvp_tol * std::max(1.0, sup_abs(z)) && rnorm <= 1e2 * ctrl.bvp_tol) {
                newton_ok = true;
                break;
            }
        }
        if (!newton_ok)
            throw NoConvergence("Dirichlet BVP: Picard and Newton budgets exhausted");
    }

    OdeSolution sol;
    sol.accuracy = ctrl.bvp_tol;
    sol.t = tg;
    sol.z = z;
    sol.zp.resize(static_cast<std::size_t>(N));
    for (int i = 1; i < N - 1; ++i)
        sol.zp[static_cast<std::size_t>(i)] =
            (z[static_cast<std::size_t>(i + 1)] - z[static_cast<std::size_t>(i - 1)]) / (2.0 * h);
    sol.zp.front() = (-3.0 * z[0] + 4.0 * z[1] - z[2]) / (2.0 * h);
    sol.zp.back() = (3.0 * z[static_cast<std::size_t>(N - 1)] - 4.0 * z[static_cast<std::size_t>(N - 2)] +
                     z[static_cast<std::size_t>(N - 3)]) / (2.0 * h);
    sol.classification = OdeClass::ReachedEnd;
    return sol;
}

// Continue a converged Dirichlet solution forward from t1: the trichotomy is
// blow-up at some t2 in (t1, 0), blow-up at 0 itself, or boundedness at 0^-.
inline std::pair<double, OdeSolution> find_blowup_extension(const Field& F, const OdeSolution& bvp,
                                                            const IvpControl& ctrl = {}) {
    if (bvp.t.empty()) throw Precondition("find_blowup_extension: empty BVP solution");
    const double t1 = bvp.t.back();
    if (!(t1 < 0.0)) throw Precondition("find_blowup_extension requires t1 < 0");
    const double t_end = -1e-9 * std::fabs(t1);
    OdeSolution ext = integrate_ivp(F, t1, bvp.z.back(), bvp.zp.back(), t_end, ctrl);
    const double t2 = ext.blowup ? ext.blowup->t_star : 0.0;
    return {t2, std::move(ext)};
}

// ---------------------------------------------------------------------------
// Shooting machinery.

struct ShootingResult {
    double slope = 0.0;
    double achieved_rho = 0.0;
    int iterations = 0;
    std::pair<double, double> bracket{0.0, 0.0};
    OdeSolution solution;
};

namespace detail {

enum class TrialClass { Bounded, Blowup, Dip };

struct Trial {
    TrialClass cls;
    OdeSolution sol;  // empty for Dip
};

inline Trial run_trial(const Field& F, double t_bar, double z_bar, double slope, double t_end,
                       const IvpControl& ctrl) {
    try {
        OdeSolution sol = integrate_ivp(F, t_bar, z_bar, slope, t_end, ctrl);
        const TrialClass cls = (sol.classification == OdeClass::BlowUpAt) ? TrialClass::Blowup
                                                                          : TrialClass::Bounded;
        return {cls, std::move(sol)};
    } catch (const StepUnderflow&) {
        return {TrialClass::Dip, {}};
    } catch (const DomainError&) {
        return {TrialClass::Dip, {}};
    } catch (const EvalError&) {
        return {TrialClass::Dip, {}};
    } catch (const Precondition&) {
        return {TrialClass::Dip, {}};
    }
}

}  // namespace detail

// Bisection on the initial slope so the trajectory from (t_bar, z_bar) blows
// up at the prescribed time rho. Larger slope means earlier blow-up.
inline ShootingResult shoot_blowup_at(const Field& F, double t_bar, double z_bar, double rho,
                                      const IvpControl& ctrl = {}) {
    if (!(t_bar < rho) || !(rho < 0.0))
        throw Precondition("shoot_blowup_at requires t_bar < rho < 0");
    if (!(z_bar > 0.0)) throw Precondition("shoot_blowup_at requires z_bar > 0");

    const double t_end = 0.5 * rho;  // blow-ups later than this count as "late"
    int evals = 0;

    // achieved blow-up time; +inf encodes "no blow-up by t_end" (late side)
    auto achieved = [&](double m, OdeSolution* keep) {
        ++evals;
        detail::Trial tr = detail::run_trial(F, t_bar, z_bar, m, t_end, ctrl);
        if (tr.cls == detail::TrialClass::Blowup) {
            const double ts = tr.sol.blowup->t_star;
            if (keep) *keep = std::move(tr.sol);
            return ts;
        }
        if (keep && tr.cls == detail::TrialClass::Bounded) *keep = std::move(tr.sol);
        return std::numeric_limits<double>::infinity();
    };

    double m0 = z_bar / (rho - t_bar);
    if (!(m0 > 0.0)) m0 = 1.0;
    const double a0 = achieved(m0, nullptr);

    double m_hi = m0, m_lo = m0;
    double hi_t = a0, lo_t = a0;
    double step = std::max(1.0, std::fabs(m0));
    for (int k = 0; hi_t >= rho; ++k) {
        if (k >= ctrl.max_expand)
            throw BracketFailure("shoot_blowup_at: no slope blowing up before the target");
        m_hi += step;
        step *= 2.0;
        hi_t = achieved(m_hi, nullptr);
    }
    step = std::max(1.0, std::fabs(m0));
    for (int k = 0; lo_t < rho; ++k) {
        if (k >= ctrl.max_expand)
            throw BracketFailure("shoot_blowup_at: no slope blowing up after the target");
        m_lo -= step;
        step *= 2.0;
        lo_t = achieved(m_lo, nullptr);
    }

    for (int iter = 0; iter < ctrl.max_bisect; ++iter) {
        const double mid = 0.5 * (m_lo + m_hi);
        OdeSolution sol;
        const double ts = achieved(mid, &sol);
        const bool narrow = m_hi - m_lo <= ctrl.slope_tol * std::max(1.0, std::fabs(mid));
        if (narrow || (std::isfinite(ts) && std::fabs(ts - rho) < 1e-3 * ctrl.rho_tol)) {
            if (!std::isfinite(ts) || std::fabs(ts - rho) >= ctrl.rho_tol)
                throw IterationLimit("shoot_blowup_at: bracket exhausted without meeting rho_tol");
            ShootingResult res;
            res.slope = mid;
            res.achieved_rho = ts;
            res.iterations = evals;
            res.bracket = {m_lo, m_hi};
            res.solution = std::move(sol);
            return res;
        }
        if (ts < rho) m_hi = mid; else m_lo = mid;
    }
    throw IterationLimit("shoot_blowup_at: bisection budget exhausted");
}

// Critical-slope solution: bisection for the slope m* separating trajectories
// bounded on [t_bar, 0) from those blowing up before 0; the returned
// trajectory is the bisection midpoint continued until blow-up registers.
inline OdeSolution minimal_large_solution(const Field& F, double t_bar, double z_bar,
                                          const IvpControl& ctrl = {}) {
    if (!(t_bar < 0.0)) throw Precondition("minimal_large_solution requires t_bar < 0");
    if (!(z_bar > 0.0)) throw Precondition("minimal_large_solution requires z_bar > 0");

    const double t_end = -1e-8 * std::fabs(t_bar);
    bool any_bounded = false;
    auto cls = [&](double m) {
        detail::Trial tr = detail::run_trial(F, t_bar, z_bar, m, t_end, ctrl);
        if (tr.cls == detail::TrialClass::Bounded) any_bounded = true;
        return tr.cls;
    };

    double m0 = z_bar / std::fabs(t_bar);
    if (!(m0 > 0.0)) m0 = 1.0;
    const detail::TrialClass c0 = cls(m0);

    double m_hi = m0, m_lo = m0;
    double step = std::max(1.0, std::fabs(m0));
    detail::TrialClass chi = c0, clo = c0;
    for (int k = 0; chi != detail::TrialClass::Blowup; ++k) {
        if (k >= ctrl.max_expand)
            throw BracketFailure("minimal_large_solution: no blow-up slope found");
        m_hi += step;
        step *= 2.0;
        chi = cls(m_hi);
    }
    step = std::max(1.0, std::fabs(m0));
    for (int k = 0; clo == detail::TrialClass::Blowup; ++k) {
        if (k >= ctrl.max_expand)
            throw BracketFailure(
                "minimal_large_solution: every slope blows up before 0 "
                "(existence criterion appears divergent)");
        m_lo -= step;
        step *= 2.0;
        clo = cls(m_lo);
    }
    const double width_tol = ctrl.slope_tol * std::max(1.0, std::fabs(m_hi));
    for (int iter = 0; iter < ctrl.max_bisect && m_hi - m_lo > width_tol; ++iter) {
        const double mid = 0.5 * (m_lo + m_hi);
        if (cls(mid) == detail::TrialClass::Blowup) m_hi = mid; else m_lo = mid;
    }
    if (!any_bounded)
        throw BracketFailure(
            "minimal_large_solution: no bounded trajectory observed below the critical slope "
            "(existence criterion appears divergent)");

    const double m_star = 0.5 * (m_lo + m_hi);
    detail::Trial final_trial = detail::run_trial(F, t_bar, z_bar, m_star, 0.0, ctrl);
    if (final_trial.cls != detail::TrialClass::Blowup) {
        // The midpoint landed a hair below critical; the certified blow-up end
        // of the bracket is within slope_tol of it.
        final_trial = detail::run_trial(F, t_bar, z_bar, m_hi, 0.0, ctrl);
        if (final_trial.cls != detail::TrialClass::Blowup)
            throw NoConvergence("minimal_large_solution: critical trajectory did not register blow-up");
    }
    return std::move(final_trial.sol);
}

// ---------------------------------------------------------------------------
// Approximating sequences (bounded ladder z_k up to the minimal large solution
// z_0, and blow-up ladder Z_k with prescribed blow-up times rho_k -> 0).

struct SequencePair {
    std::vector<OdeSolution> bounded;        // z_1..z_K
    std::vector<double> bounded_slopes;
    OdeSolution bounded_limit;               // z_0
    std::vector<ShootingResult> blowing;     // Z_1..Z_K
    std::vector<double> rho;
    OdeSolution blowing_limit;               // Z_0
    bool orderings_ok = false;
    double max_order_violation = 0.0;
};

// max over the shared grid of (a.z - b.z); used for ordering checks a <= b.
inline double max_excess(const OdeSolution& a, const OdeSolution& b) {
    if (a.t.empty() || b.t.empty()) throw Precondition("max_excess: empty trajectory");
    const double lo = std::max(a.t.front(), b.t.front());
    const double hi = std::min(a.t.back(), b.t.back());
    if (!(hi > lo)) throw RangeMismatch("max_excess: trajectories do not overlap");
    MonotoneCubic ib(b.t, b.z);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < a.t.size(); ++j) {
        const double tj = a.t[j];
        if (tj < lo || tj > hi) continue;
        worst = std::max(worst, a.z[j] - ib(tj));
    }
    return worst;
}

inline SequencePair build_sequences(const Field& F, double t_bar, double m, double M, int K,
                                    const IvpControl& ctrl = {}) {
    if (K < 1) throw Precondition("build_sequences requires K >= 1");
    if (!(m > 0.0) || !(M > 0.0)) throw Precondition("build_sequences requires m, M > 0");
    if (!(t_bar < 0.0)) throw Precondition("build_sequences requires t_bar < 0");

    SequencePair seq;
    seq.bounded_limit = minimal_large_solution(F, t_bar, m, ctrl);
    const double crit_m = seq.bounded_limit.zp.front();

    // Bounded ladder: slopes increase geometrically toward the critical one.
    const double t_end = -1e-8 * std::fabs(t_bar);
    double gap0 = 0.25 * std::max(1.0, std::fabs(crit_m));
    for (int attempt = 0; attempt < 20; ++attempt) {
        seq.bounded.clear();
        seq.bounded_slopes.clear();
        bool ok = true;
        for (int k = 1; k <= K; ++k) {
            const double slope = crit_m - gap0 * std::pow(2.0, 1.0 - k);
            detail::Trial tr = detail::run_trial(F, t_bar, m, slope, t_end, ctrl);
            if (tr.cls != detail::TrialClass::Bounded) { ok = false; break; }
            seq.bounded.push_back(std::move(tr.sol));
            seq.bounded_slopes.push_back(slope);
        }
        if (ok) break;
        gap0 *= 0.5;
        if (attempt == 19)
            throw BracketFailure("build_sequences: could not realize a bounded ladder");
    }

    // Blow-up ladder at rho_k = -|t_bar| 2^{-k}.
    for (int k = 1; k <= K; ++k) {
        const double rho_k = -std::fabs(t_bar) * std::pow(2.0, -k);
        seq.rho.push_back(rho_k);
        seq.blowing.push_back(shoot_blowup_at(F, t_bar, M, rho_k, ctrl));
    }
    seq.blowing_limit = minimal_large_solution(F, t_bar, M, ctrl);

    // Pointwise orderings on shared grids.
    const double slack_scale = 10.0 * ctrl.tol;
    double worst = -std::numeric_limits<double>::infinity();
    for (int k = 0; k + 1 < K; ++k)
        worst = std::max(worst, max_excess(seq.bounded[static_cast<std::size_t>(k)],
                                           seq.bounded[static_cast<std::size_t>(k + 1)]));
    worst = std::max(worst, max_excess(seq.bounded.back(), seq.bounded_limit));
    for (int k = 0; k + 1 < K; ++k)
        worst = std::max(worst, max_excess(seq.blowing[static_cast<std::size_t>(k + 1)].solution,
                                           seq.blowing[static_cast<std::size_t>(k)].solution));
    worst = std::max(worst, max_excess(seq.blowing_limit, seq.blowing.back().solution));
    seq.max_order_violation = worst;
    seq.orderings_ok = worst <= slack_scale * std::max(1.0, std::fabs(M));
    return seq;
}

}  // namespace blowup
