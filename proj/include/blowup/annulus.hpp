#pragma once

// Independent finite-difference oracle on annuli: full polar grid (intended
// for n = 2) or radial-only mode (Ntheta = 1, any n). Solves
//   u_rr + ((n-1)/r + h'(r)) u_r + (1/r^2) u_thth = f(r, u)
// with Dirichlet data on both circles by damped Newton.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "blowup/errors.hpp"
#include "blowup/expr.hpp"
#include "blowup/pchip.hpp"
#include "blowup/problem.hpp"
#include "blowup/transform.hpp"

namespace blowup {

struct AnnulusGrid {
    double r_in = 1.0, r_out = 2.0;
    int Nr = 32, Ntheta = 32;  // Ntheta = 1 selects radial-only mode

    void validate() const {
        if (!(r_in > 0.0) || !(r_out > r_in))
            throw Precondition("annulus grid requires 0 < r_in < r_out");
        if (Nr < 8) throw Precondition("annulus grid requires Nr >= 8");
        if (Ntheta != 1 && Ntheta < 8)
            throw Precondition("annulus grid requires Ntheta >= 8 (or 1 for radial mode)");
    }

    double dr() const { return (r_out - r_in) / (Nr - 1); }
    double dtheta() const { return 2.0 * M_PI / Ntheta; }
    double radius(int i) const { return r_in + dr() * i; }
    double angle(int j) const { return dtheta() * j; }
};

struct AnnulusSolution {
    AnnulusGrid grid;
    std::vector<double> u;  // row-major: u[i*Ntheta + j]
    double residual_sup = 0.0;
    int newton_iterations = 0;
    std::vector<double> theta_variation;  // per ring, max - min
    std::vector<double> radial_profile;   // per ring, mean over theta

    bool full_mode() const { return grid.Ntheta > 1; }
    double at(int i, int j) const {
        return u[static_cast<std::size_t>(i) * static_cast<std::size_t>(grid.Ntheta) +
                 static_cast<std::size_t>(j)];
    }
};

struct AnnulusInit {
    bool perturbed = false;
    double eps = 0.0;
};

struct OracleControl {
    double tol = 1e-10;
    int max_newton = 60;
    int max_halvings = 30;
};

namespace detail {

inline int worker_count() {
    if (const char* env = std::getenv("BLOWUP_LAB_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<int>(std::min<long>(v, 64));
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

// Deterministic row partitioning: each worker owns a contiguous slice and
// writes only its own rows, so results are bitwise independent of the count.
template <class Fn>
void parallel_rows(int rows, const Fn& fn) {
    const int workers = std::min(worker_count(), rows);
    if (workers <= 1 || rows < 16) {
        for (int i = 0; i < rows; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        const int lo = rows * w / workers;
        const int hi = rows * (w + 1) / workers;
        pool.emplace_back([&, lo, hi] {
            for (int i = lo; i < hi; ++i) fn(i);
        });
    }
    for (std::thread& t : pool) t.join();
}

}  // namespace detail

inline AnnulusSolution solve_annulus(const ProblemSpec& spec, const AnnulusGrid& grid,
                                     const std::vector<double>& bc_in,
                                     const std::vector<double>& bc_out,
                                     const AnnulusInit& init = {},
                                     const std::optional<Expr>& rhs_override = std::nullopt,
                                     const OracleControl& ctrl = {}) {
    grid.validate();
    const int Nr = grid.Nr, Nth = grid.Ntheta;
    auto bc_value = [&](const std::vector<double>& bc, int j) -> double {
        if (bc.size() == 1) return bc[0];
        if (bc.size() != static_cast<std::size_t>(Nth))
            throw Precondition("boundary table size must be 1 or Ntheta");
        return bc[static_cast<std::size_t>(j)];
    };

    const double dr = grid.dr();
    const double dth = grid.dtheta();

    auto rhs = [&](double r, double u) -> double {
        if (rhs_override) {
            const double vals[1] = {r};
            return rhs_override->eval(std::span<const double>(vals, 1));
        }
        return spec.eval_f(r, u);
    };
    auto rhs_u = [&](double r, double u) -> double {
        if (rhs_override) return 0.0;
        const double step = 1e-6 * std::max(1.0, std::fabs(u));
        return (spec.eval_f(r, u + step) - spec.eval_f(r, u - step)) / (2.0 * step);
    };

    // Monotone nonlinearity precondition (f_s >= 0) on the relevant range.
    if (!rhs_override) {
        double s_lo = bc_value(bc_in, 0), s_hi = s_lo;
        for (int j = 0; j < Nth; ++j) {
            s_lo = std::min({s_lo, bc_value(bc_in, j), bc_value(bc_out, j)});
            s_hi = std::max({s_hi, bc_value(bc_in, j), bc_value(bc_out, j)});
        }
        const double span = std::max(std::fabs(s_hi), 1.0);
        for (int i = 0; i < 8; ++i) {
            const double r = grid.r_in + (grid.r_out - grid.r_in) * i / 7.0;
            for (int k = 0; k < 8; ++k) {
                const double s = s_lo + (2.0 * span - s_lo) * k / 7.0;
                if (rhs_u(r, s) < -1e-9 * std::max(1.0, std::fabs(rhs(r, s))))
                    throw Precondition("solve_annulus requires f_s >= 0 on the sampled range");
            }
        }
    }

    // Precomputed per-ring coefficients.
    std::vector<double> conv(static_cast<std::size_t>(Nr));
    for (int i = 0; i < Nr; ++i) {
        const double r = grid.radius(i);
        const double hstep = 1e-6 * r;
        const double hv0[1] = {r - hstep}, hv1[1] = {r + hstep};
        const double hprime = (spec.h.eval(std::span<const double>(hv1, 1)) -
                               spec.h.eval(std::span<const double>(hv0, 1))) /
                              (2.0 * hstep);
        conv[static_cast<std::size_t>(i)] = (spec.n - 1.0) / r + hprime;
    }

    AnnulusSolution sol;
    sol.grid = grid;
    sol.u.assign(static_cast<std::size_t>(Nr) * static_cast<std::size_t>(Nth), 0.0);
    auto U = [&](int i, int j) -> double& {
        return sol.u[static_cast<std::size_t>(i) * static_cast<std::size_t>(Nth) +
                     static_cast<std::size_t>(j)];
    };

    // Initialization: linear radial interpolation of the boundary data, plus an
    // optional interior theta-perturbation vanishing at both circles.
    for (int j = 0; j < Nth; ++j) {
        const double a = bc_value(bc_in, j), b = bc_value(bc_out, j);
        for (int i = 0; i < Nr; ++i) {
            const double lam = static_cast<double>(i) / (Nr - 1);
            double v = (1.0 - lam) * a + lam * b;
            if (init.perturbed && i > 0 && i < Nr - 1)
                v += init.eps * std::sin(grid.angle(j)) * std::sin(M_PI * lam);
            U(i, j) = v;
        }
    }

    const int interior = Nr - 2;
    const int m = interior * Nth;
    auto idx = [&](int i, int j) { return (i - 1) * Nth + ((j % Nth + Nth) % Nth); };

    std::vector<double> R(static_cast<std::size_t>(m), 0.0);
    auto residual = [&](const std::vector<double>& u, std::vector<double>& out) {
        auto cell = [&](int i, int j) {
            return u[static_cast<std::size_t>(i) * static_cast<std::size_t>(Nth) +
                     static_cast<std::size_t>(j)];
        };
        detail::parallel_rows(interior, [&](int row) {
            const int i = row + 1;
            const double r = grid.radius(i);
            for (int j = 0; j < Nth; ++j) {
                const double uc = cell(i, j);
                double lap = (cell(i - 1, j) - 2.0 * uc + cell(i + 1, j)) / (dr * dr) +
                             conv[static_cast<std::size_t>(i)] *
                                 (cell(i + 1, j) - cell(i - 1, j)) / (2.0 * dr);
                if (Nth > 1) {
                    const int jm = (j + Nth - 1) % Nth, jp = (j + 1) % Nth;
                    lap += (cell(i, jm) - 2.0 * uc + cell(i, jp)) / (r * r * dth * dth);
                }
                out[static_cast<std::size_t>(idx(i, j))] = lap - rhs(r, uc);
            }
        });
    };
    auto sup = [&](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) {
            if (!std::isfinite(x)) return std::numeric_limits<double>::infinity();
            s = std::max(s, std::fabs(x));
        }
        return s;
    };

    residual(sol.u, R);
    double rnorm = sup(R);
    double rhs_scale = 1.0;
    for (int i = 1; i < Nr - 1; ++i)
        rhs_scale = std::max(rhs_scale, std::fabs(rhs(grid.radius(i), U(i, 0))));
    const double target = ctrl.tol * rhs_scale;

    Eigen::SparseMatrix<double> J(m, m);
    Eigen::VectorXd rv(m), dv(m);
    std::vector<Eigen::Triplet<double>> trips;
    std::vector<double> trial(sol.u.size());
    std::vector<double> Rt(static_cast<std::size_t>(m));

    int iter = 0;
    for (; iter < ctrl.max_newton && rnorm > target; ++iter) {
        trips.clear();
        for (int i = 1; i < Nr - 1; ++i) {
            const double r = grid.radius(i);
            const double cr = conv[static_cast<std::size_t>(i)];
            for (int j = 0; j < Nth; ++j) {
                const int row = idx(i, j);
                double diag = -2.0 / (dr * dr) - rhs_u(r, U(i, j));
                if (Nth > 1) {
                    diag -= 2.0 / (r * r * dth * dth);
                    const double cth = 1.0 / (r * r * dth * dth);
                    trips.emplace_back(row, idx(i, j - 1), cth);
                    trips.emplace_back(row, idx(i, j + 1), cth);
                }
                trips.emplace_back(row, row, diag);
                if (i > 1) trips.emplace_back(row, idx(i - 1, j), 1.0 / (dr * dr) - cr / (2.0 * dr));
                if (i < Nr - 2) trips.emplace_back(row, idx(i + 1, j), 1.0 / (dr * dr) + cr / (2.0 * dr));
                rv(row) = -R[static_cast<std::size_t>(row)];
            }
        }
        J.setFromTriplets(trips.begin(), trips.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(J);
        if (lu.info() != Eigen::Success)
            throw NewtonDivergence("solve_annulus: singular Jacobian");
        dv = lu.solve(rv);

        double lambda = 1.0;
        bool accepted = false;
        for (int halving = 0; halving <= ctrl.max_halvings; ++halving) {
            trial = sol.u;
            for (int i = 1; i < Nr - 1; ++i)
                for (int j = 0; j < Nth; ++j)
                    trial[static_cast<std::size_t>(i) * static_cast<std::size_t>(Nth) +
                          static_cast<std::size_t>(j)] += lambda * dv(idx(i, j));
            bool ok = true;
            try {
                residual(trial, Rt);
            } catch (const Error&) { ok = false; }
            if (ok) {
                const double rt = sup(Rt);
                if (rt < rnorm * (1.0 - 1e-4 * lambda) || rt <= target) {
                    sol.u = trial;
                    R = Rt;
                    rnorm = rt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if (!accepted)
            throw NewtonDivergence("solve_annulus: residual failed to decrease over the line search");
    }
    if (rnorm > target)
        throw NewtonDivergence("solve_annulus: Newton budget exhausted");

    sol.residual_sup = rnorm;
    sol.newton_iterations = iter;
    sol.theta_variation.resize(static_cast<std::size_t>(Nr));
    sol.radial_profile.resize(static_cast<std::size_t>(Nr));
    for (int i = 0; i < Nr; ++i) {
        double lo = U(i, 0), hi = U(i, 0), sum = 0.0;
        for (int j = 0; j < Nth; ++j) {
            lo = std::min(lo, U(i, j));
            hi = std::max(hi, U(i, j));
            sum += U(i, j);
        }
        sol.theta_variation[static_cast<std::size_t>(i)] = hi - lo;
        sol.radial_profile[static_cast<std::size_t>(i)] = sum / Nth;
    }
    return sol;
}

struct SymmetryReport {
    double global = 0.0;
    std::vector<double> per_ring;
};

inline SymmetryReport symmetry_deviation(const AnnulusSolution& sol) {
    if (!sol.full_mode())
        throw WrongMode("symmetry_deviation requires a full polar solution");
    SymmetryReport rep;
    rep.per_ring = sol.theta_variation;
    for (double v : rep.per_ring) rep.global = std::max(rep.global, v);
    return rep;
}

inline double compare_with_radial(const AnnulusSolution& sol, const RadialProfile& profile) {
    if (profile.r.empty() || profile.r.front() > sol.grid.r_in * (1.0 + 1e-12) ||
        profile.r.back() < sol.grid.r_out * (1.0 - 1e-12))
        throw RangeMismatch("compare_with_radial: profile does not cover the annulus");
    MonotoneCubic interp(profile.r, profile.u);
    double worst = 0.0;
    for (int i = 0; i < sol.grid.Nr; ++i) {
        const double r = std::clamp(sol.grid.radius(i), interp.x_min(), interp.x_max());
        const double ref = interp(r);
        const double dev = std::fabs(sol.radial_profile[static_cast<std::size_t>(i)] - ref) /
                           std::max(1.0, std::fabs(ref));
        worst = std::max(worst, dev);
    }
    return worst;
}

}  // namespace blowup
