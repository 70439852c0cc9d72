#pragma once

// Problem data: dimension, convection potential h(r), nonlinearity f(r,s),
// optional comparison function g(r,s), and the corner (r0, s0) of the region
// where positivity/superlinearity are required.

#include <cmath>
#include <optional>
#include <string>

#include "blowup/errors.hpp"
#include "blowup/expr.hpp"

namespace blowup {

struct ProblemSpec {
    int n = 3;                    // space dimension, >= 2
    Expr h;                       // over {r}
    Expr f;                       // over {r, s}
    std::optional<Expr> g;        // over {r, s}
    double r0 = 1.0;
    double s0 = 1.0;
    double quad_tol = 1e-10;
    double R_big = 0.0;           // 0 -> default 1e6 * r0

    void validate() const {
        if (n < 2) throw ConfigError("dimension n must be >= 2");
        if (!(r0 > 0.0)) throw ConfigError("r0 must be positive");
        if (!(s0 > 0.0)) throw ConfigError("s0 must be positive");
        if (!(quad_tol > 0.0) || quad_tol > 1e-3)
            throw ConfigError("quad_tol must lie in (0, 1e-3]");
        if (R_big != 0.0 && !(R_big > 10.0 * r0))
            throw ConfigError("R_big must exceed 10*r0");
    }

    double truncation_radius() const { return R_big > 0.0 ? R_big : 1e6 * r0; }

    double eval_h(double r) const {
        const double v[1] = {r};
        return h.eval(std::span<const double>(v, 1));
    }

    double eval_f(double r, double s) const {
        const double v[2] = {r, s};
        return f.eval(std::span<const double>(v, 2));
    }

    double eval_g(double r, double s) const {
        if (!g) throw Precondition("no comparison function g supplied");
        const double v[2] = {r, s};
        return g->eval(std::span<const double>(v, 2));
    }

    // p'(r) = e^{-h(r)} r^{1-n}, the integrand of the growth condition.
    double weight(double r) const {
        if (!(r > 0.0)) throw DomainError("weight requires r > 0");
        return std::exp(-eval_h(r) + (1.0 - n) * std::log(r));
    }
};

}  // namespace blowup
