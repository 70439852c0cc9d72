#pragma once

// Adaptive panel quadrature (fixed 15-point Gauss-Legendre rule, bisection
// refinement) plus the block machinery used for improper integrals:
// geometric doubling blocks toward infinity and halving blocks toward 0.
// Divergence verdicts are numerical evidence, never proof.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "blowup/errors.hpp"

namespace blowup {

namespace detail {

// 15-point Gauss-Legendre abscissae/weights on [-1, 1].
inline constexpr std::array<double, 8> kGaussX = {
    0.0,
    0.2011940939974345223006283033945962078128,
    0.3941513470775633698972073709810454683627,
    0.5709721726085388475372267372539106412810,
    0.7244177313601700474161860546139380096308,
    0.8482065834104272162006483207742168513662,
    0.9372733924007059043077589477102094712439,
    0.9879925180204854284895657185866125811469};
inline constexpr std::array<double, 8> kGaussW = {
    0.2025782419255612728806201999675193148386,
    0.1984314853271115764561183264438393248186,
    0.1861610000155622110268005618664228245062,
    0.1662692058169939335532008604812088111309,
    0.1395706779261543144478047945110283225208,
    0.1071592204671719350118695466858693034155,
    0.0703660474881081247092674164506673384667,
    0.0307532419961172683546283935772044177217};

template <class F>
double gauss15(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double sum = kGaussW[0] * f(c);
    for (std::size_t i = 1; i < 8; ++i) {
        const double dx = h * kGaussX[i];
        sum += kGaussW[i] * (f(c + dx) + f(c - dx));
    }
    return sum * h;
}

}  // namespace detail

struct QuadratureOptions {
    double rel_tol = 1e-12;
    double abs_floor = 1e-300;  // scale below which relative control is meaningless
    int max_depth = 48;
};

// Adaptive bisection: accept a panel when GL15 on the panel agrees with the
// two half-panel sum; otherwise recurse on the halves.
template <class F>
double integrate(const F& f, double a, double b, const QuadratureOptions& opt = {}) {
    if (a == b) return 0.0;
    struct Rec {
        const F& f;
        const QuadratureOptions& opt;
        double run(double a, double b, double whole, int depth) const {
            const double m = 0.5 * (a + b);
            const double left = detail::gauss15(f, a, m);
            const double right = detail::gauss15(f, m, b);
            const double sum = left + right;
            const double err = std::fabs(sum - whole);
            const double scale = std::max(std::fabs(sum), opt.abs_floor);
            if (err <= opt.rel_tol * scale || !(std::fabs(b - a) > 0)) return sum;
            if (depth >= opt.max_depth)
                throw QuadratureFailure("adaptive quadrature: panel tolerance not met within depth budget");
            return run(a, m, left, depth + 1) + run(m, b, right, depth + 1);
        }
    };
    return Rec{f, opt}.run(a, b, detail::gauss15(f, a, b), 0);
}

// Verdict for improper integrals probed by geometric blocks. `value` is only
// meaningful when finite == true; `blocks` carries the per-block integrals as
// evidence either way.
struct BlockVerdict {
    bool finite = false;
    double value = 0.0;
    std::vector<double> blocks;
};

struct BlockOptions {
    double rel_tol = 1e-12;
    double decay_ratio = 0.95;  // blocks with ratio >= this count as non-decaying
    int divergence_streak = 8;
    int max_blocks = 64;
    QuadratureOptions panel;
};

// Probe the integral of f over [R, infinity) with doubling blocks
// [2^k R, 2^{k+1} R]. Finite verdicts carry block sums plus a geometric tail
// extrapolation from the last observed decay ratio.
template <class F>
BlockVerdict probe_to_infinity(const F& f, double R, const BlockOptions& opt = {}) {
    BlockVerdict v;
    double a = R;
    double sum = 0.0;
    int streak = 0;
    double prev = 0.0;
    for (int k = 0; k < opt.max_blocks; ++k) {
        const double b = 2.0 * a;
        const double block = integrate(f, a, b, opt.panel);
        v.blocks.push_back(block);
        sum += block;
        if (k > 0 && std::fabs(prev) > 0.0) {
            const double ratio = std::fabs(block) / std::fabs(prev);
            streak = (ratio >= opt.decay_ratio) ? streak + 1 : 0;
            if (streak >= opt.divergence_streak) {
                v.finite = false;
                return v;
            }
            if (std::fabs(block) <= opt.rel_tol * std::fabs(sum) && ratio < opt.decay_ratio) {
                v.finite = true;
                v.value = sum + block * ratio / (1.0 - ratio);
                return v;
            }
        }
        prev = block;
        a = b;
    }
    // Blocks kept shrinking but the budget ran out before the tolerance was
    // reached: accept the partial sum with the extrapolated remainder.
    if (!v.blocks.empty() && v.blocks.size() >= 2) {
        const double ratio =
            std::fabs(v.blocks.back()) / std::max(std::fabs(v.blocks[v.blocks.size() - 2]), 1e-300);
        if (ratio < opt.decay_ratio) {
            v.finite = true;
            v.value = sum + v.blocks.back() * ratio / (1.0 - ratio);
            return v;
        }
    }
    v.finite = false;
    return v;
}

// Probe the integral of f over [t0, 0) (t0 < 0) with halving blocks
// [-2^{-k}|t0|, -2^{-k-1}|t0|].
template <class F>
BlockVerdict probe_to_zero(const F& f, double t0, const BlockOptions& opt = {}) {
    BlockVerdict v;
    double a = t0;
    double sum = 0.0;
    int streak = 0;
    double prev = 0.0;
    for (int k = 0; k < opt.max_blocks; ++k) {
        const double b = 0.5 * a;
        const double block = integrate(f, a, b, opt.panel);
        v.blocks.push_back(block);
        sum += block;
        if (k > 0 && std::fabs(prev) > 0.0) {
            const double ratio = std::fabs(block) / std::fabs(prev);
            streak = (ratio >= opt.decay_ratio) ? streak + 1 : 0;
            if (streak >= opt.divergence_streak) {
                v.finite = false;
                return v;
            }
            if (std::fabs(block) <= opt.rel_tol * std::fabs(sum) && ratio < opt.decay_ratio) {
                v.finite = true;
                v.value = sum + block * ratio / (1.0 - ratio);
                return v;
            }
        }
        prev = block;
        a = b;
    }
    if (v.blocks.size() >= 2) {
        const double ratio =
            std::fabs(v.blocks.back()) / std::max(std::fabs(v.blocks[v.blocks.size() - 2]), 1e-300);
        if (ratio < opt.decay_ratio) {
            v.finite = true;
            v.value = sum + v.blocks.back() * ratio / (1.0 - ratio);
            return v;
        }
    }
    v.finite = false;
    return v;
}

// Tail model for a positive integrand w on [R, infinity), fitted on the last
// decade [R/10, R]. Power law C z^{-q} via log-log regression; exponential
// A e^{-lambda z} fallback when it fits the samples better.
struct TailModel {
    enum class Kind { PowerLaw, Exponential, Zero } kind = Kind::Zero;
    double c0 = 0.0;      // log-amplitude
    double slope = 0.0;   // -q (power) or -lambda (exponential)
    double fit_from = 0.0;

    double density(double r) const {
        switch (kind) {
            case Kind::PowerLaw: return std::exp(c0 + slope * std::log(r));
            case Kind::Exponential: return std::exp(c0 + slope * r);
            case Kind::Zero: return 0.0;
        }
        return 0.0;
    }

    // Integral of the model over [r, infinity).
    double integral_from(double r) const {
        switch (kind) {
            case Kind::PowerLaw: {
                const double q = -slope;
                if (q <= 1.0)
                    throw GrowthViolated("tail exponent <= 1: improper integral not integrable");
                return std::exp(c0 + (1.0 - q) * std::log(r)) / (q - 1.0);
            }
            case Kind::Exponential: {
                const double lambda = -slope;
                if (lambda <= 0.0)
                    throw GrowthViolated("non-decaying exponential tail");
                return std::exp(c0 - lambda * r) / lambda;
            }
            case Kind::Zero: return 0.0;
        }
        return 0.0;
    }
};

// Least-squares fit of log w against log r (power) and r (exponential) on a
// log-spaced sample of the last decade before R.
template <class W>
TailModel fit_tail(const W& w, double R, int samples = 33) {
    std::vector<double> rs(static_cast<std::size_t>(samples));
    std::vector<double> lw(static_cast<std::size_t>(samples));
    const double lo = std::log(R / 10.0);
    const double hi = std::log(R);
    bool all_tiny = true;
    for (int i = 0; i < samples; ++i) {
        const double r = std::exp(lo + (hi - lo) * i / (samples - 1));
        const double wi = w(r);
        if (!(wi > 0.0)) throw EvalError("tail fit requires a positive integrand sample");
        rs[static_cast<std::size_t>(i)] = r;
        lw[static_cast<std::size_t>(i)] = std::log(wi);
        if (wi > 1e-280) all_tiny = false;
    }
    if (all_tiny) return TailModel{TailModel::Kind::Zero, 0.0, 0.0, R};

    auto regress = [&](auto&& xfun) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (int i = 0; i < samples; ++i) {
            const double x = xfun(rs[static_cast<std::size_t>(i)]);
            const double y = lw[static_cast<std::size_t>(i)];
            sx += x; sy += y; sxx += x * x; sxy += x * y;
        }
        const double n = samples;
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        const double c0 = (sy - slope * sx) / n;
        double res = 0;
        for (int i = 0; i < samples; ++i) {
            const double x = xfun(rs[static_cast<std::size_t>(i)]);
            const double d = lw[static_cast<std::size_t>(i)] - (c0 + slope * x);
            res += d * d;
        }
        return std::array<double, 3>{c0, slope, res};
    };

    const auto pw = regress([](double r) { return std::log(r); });
    const auto ex = regress([](double r) { return r; });

    TailModel m;
    m.fit_from = R;
    if (pw[2] <= ex[2]) {
        m.kind = TailModel::Kind::PowerLaw;
        m.c0 = pw[0];
        m.slope = pw[1];
    } else {
        m.kind = TailModel::Kind::Exponential;
        m.c0 = ex[0];
        m.slope = ex[1];
    }
    return m;
}

}  // namespace blowup
