#pragma once

// The change of variables t = p(r) = -int_r^inf e^{-h(z)} z^{1-n} dz, its
// inverse, and the transformed nonlinearity
//   F(t,z) = (p^{-1}(t))^{2n-2} e^{2 h(p^{-1}(t))} f(p^{-1}(t), z),
// which conjugates the radial PDE to z'' = F(t, z).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "blowup/errors.hpp"
#include "blowup/pchip.hpp"
#include "blowup/problem.hpp"
#include "blowup/quadrature.hpp"

namespace blowup {

struct GrowthVerdict {
    bool finite = false;
    double value = 0.0;              // converged tail integral when finite
    std::vector<double> evidence;    // doubling-block integrals
};

// Numerical probe of the growth condition: finiteness of
// int_R^inf e^{-h(r)} r^{1-n} dr, decided by doubling-block decay.
inline GrowthVerdict check_growth(const ProblemSpec& spec, double R) {
    if (!(R > 0.0)) throw Precondition("check_growth requires R > 0");
    BlockOptions opt;
    opt.rel_tol = spec.quad_tol;
    opt.panel.rel_tol = spec.quad_tol * 1e-2;
    BlockVerdict bv;
    try {
        bv = probe_to_infinity([&](double r) { return spec.weight(r); }, R, opt);
    } catch (const DomainError& e) {
        throw EvalError(std::string("growth integrand failed to evaluate: ") + e.what());
    }
    return GrowthVerdict{bv.finite, bv.value, std::move(bv.blocks)};
}

class TransformMap {
public:
    TransformMap() = default;

    double r_min() const { return r_.front(); }
    double r_big() const { return r_.back(); }
    double t_min() const { return t_.front(); }   // p(r_min), most negative
    double quad_tol() const { return quad_tol_; }
    const std::vector<double>& sample_r() const { return r_; }
    const std::vector<double>& sample_t() const { return t_; }
    const TailModel& tail() const { return tail_; }

    // p'(r), evaluated from the problem data (exact up to the expression).
    double derivative(double r) const { return spec_.weight(r); }

    double eval_p(double r) const {
        if (!(r >= r_.front() * (1.0 - 1e-12)))
            throw OutOfRange("eval_p: r below r_min");
        if (r >= r_.back()) return -tail_.integral_from(r);
        // Integrate from the nearest table node; the table itself carries the
        // improper part, so the local correction is a short proper integral.
        const std::size_t i = nearest_node(r);
        QuadratureOptions q;
        q.rel_tol = quad_tol_;
        const double corr = (r == r_[i]) ? 0.0
                          : integrate([&](double z) { return spec_.weight(z); },
                                      r_[i], r, q);
        return t_[i] + corr;
    }

    double eval_p_inverse(double t) const {
        if (!(t < 0.0)) throw OutOfRange("eval_p_inverse: t must be negative");
        if (!(t > t_.front())) throw OutOfRange("eval_p_inverse: t below p(r_min)");
        if (t >= t_.back()) return invert_tail(t);

        // Bracket from the table, then safeguarded Newton with p' = weight.
        // Iterated to machine precision (not just quad_tol) so the inverse is
        // smooth in t: a tolerance-dependent early exit would make F(t,z)
        // discontinuous at the stopping scale and stall the step controller.
        auto it = std::lower_bound(t_.begin(), t_.end(), t);
        std::size_t hi = static_cast<std::size_t>(it - t_.begin());
        std::size_t lo = hi - 1;
        double a = r_[lo], b = r_[hi];
        double r = 0.5 * (a + b);
        const double tol = 4.0 * std::numeric_limits<double>::epsilon() * std::fabs(t);
        double best_r = r, best_diff = std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < 200; ++iter) {
            const double pt = eval_p(r);
            const double diff = pt - t;
            const double ad = std::fabs(diff);
            if (ad >= best_diff) return best_r;  // stalled at rounding level
            best_r = r;
            best_diff = ad;
            if (ad <= tol) return r;
            if (diff > 0.0) b = r; else a = r;
            const double w = spec_.weight(r);
            double next = r - diff / w;
            if (!(next > a && next < b)) next = 0.5 * (a + b);
            r = next;
        }
        throw IterationLimit("eval_p_inverse: root refinement did not converge");
    }

    double eval_F(double t, double z) const {
        if (!(z > 0.0)) throw Precondition("eval_F requires z > 0");
        const double r = eval_p_inverse(t);
        double val;
        try {
            val = std::exp((2.0 * spec_.n - 2.0) * std::log(r) + 2.0 * spec_.eval_h(r)) *
                  spec_.eval_f(r, z);
        } catch (const DomainError& e) {
            throw EvalError(std::string("F(t,z) failed to evaluate: ") + e.what());
        }
        if (!std::isfinite(val)) throw EvalError("F(t,z) is non-finite");
        return val;
    }

    const ProblemSpec& spec() const { return spec_; }

private:
    friend TransformMap build_transform(const ProblemSpec&, double);

    std::size_t nearest_node(double r) const {
        auto it = std::lower_bound(r_.begin(), r_.end(), r);
        std::size_t hi = static_cast<std::size_t>(it - r_.begin());
        if (hi == 0) return 0;
        if (hi >= r_.size()) return r_.size() - 1;
        return (r - r_[hi - 1] <= r_[hi] - r) ? hi - 1 : hi;
    }

    double invert_tail(double t) const {
        const double at = -t;  // positive
        switch (tail_.kind) {
            case TailModel::Kind::PowerLaw: {
                const double q = -tail_.slope;
                const double logr = (std::log((q - 1.0) * at) - tail_.c0) / (1.0 - q);
                return std::exp(logr);
            }
            case TailModel::Kind::Exponential: {
                const double lambda = -tail_.slope;
                return (tail_.c0 - std::log(lambda * at)) / lambda;
            }
            case TailModel::Kind::Zero:
                throw OutOfRange("eval_p_inverse: t beyond representable tail");
        }
        throw OutOfRange("eval_p_inverse: corrupt tail model");
    }

    ProblemSpec spec_;
    std::vector<double> r_, t_;
    TailModel tail_;
    double quad_tol_ = 1e-10;
};

inline TransformMap build_transform(const ProblemSpec& spec, double r_min) {
    spec.validate();
    if (!(r_min > 0.0)) throw Precondition("build_transform requires r_min > 0");
    const GrowthVerdict growth = check_growth(spec, r_min);
    if (!growth.finite)
        throw GrowthViolated("growth condition violated: tail blocks do not decay");

    TransformMap map;
    map.spec_ = spec;
    map.quad_tol_ = spec.quad_tol;
    const double R_big = spec.truncation_radius();
    if (!(R_big > r_min)) throw Precondition("truncation radius must exceed r_min");

    map.tail_ = fit_tail([&](double r) { return spec.weight(r); }, R_big);

    constexpr std::size_t kGrid = 512;
    map.r_.resize(kGrid);
    map.t_.resize(kGrid);
    const double llo = std::log(r_min), lhi = std::log(R_big);
    for (std::size_t i = 0; i < kGrid; ++i)
        map.r_[i] = std::exp(llo + (lhi - llo) * static_cast<double>(i) / (kGrid - 1));
    map.r_.front() = r_min;
    map.r_.back() = R_big;

    QuadratureOptions q;
    q.rel_tol = spec.quad_tol * 1e-2;
    map.t_.back() = -map.tail_.integral_from(R_big);
    for (std::size_t i = kGrid - 1; i-- > 0;) {
        const double panel = integrate([&](double z) { return spec.weight(z); },
                                       map.r_[i], map.r_[i + 1], q);
        map.t_[i] = map.t_[i + 1] - panel;
    }

    // Table invariants: strictly increasing, negative, derivative positive and
    // consistent with an independently refined panel integral.
    for (std::size_t i = 0; i < kGrid; ++i) {
        if (!(map.t_[i] < 0.0))
            throw QuadratureFailure("transform table produced a non-negative t sample");
        if (i > 0 && !(map.t_[i] > map.t_[i - 1]))
            throw QuadratureFailure("transform table is not strictly increasing");
        if (!(spec.weight(map.r_[i]) > 0.0))
            throw QuadratureFailure("p'(r) is not positive at a table node");
    }
    QuadratureOptions qref;
    qref.rel_tol = spec.quad_tol * 1e-4;
    for (std::size_t i = 0; i < kGrid - 1; i += kGrid / 16) {
        const double panel = map.t_[i + 1] - map.t_[i];
        const double ref = integrate([&](double z) { return spec.weight(z); },
                                     map.r_[i], map.r_[i + 1], qref);
        if (std::fabs(panel - ref) > 10.0 * spec.quad_tol * std::max(std::fabs(ref), 1e-300))
            throw QuadratureFailure("transform table failed the derivative consistency check");
    }
    return map;
}

struct RadialProfile {
    std::vector<double> r;
    std::vector<double> u;
};

// Inverse direction of the ODE lemma: a trajectory z(t) lifts to the radial
// profile u(r) = z(p(r)) via r_j = p^{-1}(t_j).
inline RadialProfile lift_to_radial(const TransformMap& map,
                                    const std::vector<double>& t,
                                    const std::vector<double>& z) {
    if (t.empty() || t.size() != z.size())
        throw OutOfRange("lift_to_radial: empty or mismatched trajectory grid");
    RadialProfile prof;
    prof.r.reserve(t.size());
    prof.u.reserve(t.size());
    for (std::size_t j = 0; j < t.size(); ++j) {
        prof.r.push_back(map.eval_p_inverse(t[j]));
        prof.u.push_back(z[j]);
    }
    for (std::size_t j = 1; j < prof.r.size(); ++j)
        if (!(prof.r[j] > prof.r[j - 1]))
            throw OutOfRange("lift_to_radial: radii are not strictly increasing");
    return prof;
}

// Callable field for the ODE module.
struct TransformedField {
    const TransformMap* map;
    double operator()(double t, double z) const { return map->eval_F(t, z); }
};

}  // namespace blowup
