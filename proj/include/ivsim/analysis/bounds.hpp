#pragma once

// Closed-form quantities from the finiteness arguments: cone-neighbor law,
// the Campbell integral of the path loss, the Laplace product bound, the
// per-slot success floor J, and the Chernoff rate of hop progress.

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ivsim/channel.hpp"
#include "ivsim/engine.hpp"
#include "ivsim/errors.hpp"
#include "ivsim/spatial.hpp"

namespace ivsim::analysis {

/// Dimensionless combinations of the model parameters.
struct BoundInputs {
    double c = 0.0;   ///< M / (1 - epsilon)
    double c1 = 0.0;  ///< beta * gamma * (1 - epsilon)
    double a = 0.0;   ///< mu * beta * gamma / c

    static BoundInputs from(const SimParams& p) {
        BoundInputs b;
        b.c = p.avg_power / (1.0 - p.epsilon);
        b.c1 = p.beta * p.gamma * (1.0 - p.epsilon);
        b.a = p.mu * p.beta * p.gamma / b.c;
        return b;
    }
};

// ---------------------------------------------------------------------------
// Cone nearest-neighbor law

/// Density of the nearest-neighbor distance inside one of m cones.
inline double nn_cone_pdf(double r, double lambda, int m) {
    if (r < 0.0) throw ParameterError("nn_cone_pdf: r must be non-negative");
    const double k = lambda * std::numbers::pi / m;
    return 2.0 * k * r * std::exp(-k * r * r);
}

inline double nn_cone_cdf(double r, double lambda, int m) {
    if (r <= 0.0) return 0.0;
    return -std::expm1(-lambda * std::numbers::pi * r * r / m);
}

inline double nn_cone_median(double lambda, int m) {
    return std::sqrt(m * std::numbers::ln2 / (lambda * std::numbers::pi));
}

/// Radius beyond which `r^power * pdf(r)` stays below `tol` relative to its peak.
inline double nn_cone_support(double lambda, int m, double power = 1.0, double tol = 1e-12) {
    const double k = lambda * std::numbers::pi / m;
    // r^(power+1) exp(-k r^2) peaks at r* = sqrt((power+1)/(2k)).
    const double peak_r = std::sqrt((power + 1.0) / (2.0 * k));
    auto log_env = [&](double r) { return (power + 1.0) * std::log(r) - k * r * r; };
    const double peak = log_env(peak_r);
    double r = 2.0 * peak_r;
    while (log_env(r) - peak > std::log(tol)) r *= 1.25;
    return r;
}

namespace detail {
template <class F>
double integrate(F f, double lo, double hi, double* err = nullptr) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, hi, 25, 1e-12, err);
}
}  // namespace detail

/// E[R cos theta] for one hop, closed form: (1/2) sqrt(m/lambda) * sin(phi)/phi.
inline double mean_hop_progress(double lambda, int m) {
    const double phi = std::numbers::pi / m;
    return 0.5 * std::sqrt(m / lambda) * std::sin(phi) / phi;
}

/// chi(nu) = E[exp(nu R cos theta)] by 2-D quadrature over the hop law.
inline double chi(double nu, double lambda, int m) {
    const double phi = std::numbers::pi / m;
    const double rmax = nn_cone_support(lambda, m, 1.0) + (nu > 0.0 ? nu * m / (lambda * std::numbers::pi) : 0.0);
    // Strong negative tilts concentrate the integrand near r = 0; split there.
    const double split = nu < 0.0 ? std::min(rmax, 40.0 / -nu) : rmax;
    auto inner = [&](double theta) {
        const double ct = std::cos(theta);
        auto f = [&](double r) { return std::exp(nu * r * ct) * nn_cone_pdf(r, lambda, m); };
        double v = detail::integrate(f, 0.0, split);
        if (split < rmax) v += detail::integrate(f, split, rmax);
        return v;
    };
    return detail::integrate(inner, -phi, phi) / (2.0 * phi);
}

// ---------------------------------------------------------------------------
// Campbell integral of the path loss

/// Integral of l(|z|) over the plane: pi + 2*pi/(alpha - 2).
inline double campbell_l_integral(double alpha) {
    if (!(alpha > 2.0)) throw ConditionViolation("campbell_l_integral: diverges for alpha <= 2");
    return std::numbers::pi + 2.0 * std::numbers::pi / (alpha - 2.0);
}

// ---------------------------------------------------------------------------
// Conditional bounds for a fixed realization

/// Product over all points other than the receiver and the tagged source of
/// (1 - c1 * l(|z - receiver|)): a lower bound on E[exp(-a I*) | Phi].
inline double laplace_lower_bound(const PointSet& ps, Vec2 receiver, double c1, double alpha) {
    if (!(c1 < 1.0)) throw ConditionViolation("laplace_lower_bound: requires c1 < 1 (beta*gamma < 1)");
    const auto tagged = ps.tagged_index();
    double log_prod = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (tagged && i == *tagged) continue;
        if (ps[i] == receiver) continue;
        log_prod += std::log1p(-c1 * path_loss(distance(ps[i], receiver), alpha));
    }
    return std::exp(log_prod);
}

/// Per-slot success floor J = p_o * eps * exp(-mu*beta*N/c) * prod(1 - c1 l),
/// so that P[T > k | Phi] <= (1 - J)^k.
inline double j_bound(const PointSet& ps, Vec2 receiver, const SimParams& params) {
    const auto b = BoundInputs::from(params);
    const Vec2 source = ps.tagged_point();
    const auto tagged = power_and_prob(params.power_control(), distance(source, receiver), params.alpha);
    return tagged.prob * params.epsilon * std::exp(-params.mu * params.beta * params.noise / b.c) *
           laplace_lower_bound(ps, receiver, b.c1, params.alpha);
}

// ---------------------------------------------------------------------------
// Unconditional mean-delay bound (reported, not asserted; it is loose)

/// E[p_o^-2] <= (c/M)^2 E[max(R^(2 alpha), 1)] under the cone-neighbor law.
inline double inverse_prob_second_moment(const SimParams& p) {
    const double ratio = 1.0 / (1.0 - p.epsilon);  // c / M
    const double rmax = nn_cone_support(p.lambda, p.cones, 2.0 * p.alpha);
    auto f = [&](double r) { return std::max(std::pow(r, 2.0 * p.alpha), 1.0) * nn_cone_pdf(r, p.lambda, p.cones); };
    const double moment = detail::integrate(f, 0.0, 1.0) + detail::integrate(f, 1.0, std::max(rmax, 1.0));
    return ratio * ratio * moment;
}

/// exp(2 lambda c1 / (1 - c1)^2 * integral of l): bound on E[(E[e^{-aI*}|Phi])^-2].
inline double inverse_laplace_second_moment_bound(const SimParams& p) {
    const auto b = BoundInputs::from(p);
    if (!(b.c1 < 1.0)) throw ConditionViolation("requires beta*gamma < 1");
    return std::exp(2.0 * p.lambda * b.c1 / ((1.0 - b.c1) * (1.0 - b.c1)) * campbell_l_integral(p.alpha));
}

/// Cauchy-Schwarz upper bound on the mean exit time.
inline double mean_exit_time_bound(const SimParams& p) {
    const auto b = BoundInputs::from(p);
    return std::exp(p.mu * p.beta * p.noise / b.c) / p.epsilon *
           std::sqrt(inverse_laplace_second_moment_bound(p) * inverse_prob_second_moment(p));
}

// ---------------------------------------------------------------------------
// Chernoff rate for hop-progress sums

/// g(x) = -4 log(1 - c1 l(x)), with l(0) taken as 1.
inline double g_function(double x, double c1, double alpha) {
    const double loss = x <= 1.0 ? 1.0 : std::pow(x, -alpha);
    return -4.0 * std::log1p(-c1 * loss);
}

struct ZetaResult {
    double zeta = 0.0;  ///< rate: P[S_n < n delta] <= exp(-zeta n)
    double nu = 0.0;    ///< optimizing tilt
};

/// Lower-tail Chernoff rate of S_n = sum of i.i.d. hop progress R cos theta:
///   zeta(delta) = sup_{nu > 0} [ -nu*delta - log chi(-nu) ]
/// found by golden-section search on the convex function nu*delta + log chi(-nu).
inline ZetaResult chernoff_zeta(double delta, double lambda, int m, double tol = 1e-6) {
    const double xi = mean_hop_progress(lambda, m);
    if (!(delta > 0.0)) throw ParameterError("chernoff_zeta: delta must be positive");
    if (!(delta < xi)) throw ConditionViolation("chernoff_zeta: delta >= E[R cos theta], rate is zero");
    auto h = [&](double nu) { return nu * delta + std::log(chi(-nu, lambda, m)); };

    // Bracket the minimizer: h(0) = 0, h'(0) = delta - xi < 0.
    double hi = 1.0;
    for (double prev = 0.0, cur = h(hi); cur < prev && hi < 1e8;) {
        prev = cur;
        hi *= 2.0;
        cur = h(hi);
    }
    double lo = 0.0;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = h(x1), f2 = h(x2);
    while (hi - lo > tol * std::max(1.0, hi)) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = h(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = h(x2);
        }
    }
    const double nu = 0.5 * (lo + hi);
    return {std::max(0.0, -h(nu)), nu};
}

/// Largest delta on a uniform grid over (0, xi) with zeta(delta) > target, if any.
inline std::optional<double> delta_with_rate_above(double target, double lambda, int m, int grid = 200) {
    const double xi = mean_hop_progress(lambda, m);
    for (int i = grid - 1; i >= 1; --i) {
        const double delta = xi * i / grid;
        if (chernoff_zeta(delta, lambda, m).zeta > target) return delta;
    }
    return std::nullopt;
}

}  // namespace ivsim::analysis
