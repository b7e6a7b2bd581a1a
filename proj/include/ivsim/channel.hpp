#pragma once

// Path loss, fading, interference aggregation and SINR.

#include <cmath>
#include <span>

#include "ivsim/errors.hpp"
#include "ivsim/rng.hpp"
#include "ivsim/spatial.hpp"

namespace ivsim {

struct ChannelParams {
    double alpha = 4.0;  ///< path-loss exponent
    double mu = 1.0;     ///< fading rate; mean fade power is 1/mu
    double noise = 0.1;  ///< additive noise power N
    double gamma = 0.5;  ///< interference suppression factor
    double beta = 0.5;   ///< SINR success threshold

    void check() const {
        detail::require(alpha > 2.0, "channel: alpha must exceed 2");
        detail::require(mu > 0.0, "channel: mu must be positive");
        detail::require(noise > 0.0, "channel: noise must be positive");
        detail::require(gamma > 0.0 && gamma < 1.0, "channel: gamma must lie in (0,1)");
        detail::require(beta >= 0.0, "channel: beta must be non-negative");
    }
};

struct TransmitterState {
    Vec2 position;
    double power = 0.0;
    bool on = false;
};

/// l(r) = min(r^-alpha, 1).
inline double path_loss(double r, double alpha) {
    if (!(r > 0.0)) throw ParameterError("path_loss: distance must be positive");
    return r <= 1.0 ? 1.0 : std::pow(r, -alpha);
}

/// Unchecked variant for inner loops; r > 0 is the caller's contract.
inline double path_loss_unchecked(double r, double alpha) noexcept {
    if (r <= 1.0) return 1.0;
    if (alpha == 4.0) {
        const double r2 = r * r;
        return 1.0 / (r2 * r2);
    }
    return std::pow(r, -alpha);
}

inline double sample_fading(double mu, Stream& rng) {
    if (!(mu > 0.0)) throw ParameterError("sample_fading: mu must be positive");
    return rng.exponential(mu);
}

/// Shot noise at `receiver`: sum of power * fade * path loss over the
/// transmitters that are on and not at an excluded position.
/// `fades[i]` belongs to `transmitters[i]`.
inline double interference(Vec2 receiver, std::span<const TransmitterState> transmitters,
                           std::span<const Vec2> excluded, std::span<const double> fades, double alpha) {
    if (fades.size() != transmitters.size()) throw ParameterError("interference: one fade per transmitter");
    double total = 0.0;
    for (std::size_t i = 0; i < transmitters.size(); ++i) {
        const auto& tx = transmitters[i];
        if (!tx.on) continue;
        bool skip = false;
        for (const auto& e : excluded) skip = skip || (e == tx.position);
        if (skip) continue;
        const double r = distance(tx.position, receiver);
        if (r == 0.0) throw GeometryError("interference: transmitter coincides with receiver");
        total += tx.power * fades[i] * path_loss(r, alpha);
    }
    return total;
}

/// P*h*l / (gamma*I + N). MAC gating (transmitter on, receiver off) is the caller's job.
inline double sinr(double power, double fade, double loss, double interference_power, double gamma, double noise) {
    const double denom = gamma * interference_power + noise;
    if (!(denom > 0.0)) throw ModelError("sinr: zero denominator (N = 0 with no interference)");
    return power * fade * loss / denom;
}

}  // namespace ivsim
