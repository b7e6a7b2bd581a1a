#pragma once

// Transmission policies: nearest-neighbor power control, the fixed-power
// ALOHA baseline, Bernoulli MAC and interferer cone choice.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>

#include "ivsim/channel.hpp"
#include "ivsim/errors.hpp"
#include "ivsim/rng.hpp"

namespace ivsim {

/// Power c / l(d) towards the cone-nearest neighbor at distance d, with
/// transmit probability M / P so that p * P = M in every slot.
struct PowerControlPolicy {
    double avg_power = 1.0;  ///< M
    double epsilon = 0.1;

    [[nodiscard]] double c() const noexcept { return avg_power / (1.0 - epsilon); }
    void check() const {
        detail::require(avg_power > 0.0, "power control: M must be positive");
        detail::require(epsilon > 0.0 && epsilon < 1.0, "power control: epsilon must lie in (0,1)");
    }
};

struct AlohaPolicy {
    double power = 2.0;
    double prob = 0.5;

    void check() const {
        detail::require(power > 0.0, "aloha: power must be positive");
        detail::require(prob > 0.0 && prob < 1.0, "aloha: transmit probability must lie in (0,1)");
    }
};

enum class ConeChoiceModel { uniform_random, worst_case };

struct TransmitSetting {
    double power = 0.0;
    double prob = 0.0;
};

inline TransmitSetting power_and_prob(const PowerControlPolicy& policy, double nn_distance, double alpha) {
    if (!(nn_distance > 0.0)) throw ParameterError("power_and_prob: neighbor distance must be positive");
    const double power = policy.c() / path_loss(nn_distance, alpha);
    return {power, policy.avg_power / power};
}

/// Counter-based Bernoulli(p) decision from a uniform variate in (0,1).
constexpr bool mac_on(double p, double uniform) noexcept { return uniform < p; }

inline bool mac_draw(double p, Stream& rng) {
    if (!(p >= 0.0 && p < 1.0)) throw ParameterError("mac_draw: probability must lie in [0,1)");
    return mac_on(p, rng.uniform());
}

/// Per-interferer Laplace factor E[exp(-a 1_z P h l)] for a = mu*beta*gamma/c:
/// (1 - p) + p * c / (c + beta*gamma*l*P).
inline double interferer_laplace_factor(TransmitSetting s, double loss, double c, double beta_gamma) noexcept {
    return (1.0 - s.prob) + s.prob * c / (c + beta_gamma * loss * s.power);
}

/// Cone with the closest neighbor (lowest index on ties); none if all are empty.
/// Under power control this is the cone minimizing the Laplace factor above,
/// i.e. the interferer's worst-case choice for any receiver.
inline std::optional<int> closest_cone(std::span<const double> cone_distances) noexcept {
    std::optional<int> best;
    for (std::size_t k = 0; k < cone_distances.size(); ++k) {
        if (!std::isfinite(cone_distances[k])) continue;
        if (!best || cone_distances[k] < cone_distances[static_cast<std::size_t>(*best)]) best = static_cast<int>(k);
    }
    return best;
}

/// Uniform choice among non-empty cones, driven by one uniform variate.
inline std::optional<int> uniform_nonempty_cone(std::span<const double> cone_distances, double uniform) noexcept {
    int nonempty = 0;
    for (double d : cone_distances) nonempty += std::isfinite(d) ? 1 : 0;
    if (nonempty == 0) return std::nullopt;
    int pick = std::min(nonempty - 1, static_cast<int>(uniform * nonempty));
    for (std::size_t k = 0; k < cone_distances.size(); ++k) {
        if (!std::isfinite(cone_distances[k])) continue;
        if (pick-- == 0) return static_cast<int>(k);
    }
    return std::nullopt;
}

/// Destination cone of interferer z for this slot. `cone_distances` holds z's
/// nearest-neighbor distance per cone (+inf when empty). An empty result means
/// z has no neighbor anywhere and stays silent.
inline std::optional<int> interferer_cone(ConeChoiceModel model, std::span<const double> cone_distances, Stream& rng) {
    switch (model) {
        case ConeChoiceModel::worst_case:
            return closest_cone(cone_distances);
        case ConeChoiceModel::uniform_random:
            return uniform_nonempty_cone(cone_distances, rng.uniform());
    }
    return std::nullopt;
}

/// Convenience overload that derives z's cone distances from a point set.
inline std::optional<int> interferer_cone(ConeChoiceModel model, Vec2 z, const ConeNeighborIndex& index, Stream& rng) {
    std::array<double, ConePartition::kMaxCones> buf{};
    const auto m = static_cast<std::size_t>(index.partition().count());
    index.cone_distances(z, std::span<double>(buf.data(), m));
    return interferer_cone(model, std::span<const double>(buf.data(), m), rng);
}

}  // namespace ivsim
