#pragma once

// Counter-based random streams.
//
// Every draw is a pure function of (key, counter). Keys are derived from a
// master seed by hashing a path of tags, so a new consumer of randomness
// never shifts the draws of an existing one, and two simulations that share
// a key path see identical values (used to couple paired runs).

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>

namespace ivsim {

/// SplitMix64 finalizer; a bijection on 64-bit words with full avalanche.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Purpose tags for key derivation. Values are part of the reproducibility
/// contract: changing one changes every downstream draw.
enum class Purpose : std::uint64_t {
    replication = 0x01,
    point_process = 0x02,
    mac = 0x03,
    fade = 0x04,
    cone_choice = 0x05,
    hop = 0x06,
    backward_chain = 0x07,
    refill = 0x08,
    replay = 0x09,
    bootstrap = 0x0a,
    sweep_point = 0x0b,
    phi = 0x0c,
    diagnostics = 0x0d,
};

/// A node in the key tree. Cheap to copy; children are derived by hashing.
class StreamKey {
public:
    constexpr StreamKey() noexcept = default;
    constexpr explicit StreamKey(std::uint64_t seed) noexcept : value_(mix64(seed ^ 0x6a09e667f3bcc909ULL)) {}

    [[nodiscard]] constexpr StreamKey child(std::uint64_t tag) const noexcept {
        StreamKey k;
        k.value_ = mix64(value_ + 0x9e3779b97f4a7c15ULL * (tag + 1));
        return k;
    }
    [[nodiscard]] constexpr StreamKey child(Purpose p) const noexcept {
        return child(static_cast<std::uint64_t>(p) << 56);
    }
    [[nodiscard]] constexpr StreamKey child(std::initializer_list<std::uint64_t> tags) const noexcept {
        StreamKey k = *this;
        for (auto t : tags) k = k.child(t);
        return k;
    }

    [[nodiscard]] constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
        return mix64(mix64(value_ ^ counter) + 0x9e3779b97f4a7c15ULL);
    }
    /// Uniform on the open interval (0, 1).
    [[nodiscard]] constexpr double uniform(std::uint64_t counter) const noexcept {
        return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
    }
    [[nodiscard]] double exponential(std::uint64_t counter, double rate) const noexcept {
        return -std::log(uniform(counter)) / rate;
    }

    [[nodiscard]] constexpr std::uint64_t value() const noexcept { return value_; }

private:
    std::uint64_t value_ = 0;
};

/// Sequential view over a key: satisfies UniformRandomBitGenerator so it can
/// feed <random> distributions, and exposes the same closed-form helpers.
class Stream {
public:
    using result_type = std::uint64_t;

    constexpr explicit Stream(StreamKey key) noexcept : key_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }
    constexpr result_type operator()() noexcept { return key_.bits(counter_++); }

    double uniform() noexcept { return key_.uniform(counter_++); }
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
    double exponential(double rate) noexcept { return key_.exponential(counter_++, rate); }

    /// Poisson variate: CDF inversion, with large means split into a sum of
    /// independent Poisson(30) chunks so the inversion stays well conditioned.
    std::uint64_t poisson(double mean) noexcept {
        std::uint64_t total = 0;
        constexpr double chunk = 30.0;
        while (mean > chunk) {
            total += poisson_small(chunk);
            mean -= chunk;
        }
        return total + poisson_small(mean);
    }

    [[nodiscard]] constexpr StreamKey key() const noexcept { return key_; }

private:
    std::uint64_t poisson_small(double mean) noexcept {
        if (mean <= 0.0) return 0;
        // Sequential inversion of the CDF.
        const double u = uniform();
        double p = std::exp(-mean);
        double cdf = p;
        std::uint64_t k = 0;
        while (u > cdf && k < 1000) {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }

    StreamKey key_;
    std::uint64_t counter_ = 0;
};

}  // namespace ivsim
