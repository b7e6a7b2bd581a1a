#pragma once

// Statistical estimators used by the experiments and acceptance checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "ivsim/errors.hpp"
#include "ivsim/rng.hpp"

namespace ivsim::analysis {

struct MeanCI {
    double mean = 0.0;
    double se = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    std::size_t n = 0;

    [[nodiscard]] bool overlaps(const MeanCI& o) const noexcept { return lo <= o.hi && o.lo <= hi; }
};

inline constexpr double kZ95 = 1.959963984540054;

inline double mean(std::span<const double> xs) {
    if (xs.empty()) throw ParameterError("mean: no samples");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

inline double variance(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / static_cast<double>(xs.size() - 1);
}

/// Normal-approximation 95% interval assuming independent samples.
inline MeanCI mean_ci(std::span<const double> xs) {
    MeanCI ci;
    ci.n = xs.size();
    ci.mean = mean(xs);
    ci.se = std::sqrt(variance(xs) / static_cast<double>(xs.size()));
    ci.lo = ci.mean - kZ95 * ci.se;
    ci.hi = ci.mean + kZ95 * ci.se;
    return ci;
}

/// Batch-means 95% interval for a (possibly correlated) stationary series.
inline MeanCI batch_means_ci(std::span<const double> xs, std::size_t batches = 20) {
    if (xs.size() < batches * 2) throw ParameterError("batch_means_ci: too few samples for the batch count");
    const std::size_t len = xs.size() / batches;
    std::vector<double> means;
    for (std::size_t b = 0; b < batches; ++b) means.push_back(mean(xs.subspan(b * len, len)));
    MeanCI ci = mean_ci(means);
    ci.n = xs.size();
    return ci;
}

inline std::vector<double> running_mean(std::span<const double> xs) {
    std::vector<double> out(xs.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sum += xs[i];
        out[i] = sum / static_cast<double>(i + 1);
    }
    return out;
}

/// |m_n - m_{n/2}| / m_{n/2} for the running mean m: the relative change of
/// the running mean over the final half of the samples.
inline double running_mean_final_half_change(std::span<const double> xs) {
    if (xs.size() < 2) throw ParameterError("running mean change: need at least two samples");
    const auto rm = running_mean(xs);
    const double mid = rm[xs.size() / 2 - 1];
    return std::abs(rm.back() - mid) / std::abs(mid);
}

/// Empirical P[X > k] at each grid point.
inline std::vector<double> survival_function(std::span<const double> xs, std::span<const double> grid) {
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> out;
    out.reserve(grid.size());
    for (double k : grid) {
        const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), k);
        out.push_back(static_cast<double>(above) / static_cast<double>(sorted.size()));
    }
    return out;
}

/// Geometrically spaced grid on [lo, hi] for log-log survival plots.
inline std::vector<double> log_grid(double lo, double hi, std::size_t points) {
    std::vector<double> g;
    for (std::size_t i = 0; i < points; ++i)
        g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(points - 1)));
    return g;
}

/// Hill estimator of the tail index from the top `fraction` of the sample.
inline double hill_tail_index(std::span<const double> xs, double fraction = 0.10) {
    if (xs.size() < 30) throw ParameterError("hill_tail_index: need at least 30 samples");
    if (!(fraction > 0.0 && fraction < 1.0)) throw ParameterError("hill_tail_index: fraction must lie in (0,1)");
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const auto k = std::max<std::size_t>(2, static_cast<std::size_t>(fraction * static_cast<double>(sorted.size())));
    const double threshold = sorted[k];
    if (!(threshold > 0.0)) throw ParameterError("hill_tail_index: samples must be positive");
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) acc += std::log(sorted[i] / threshold);
    const double inv = acc / static_cast<double>(k);
    return inv > 0.0 ? 1.0 / inv : std::numeric_limits<double>::infinity();
}

struct HillSweep {
    double top5 = 0.0;
    double top10 = 0.0;
    double top20 = 0.0;
};

inline HillSweep hill_sweep(std::span<const double> xs) {
    return {hill_tail_index(xs, 0.05), hill_tail_index(xs, 0.10), hill_tail_index(xs, 0.20)};
}

/// One-sample Kolmogorov-Smirnov statistic against a CDF. Ties and jumps in
/// the CDF are handled by comparing left limits on both sides.
template <class Cdf>
double ks_statistic(std::span<const double> xs, Cdf cdf) {
    if (xs.empty()) throw ParameterError("ks_statistic: no samples");
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size();) {
        const double v = sorted[i];
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == v) ++j;
        const double below = static_cast<double>(i) / n, upto = static_cast<double>(j) / n;
        const double left = cdf(std::nextafter(v, -std::numeric_limits<double>::infinity()));
        d = std::max({d, std::abs(cdf(v) - upto), std::abs(left - below)});
        i = j;
    }
    return d;
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_two_sample(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw ParameterError("ks_two_sample: empty sample");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / x.size() - static_cast<double>(j) / y.size()));
    }
    return d;
}

/// Least-squares slope of ys against 1..n.
inline double velocity_slope(std::span<const double> ys) {
    if (ys.size() < 2) throw ParameterError("velocity_slope: need at least two points");
    const auto n = static_cast<double>(ys.size());
    const double tbar = (n + 1.0) / 2.0;
    const double ybar = mean(ys);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) {
        const double t = static_cast<double>(i + 1) - tbar;
        num += t * (ys[i] - ybar);
        den += t * t;
    }
    return num / den;
}

/// (max - min) / |last| over a series segment.
inline double relative_fluctuation(std::span<const double> ys) {
    if (ys.empty()) throw ParameterError("relative_fluctuation: empty series");
    const auto [lo, hi] = std::minmax_element(ys.begin(), ys.end());
    return (*hi - *lo) / std::abs(ys.back());
}

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Percentile bootstrap interval for sum(num) / sum(den), resampling index pairs.
inline Interval bootstrap_ratio_ci(std::span<const double> num, std::span<const double> den, StreamKey key,
                                   std::size_t resamples = 2000, double level = 0.95) {
    if (num.size() != den.size() || num.empty()) throw ParameterError("bootstrap: paired, non-empty samples required");
    Stream rng(key);
    const std::size_t n = num.size();
    std::vector<double> stats;
    stats.reserve(resamples);
    for (std::size_t b = 0; b < resamples; ++b) {
        double sn = 0.0, sd = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto j = std::min(n - 1, static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)));
            sn += num[j];
            sd += den[j];
        }
        stats.push_back(sn / sd);
    }
    std::sort(stats.begin(), stats.end());
    const double tail = 0.5 * (1.0 - level);
    auto at = [&](double q) {
        const auto idx = std::min(stats.size() - 1, static_cast<std::size_t>(q * static_cast<double>(stats.size())));
        return stats[idx];
    };
    return {at(tail), at(1.0 - tail)};
}

}  // namespace ivsim::analysis
