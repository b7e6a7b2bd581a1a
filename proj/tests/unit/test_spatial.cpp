#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "ivsim/spatial.hpp"

using namespace ivsim;

namespace {

// Oracle: cone of an angle by direct arithmetic on the half-open intervals.
int reference_cone(double angle, int m) {
    const double width = 2.0 * std::numbers::pi / m;
    double a = angle + width / 2.0;
    a = std::fmod(a, 2.0 * std::numbers::pi);
    if (a < 0) a += 2.0 * std::numbers::pi;
    return static_cast<int>(std::floor(a / width)) % m;
}

}  // namespace

TEST(ConePartition, RejectsTooFewCones) {
    EXPECT_THROW(ConePartition(4), ParameterError);
    EXPECT_THROW(ConePartition(65), ParameterError);
    EXPECT_NO_THROW(ConePartition(5));
}

TEST(ConePartition, SixConeExamples) {
    const ConePartition cp(6);
    EXPECT_EQ(cp.cone_of({1.0, 0.0}), 0);
    EXPECT_EQ(cp.cone_of({0.0, 1.0}), 2);  // pi/2 is the inclusive lower edge of cone 2
    EXPECT_EQ(cp.cone_of({-1.0, 0.0}), 3);
    EXPECT_EQ(cp.cone_of({0.0, -1.0}), 5);
    EXPECT_EQ(cp.cone_of({1.0, 1.0}), 1);
    // Lower edges are inclusive, upper edges exclusive.
    EXPECT_EQ(cp.cone_of_angle(std::numbers::pi / 6.0), 1);
    EXPECT_EQ(cp.cone_of_angle(-std::numbers::pi / 6.0), 0);
}

TEST(ConePartition, SweepMatchesReference) {
    for (int m : {5, 6, 7, 12}) {
        const ConePartition cp(m);
        for (int i = 0; i < 7200; ++i) {
            const double a = -std::numbers::pi + (i + 0.37) * 2.0 * std::numbers::pi / 7200.0;
            ASSERT_EQ(cp.cone_of_angle(a), reference_cone(a, m)) << "m=" << m << " angle=" << a;
        }
    }
}

TEST(ConePartition, EveryDirectionInExactlyOneCone) {
    const ConePartition cp(7);
    for (int i = 0; i < 1000; ++i) {
        const double a = i * 0.00628318;
        const Vec2 d{std::cos(a), std::sin(a)};
        int hits = 0;
        for (int k = 0; k < 7; ++k) hits += cp.contains(k, d) ? 1 : 0;
        ASSERT_EQ(hits, 1);
    }
}

TEST(ConeIndex, CoincidentTargetThrows) {
    const ConePartition cp(6);
    EXPECT_THROW(cone_index(cp, {1.0, 1.0}, {1.0, 1.0}), GeometryError);
}

TEST(PointSet, ValidatesInput) {
    const auto w = Window::centered(10, 10);
    EXPECT_THROW(PointSet(w, 0.0, {}), ParameterError);
    EXPECT_THROW(PointSet(w, 1.0, {{20.0, 0.0}}), ParameterError);
    EXPECT_THROW(PointSet(w, 1.0, {{1.0, 1.0}, {1.0, 1.0}}), GeometryError);
    EXPECT_THROW(PointSet(w, 1.0, {{1.0, 1.0}}, 3), ParameterError);
    EXPECT_THROW(Window::centered(-1, 1), ParameterError);
}

TEST(SamplePpp, CountMeanAndVariance) {
    // Poisson(lambda*A): mean and variance both lambda*A.
    const auto w = Window::centered(10, 10);
    const int reps = 4000;
    double s = 0, s2 = 0;
    for (int i = 0; i < reps; ++i) {
        Stream rng(StreamKey(11).child(static_cast<std::uint64_t>(i)));
        const double n = static_cast<double>(sample_ppp(0.5, w, rng).size());
        s += n;
        s2 += n * n;
    }
    const double mean = s / reps;
    const double var = s2 / reps - mean * mean;
    EXPECT_NEAR(mean, 50.0, 4.0 * std::sqrt(50.0 / reps));
    EXPECT_NEAR(var, 50.0, 5.0);
}

TEST(SamplePpp, PoissonSmallMeanLaw) {
    Stream rng(StreamKey(5));
    std::vector<int> counts(8, 0);
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const auto k = rng.poisson(1.5);
        if (k < counts.size()) ++counts[k];
    }
    double p = std::exp(-1.5);
    for (int k = 0; k < 6; ++k) {
        EXPECT_NEAR(counts[k] / double(n), p, 0.005) << "k=" << k;
        p *= 1.5 / (k + 1);
    }
}

TEST(PalmCondition, AddsTaggedAtom) {
    Stream rng(StreamKey(3));
    const auto ps = sample_ppp(1.0, Window::centered(10, 10), rng);
    const auto palm = palm_condition(ps, {0.0, 0.0});
    EXPECT_EQ(palm.size(), ps.size() + 1);
    EXPECT_EQ(palm.tagged_point(), (Vec2{0.0, 0.0}));
    EXPECT_THROW(palm_condition(ps, {100.0, 0.0}), ParameterError);
}

TEST(NearestInCone, GridMatchesBruteForce) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Stream rng{StreamKey(seed)};
        const double lambda = seed % 2 ? 0.5 : 2.0;
        const auto ps = sample_ppp(lambda, Window::centered(30, 20), rng);
        const ConePartition cp(static_cast<int>(5 + seed % 4));
        const ConeNeighborIndex idx(ps, cp);
        std::vector<double> dists(static_cast<std::size_t>(cp.count()));
        for (std::size_t i = 0; i < ps.size(); i += 3) {
            idx.cone_distances(ps[i], dists);
            for (int k = 0; k < cp.count(); ++k) {
                const auto brute = nearest_in_cone(ps, ps[i], k, cp);
                const auto fast = idx.nearest(ps[i], k);
                ASSERT_EQ(brute.has_value(), fast.has_value());
                if (!brute) {
                    ASSERT_TRUE(std::isinf(dists[static_cast<std::size_t>(k)]));
                    continue;
                }
                ASSERT_EQ(brute->index, fast->index);
                ASSERT_DOUBLE_EQ(brute->distance, dists[static_cast<std::size_t>(k)]);
            }
        }
    }
}

TEST(NearestInCone, TieBreakIsLexicographic) {
    const auto w = Window::centered(10, 10);
    const PointSet ps(w, 1.0, {{0.0, 0.0}, {1.0, 0.1}, {1.0, -0.1}});
    const ConePartition cp(6);
    const auto nb = nearest_in_cone(ps, {0.0, 0.0}, 0, cp);
    ASSERT_TRUE(nb);
    EXPECT_EQ(nb->index, 2u);
    EXPECT_EQ(ConeNeighborIndex(ps, cp).nearest({0.0, 0.0}, 0)->index, 2u);
}

TEST(NearestInCone, EmptyConeGivesNothing) {
    const PointSet ps(Window::centered(10, 10), 1.0, {{0.0, 0.0}, {-1.0, 0.0}});
    const ConePartition cp(6);
    EXPECT_FALSE(nearest_in_cone(ps, {0.0, 0.0}, 0, cp));
    EXPECT_FALSE(ConeNeighborIndex(ps, cp).nearest({0.0, 0.0}, 0));
}

TEST(SampleHop, MatchesConeNeighborLaw) {
    // Oracle: P[R <= 1] = 1 - exp(-lambda*pi/m); theta uniform on (-phi, phi).
    const ConePartition cp(6);
    Stream rng(StreamKey(21));
    const int n = 100000;
    int below = 0;
    double theta_sum = 0.0, theta_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto h = sample_hop(1.0, cp, rng);
        below += h.r <= 1.0;
        theta_sum += h.theta;
        theta_sq += h.theta * h.theta;
        ASSERT_LT(std::abs(h.theta), cp.half_angle());
    }
    EXPECT_NEAR(below / double(n), 1.0 - std::exp(-std::numbers::pi / 6.0), 0.005);
    EXPECT_NEAR(theta_sum / n, 0.0, 0.005);
    const double phi = cp.half_angle();
    EXPECT_NEAR(theta_sq / n, phi * phi / 3.0, 0.003);
}
