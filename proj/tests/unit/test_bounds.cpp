#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ivsim/analysis/bounds.hpp"

using namespace ivsim;
using namespace ivsim::analysis;

namespace {

// Independent oracle: integrate l(|z|) over a large disk in polar form with
// composite Simpson, plus the analytic far tail beyond the disk.
double campbell_oracle(double alpha) {
    const double R = 1000.0;
    const int n = 2'000'000;
    const double h = (R - 0.0) / n;
    auto f = [&](double r) { return 2.0 * std::numbers::pi * r * (r <= 1.0 ? 1.0 : std::pow(r, -alpha)); };
    double s = f(0.0) + f(R);
    for (int i = 1; i < n; ++i) s += f(i * h) * (i % 2 ? 4.0 : 2.0);
    const double disk = s * h / 3.0;
    return disk + 2.0 * std::numbers::pi * std::pow(R, 2.0 - alpha) / (alpha - 2.0);
}

}  // namespace

TEST(ConeNeighborLaw, Examples) {
    EXPECT_NEAR(nn_cone_cdf(1.0, 1.0, 6), 1.0 - std::exp(-std::numbers::pi / 6.0), 1e-15);
    EXPECT_NEAR(nn_cone_cdf(1.0, 1.0, 6), 0.40762, 1e-5);
    EXPECT_NEAR(nn_cone_median(1.0, 6), 1.1506, 1e-4);
    EXPECT_NEAR(nn_cone_cdf(nn_cone_median(2.0, 7), 2.0, 7), 0.5, 1e-14);
    const double total = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        [](double r) { return nn_cone_pdf(r, 1.0, 6); }, 0.0, std::numeric_limits<double>::infinity());
    EXPECT_NEAR(total, 1.0, 1e-8);
}

TEST(Campbell, MatchesQuadrature) {
    for (double alpha : {2.5, 3.0, 4.0, 6.0}) {
        const double oracle = campbell_oracle(alpha);
        EXPECT_NEAR(campbell_l_integral(alpha) / oracle, 1.0, 1e-6) << "alpha=" << alpha;
    }
    EXPECT_NEAR(campbell_l_integral(4.0), 2.0 * std::numbers::pi, 1e-14);
    EXPECT_NEAR(campbell_l_integral(3.0), 3.0 * std::numbers::pi, 1e-14);
    EXPECT_NEAR(campbell_l_integral(1e9), std::numbers::pi, 1e-6);
    EXPECT_THROW(campbell_l_integral(2.0), ConditionViolation);
}

TEST(LaplaceBound, Examples) {
    const Window w = Window::centered(10, 10);
    const PointSet lone(w, 1.0, {{0.0, 0.0}, {0.5, 0.0}}, 0);
    EXPECT_DOUBLE_EQ(laplace_lower_bound(lone, {0.5, 0.0}, 0.225, 4.0), 1.0);
    const PointSet one(w, 1.0, {{0.0, 0.0}, {0.5, 0.0}, {0.5, 2.0}}, 0);
    EXPECT_NEAR(laplace_lower_bound(one, {0.5, 0.0}, 0.225, 4.0), 1.0 - 0.225 / 16.0, 1e-14);
    EXPECT_NEAR(laplace_lower_bound(one, {0.5, 0.0}, 0.225, 4.0), 0.98594, 1e-5);
    EXPECT_THROW(laplace_lower_bound(one, {0.5, 0.0}, 1.0, 4.0), ConditionViolation);
}

TEST(LaplaceBound, IncreasesWhenInterfererMovesAway) {
    const Window w = Window::centered(20, 20);
    double prev = 0.0;
    for (double d = 1.5; d < 8.0; d += 0.5) {
        const PointSet ps(w, 1.0, {{0.0, 0.0}, {0.5, 0.0}, {0.5, d}, {-2.0, -1.0}}, 0);
        const double b = laplace_lower_bound(ps, {0.5, 0.0}, 0.225, 4.0);
        EXPECT_GT(b, prev);
        prev = b;
    }
}

TEST(JBound, NoInterferersExample) {
    SimParams p;
    const PointSet ps(Window::centered(50, 50), 1.0, {{0.0, 0.0}, {0.5, 0.0}}, 0);
    const double j = j_bound(ps, {0.5, 0.0}, p);
    EXPECT_NEAR(j, 0.9 * 0.1 * std::exp(-0.045), 1e-14);
    EXPECT_NEAR(j, 0.08604, 1e-5);
    EXPECT_NEAR(1.0 / j, 11.62, 0.01);
}

TEST(JBound, AddingPointsNeverIncreases) {
    SimParams p;
    std::vector<Vec2> pts{{0.0, 0.0}, {0.8, 0.3}};
    Stream rng(StreamKey(3));
    double prev = 1.0;
    for (int i = 0; i < 30; ++i) {
        const PointSet ps(Window::centered(50, 50), 1.0, pts, 0);
        const double j = j_bound(ps, {0.8, 0.3}, p);
        EXPECT_GT(j, 0.0);
        EXPECT_LT(j, 1.0);
        EXPECT_LE(j, prev);
        prev = j;
        pts.push_back({rng.uniform(-10, 10), rng.uniform(-10, 10)});
    }
}

TEST(MeanDelayBound, FiniteUnderCondition) {
    SimParams p;
    const double b = mean_exit_time_bound(p);
    EXPECT_TRUE(std::isfinite(b));
    EXPECT_GT(b, 1.0 / (p.epsilon * (1.0 - p.epsilon)));
    p.beta = 2.5;
    p.gamma = 0.5;
    EXPECT_THROW(mean_exit_time_bound(p), ConditionViolation);
}

TEST(Chi, BasicProperties) {
    EXPECT_NEAR(chi(0.0, 1.0, 6), 1.0, 1e-9);
    // chi'(0) = E[R cos theta]: central difference.
    const double h = 1e-4;
    const double deriv = (chi(h, 1.0, 6) - chi(-h, 1.0, 6)) / (2 * h);
    EXPECT_NEAR(deriv, mean_hop_progress(1.0, 6), 1e-6);
    // Jensen: chi(nu) >= exp(nu * xi).
    for (double nu : {-3.0, -1.0, 0.5, 2.0})
        EXPECT_GE(chi(nu, 1.0, 6), std::exp(nu * mean_hop_progress(1.0, 6)));
}

TEST(Chernoff, RateProperties) {
    const double xi = mean_hop_progress(1.0, 6);
    EXPECT_THROW(chernoff_zeta(xi, 1.0, 6), ConditionViolation);
    EXPECT_THROW(chernoff_zeta(0.0, 1.0, 6), ParameterError);
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 1; i < 20; ++i) {
        const double z = chernoff_zeta(xi * i / 20.0, 1.0, 6).zeta;
        EXPECT_GE(z, 0.0);
        EXPECT_LE(z, prev + 1e-9);
        prev = z;
    }
    EXPECT_GT(chernoff_zeta(xi / 10, 1.0, 6).zeta, chernoff_zeta(xi / 2, 1.0, 6).zeta);
    const double g0 = g_function(0.0, 0.225, 4.0);
    EXPECT_NEAR(g0, -4.0 * std::log(1.0 - 0.225), 1e-14);
    const auto d = delta_with_rate_above(g0, 1.0, 6);
    ASSERT_TRUE(d);
    EXPECT_GT(chernoff_zeta(*d, 1.0, 6).zeta, g0);
}

TEST(Chernoff, EmpiricalLowerTailBelowBound) {
    const double xi = mean_hop_progress(1.0, 6);
    const double delta = xi / 2.0;
    const double zeta = chernoff_zeta(delta, 1.0, 6).zeta;
    const ConePartition cp(6);
    for (int n : {10, 20}) {
        int hits = 0;
        const int chains = 10000;
        for (int c = 0; c < chains; ++c) {
            Stream rng(StreamKey(static_cast<std::uint64_t>(n)).child(static_cast<std::uint64_t>(c)));
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += sample_hop(1.0, cp, rng).progress();
            hits += s < n * delta;
        }
        EXPECT_LE(hits / 10000.0, std::exp(-zeta * n) + 3.0 * std::sqrt(std::exp(-zeta * n) / 10000.0));
    }
}
