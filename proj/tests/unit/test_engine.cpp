#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "ivsim/engine.hpp"

using namespace ivsim;

namespace {

SimParams small_params() {
    SimParams p;
    p.window_x = 50;
    p.window_y = 50;
    p.guard = 20;
    p.horizon = 10000;
    return p;
}

// Tagged node at the origin, receiver at (0.5, 0), nothing else.
World pair_world(const SimParams& p) {
    PointSet ps(Window::centered(p.window_x, p.window_y), p.lambda, {{0.0, 0.0}, {0.5, 0.0}}, 0);
    return World(std::move(ps), p);
}

double ks_uniform(std::vector<double> xs, double lo, double hi) {
    std::sort(xs.begin(), xs.end());
    double d = 0.0;
    const double n = static_cast<double>(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double f = (xs[i] - lo) / (hi - lo);
        d = std::max({d, f - i / n, (i + 1) / n - f});
    }
    return d;
}

}  // namespace

TEST(ExitTime, GeometricWithoutInterferers) {
    // Oracle: success per slot = p_o * (1 - q_rx) * exp(-mu*beta*N/c), with
    // p_o = 0.9 (d = 0.5 < 1) and q_rx = 0.9 for the receiver's own link.
    const auto p = small_params();
    World w = pair_world(p);
    ExitTimeProblem prob(w, 0);
    EXPECT_EQ(prob.interferers().size(), 0u);
    const double q = 0.9 * 0.1 * std::exp(-0.5 * 0.1 * 0.9);
    const int n = 20000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto r = prob.replay(StreamKey(1).child(static_cast<std::uint64_t>(i)), p.horizon);
        ASSERT_FALSE(r.censored);
        ASSERT_GE(r.slots, 1u);
        s += static_cast<double>(r.slots);
    }
    const double se = std::sqrt((1.0 - q) / (q * q) / n);
    EXPECT_NEAR(s / n, 1.0 / q, 3.0 * se);
}

TEST(ExitTime, ZeroThresholdSucceedsOnFirstUsableSlot) {
    auto p = small_params();
    p.beta = 0.0;
    World w = pair_world(p);
    ExitTimeProblem prob(w, 0);
    for (std::uint64_t rep = 0; rep < 200; ++rep) {
        HopContention hop(p, StreamKey(8).child(rep), prob.link(), prob.interferers());
        for (;;) {
            const auto out = hop.step();
            const bool usable = out.tagged_on && !out.receiver_on;
            ASSERT_EQ(out.success, usable);
            if (usable) break;
        }
    }
}

TEST(ExitTime, HorizonOneCensorsEveryRun) {
    auto p = small_params();
    p.horizon = 1;
    World w = pair_world(p);
    ExitTimeProblem prob(w, 0);
    int censored = 0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        const auto r = prob.replay(StreamKey(3).child(rep), p.horizon);
        EXPECT_EQ(r.slots, 1u);
        censored += r.censored;
    }
    EXPECT_EQ(censored, 100);
}

TEST(ExitTime, EmptyDestinationConeThrows) {
    const auto p = small_params();
    PointSet ps(Window::centered(50, 50), 1.0, {{0.0, 0.0}, {-1.0, 0.0}}, 0);
    World w(std::move(ps), p);
    EXPECT_THROW(ExitTimeProblem(w, 0), NoNeighborError);
}

TEST(ExitTime, TaggedSettingFrozenWithinHop) {
    const auto p = small_params();
    World w = sample_palm_world(p, StreamKey(4));
    ExitTimeProblem prob(w, *w.points().tagged_index());
    HopContention hop(p, StreamKey(5), prob.link(), prob.interferers());
    const auto first = hop.tagged();
    for (int i = 0; i < 200; ++i) {
        hop.step();
        ASSERT_EQ(hop.tagged().power, first.power);
        ASSERT_EQ(hop.tagged().prob, first.prob);
    }
    EXPECT_NEAR(first.power * first.prob, p.avg_power, 1e-12);
}

TEST(ExitTime, Deterministic) {
    const auto p = small_params();
    for (std::uint64_t rep = 0; rep < 5; ++rep) {
        const auto a = run_exit_time(p, StreamKey(99).child(rep));
        const auto b = run_exit_time(p, StreamKey(99).child(rep));
        EXPECT_EQ(a.slots, b.slots);
        EXPECT_EQ(a.censored, b.censored);
    }
}

TEST(ExitTime, InterferenceRadiusIgnoresFarNodes) {
    auto p = small_params();
    World w = sample_palm_world(p, StreamKey(12));
    InterfererSet all, near;
    const auto src = *w.points().tagged_index();
    const auto dst = w.destination(src, 0)->index;
    w.build_interferers(src, dst, nullptr, all);
    p.interference_radius = 10.0;
    World w2 = sample_palm_world(p, StreamKey(12));
    w2.build_interferers(src, dst, nullptr, near);
    std::size_t expected = 0;
    for (std::size_t i = 0; i < w.points().size(); ++i)
        if (i != src && i != dst && distance(w.points()[i], w.points()[dst]) <= 10.0) ++expected;
    EXPECT_EQ(near.size(), expected);
    EXPECT_EQ(all.size(), w.points().size() - 2);
}

TEST(Stationary, RefillCountIsPoissonSectorArea) {
    const ConePartition cp(6);
    const Window big = Window::centered(100, 100);
    const double radius = 3.0, mean = 1.0 * cp.half_angle() * radius * radius;
    const int n = 20000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        VirtualInterferers v;
        const double k = static_cast<double>(
            v.refill_sector({0.0, 0.0}, radius, 1.0, cp, big, StreamKey(6).child(static_cast<std::uint64_t>(i))));
        for (const auto& pt : v.points()) {
            ASSERT_LT(pt.norm(), radius);
            ASSERT_EQ(cp.cone_of(pt), 0);
        }
        s += k;
        s2 += k * k;
    }
    const double m = s / n;
    EXPECT_NEAR(m, mean, 4.0 * std::sqrt(mean / n));
    EXPECT_NEAR(s2 / n - m * m, mean, 0.15);
}

TEST(Stationary, BackwardChainStaysBehindWithinDepth) {
    const ConePartition cp(6);
    VirtualInterferers v;
    const Window w{0.0, 200.0, -50.0, 50.0};
    v.seed_backward_chain({20.0, 0.0}, 1.0, cp, 20.0, w, StreamKey(2));
    ASSERT_GT(v.size(), 5u);
    double prev_x = 20.0;
    for (const auto& p : v.points()) {
        EXPECT_LT(p.x, prev_x);
        EXPECT_GE(p.x, 0.0);
        prev_x = p.x;
    }
}

TEST(Traversal, CoupledEnhancedDelaysDominate) {
    auto p = small_params();
    p.window_x = 160;
    p.window_y = 60;
    p.horizon = 100000;
    p.stationary_mode = true;
    p.interference_radius = p.guard;
    std::size_t hops = 0;
    for (std::uint64_t rep = 0; rep < 3; ++rep) {
        const auto trace = run_tagged_packet(p, StreamKey(17).child(rep));
        EXPECT_GT(trace.virtual_points_added, 0u);
        for (const auto& h : trace.hops) {
            ASSERT_TRUE(h.enhanced_delay);
            ASSERT_GE(*h.enhanced_delay, h.delay) << "hop " << h.index;
        }
        hops += trace.hops.size();
    }
    EXPECT_GT(hops, 100u);
}

TEST(Traversal, GeometryInvariants) {
    auto p = small_params();
    p.window_x = 300;
    p.window_y = 60;
    p.horizon = 200000;
    p.interference_radius = p.guard;
    const ConePartition cp(p.cones);
    const auto trace = run_tagged_packet(p, StreamKey(23));
    ASSERT_GT(trace.hops.size(), 50u);
    EXPECT_EQ(trace.reason, Termination::guard_exit);
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < trace.hops.size(); ++i) {
        const auto& h = trace.hops[i];
        EXPECT_GT(h.r, 0.0);
        EXPECT_LT(std::abs(h.theta), cp.half_angle());
        EXPECT_GE(h.delay, 1u);
        EXPECT_GT(h.destination.x, h.source.x);
        if (i > 0) {
            EXPECT_EQ(h.source, trace.hops[i - 1].destination);
        }
        total += h.delay;
    }
    EXPECT_EQ(total, trace.total_slots());
    EXPECT_TRUE(sectors_disjoint(trace, cp));
}

TEST(Traversal, SectorCheckDetectsOverlap) {
    PacketTrace t;
    HopRecord a, b;
    a.source = {0.0, 0.0};
    a.r = 2.0;
    b.index = 1;
    b.source = {0.5, 0.0};
    b.r = 2.0;
    t.hops = {a, b};
    EXPECT_FALSE(sectors_disjoint(t, ConePartition(6)));
    t.hops[1].source = {2.0, 0.0};
    EXPECT_TRUE(sectors_disjoint(t, ConePartition(6)));
}

TEST(Traversal, Deterministic) {
    auto p = small_params();
    p.window_x = 120;
    p.stationary_mode = true;
    p.interference_radius = p.guard;
    const auto a = run_tagged_packet(p, StreamKey(5));
    const auto b = run_tagged_packet(p, StreamKey(5));
    ASSERT_EQ(a.hops.size(), b.hops.size());
    EXPECT_EQ(a.distance, b.distance);
    for (std::size_t i = 0; i < a.hops.size(); ++i) {
        EXPECT_EQ(a.hops[i].delay, b.hops[i].delay);
        EXPECT_EQ(a.hops[i].enhanced_delay, b.hops[i].enhanced_delay);
    }
}

TEST(Traversal, HopLawMatchesConeNeighborDensity) {
    // Path only; contention does not affect which relay is chosen.
    auto p = small_params();
    // Tall strip so the path rarely drifts near the y edges.
    p.window_x = 1000;
    p.window_y = 200;
    std::vector<double> r, theta;
    const ConePartition cp(p.cones);
    for (std::uint64_t rep = 0; r.size() < 40000; ++rep) {
        World w = sample_strip_world(p, StreamKey(40).child(rep));
        std::size_t cur = *w.points().tagged_index();
        while (w.points()[cur].x < p.window_x - p.guard) {
            const auto nb = w.destination(cur, 0);
            ASSERT_TRUE(nb);
            const Vec2 d = nb->point - w.points()[cur];
            r.push_back(nb->distance);
            theta.push_back(std::asin(d.y / nb->distance));
            cur = nb->index;
        }
    }
    std::vector<double> u;
    for (double x : r) u.push_back(1.0 - std::exp(-std::numbers::pi * x * x / p.cones));
    EXPECT_LT(ks_uniform(u, 0.0, 1.0), 0.02);
    EXPECT_LT(ks_uniform(theta, -cp.half_angle(), cp.half_angle()), 0.02);
    double mr = 0, mt = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        mr += r[i];
        mt += theta[i];
    }
    mr /= r.size();
    mt /= r.size();
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        sxy += (r[i] - mr) * (theta[i] - mt);
        sxx += (r[i] - mr) * (r[i] - mr);
        syy += (theta[i] - mt) * (theta[i] - mt);
    }
    EXPECT_LT(std::abs(sxy / std::sqrt(sxx * syy)), 0.02);
    // Mean progress: oracle from one-dimensional quadrature (midpoint rule).
    double er = 0.0;
    const double k = std::numbers::pi / p.cones;
    for (int i = 0; i < 200000; ++i) {
        const double x = (i + 0.5) * 1e-4;
        er += x * 2.0 * k * x * std::exp(-k * x * x) * 1e-4;
    }
    const double phi = cp.half_angle();
    const double oracle = er * std::sin(phi) / phi;
    double prog = 0;
    for (std::size_t i = 0; i < r.size(); ++i) prog += r[i] * std::cos(theta[i]);
    EXPECT_NEAR(prog / r.size() / oracle, 1.0, 0.01);
}

TEST(Traversal, NearZeroInterferenceMatchesRenewalOracle) {
    // With negligible interference each hop delay is geometric with success
    // probability p_o * (1 - q_rx) * exp(-mu*beta*N/c), where q_rx is the
    // receiver's own transmit probability (single option in worst-case mode).
    auto p = small_params();
    p.window_x = 240;
    p.window_y = 50;
    p.gamma = 1e-9;
    p.horizon = 1'000'000;
    p.cone_choice = ConeChoiceModel::worst_case;
    p.interference_radius = 5.0;
    World w = sample_strip_world(p, StreamKey(61));
    const auto trace = traverse(w, *w.points().tagged_index(), StreamKey(62));
    ASSERT_EQ(trace.reason, Termination::guard_exit);
    const auto& ps = w.points();
    auto index_of = [&](Vec2 x) {
        for (std::size_t i = 0; i < ps.size(); ++i)
            if (ps[i] == x) return i;
        return ps.size();
    };
    const double noise_factor = std::exp(-p.mu * p.beta * p.noise * (1.0 - p.epsilon) / p.avg_power);
    double excess = 0.0, var = 0.0;
    for (const auto& h : trace.hops) {
        const auto link = w.link(index_of(h.source), index_of(h.destination));
        ASSERT_EQ(link.receiver_options.size(), 1u);
        const double q = link.tagged.prob * (1.0 - link.receiver_options[0].prob) * noise_factor;
        excess += static_cast<double>(h.delay) - 1.0 / q;
        var += (1.0 - q) / (q * q);
    }
    EXPECT_LT(std::abs(excess / std::sqrt(var)), 4.0);

    const auto v = information_velocity(trace);
    EXPECT_GT(v.velocity, 0.0);
}

TEST(Velocity, StationaryPacketHasZeroVelocity) {
    PacketTrace t;
    t.distance.assign(1000, 0.0);
    EXPECT_EQ(information_velocity(t).velocity, 0.0);
    EXPECT_THROW(information_velocity(PacketTrace{}), ParameterError);
}

TEST(SimParams, Validation) {
    SimParams p;
    EXPECT_NO_THROW(p.check());
    p.cones = 4;
    EXPECT_THROW(p.check(), ParameterError);
    p = {};
    p.window_x = 39;
    EXPECT_THROW(p.check(), ParameterError);
    p = {};
    p.epsilon = 1.0;
    EXPECT_THROW(p.check(), ParameterError);
    p = {};
    EXPECT_NEAR(truncated_interference_tail(1.0, 1.0, 1.0, 4.0, 20.0), std::numbers::pi / 400.0, 1e-15);
}
