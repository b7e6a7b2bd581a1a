#pragma once

// Slotted-time simulation: per-hop contention, exit times, tagged-packet
// traversal and the virtual-interferer construction that makes per-hop
// delays stationary.
//
// All randomness inside a hop is counter-based and keyed by
// (hop key, node id, slot-within-hop). Two runs that share a hop key see the
// same MAC states, cone choices and fades for every node they have in common,
// which is what couples plain and enhanced delays.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ivsim/channel.hpp"
#include "ivsim/errors.hpp"
#include "ivsim/protocol.hpp"
#include "ivsim/rng.hpp"
#include "ivsim/spatial.hpp"

namespace ivsim {

enum class PolicyKind { power_control, aloha };
enum class Termination { horizon, guard_exit, dead_end };

inline const char* to_string(Termination t) noexcept {
    switch (t) {
        case Termination::horizon: return "horizon";
        case Termination::guard_exit: return "guard-exit";
        case Termination::dead_end: return "dead-end";
    }
    return "?";
}

/// Full model parameterization.
struct SimParams {
    double lambda = 1.0;
    double alpha = 4.0;
    double mu = 1.0;
    double beta = 0.5;
    double gamma = 0.5;
    double noise = 0.1;
    double avg_power = 1.0;  ///< M
    double epsilon = 0.1;
    int cones = 6;
    double window_x = 50.0;
    double window_y = 50.0;
    double guard = 20.0;
    std::uint64_t horizon = 10'000;
    std::uint64_t replications = 1'000;
    std::uint64_t seed = 1;
    PolicyKind policy = PolicyKind::power_control;
    ConeChoiceModel cone_choice = ConeChoiceModel::uniform_random;
    bool stationary_mode = false;
    double aloha_prob = 0.5;
    double aloha_power = 0.0;  ///< 0 selects M / aloha_prob (equal average power)
    /// Interferers farther than this from the receiver are ignored; 0 sums
    /// over the whole window.
    double interference_radius = 0.0;

    [[nodiscard]] ChannelParams channel() const noexcept { return {alpha, mu, noise, gamma, beta}; }
    [[nodiscard]] PowerControlPolicy power_control() const noexcept { return {avg_power, epsilon}; }
    [[nodiscard]] AlohaPolicy aloha() const noexcept {
        return {aloha_power > 0.0 ? aloha_power : avg_power / aloha_prob, aloha_prob};
    }
    /// Hypothesis of the finite-exit-time result.
    [[nodiscard]] bool finiteness_condition() const noexcept { return beta * gamma < 1.0; }

    void check() const {
        detail::require(lambda > 0.0 && std::isfinite(lambda), "lambda must be positive");
        channel().check();
        power_control().check();
        detail::require(cones >= ConePartition::kMinCones && cones <= ConePartition::kMaxCones,
                        "cones must lie in [5, 64]");
        detail::require(guard > 0.0, "guard must be positive");
        detail::require(window_x > 2.0 * guard && window_y > 2.0 * guard, "window sides must exceed 2 * guard");
        detail::require(horizon >= 1, "horizon must be at least 1");
        detail::require(interference_radius >= 0.0, "interference_radius must be non-negative");
        if (policy == PolicyKind::aloha) aloha().check();
    }
};

/// Expected interference lost by ignoring every transmitter farther than
/// `radius` from the receiver when each node's average power is M:
/// lambda * (M / mu) * 2*pi * radius^(2-alpha) / (alpha - 2), for radius >= 1.
inline double truncated_interference_tail(double lambda, double avg_power, double mu, double alpha, double radius) {
    detail::require(alpha > 2.0 && radius >= 1.0, "tail: require alpha > 2 and radius >= 1");
    return lambda * (avg_power / mu) * 2.0 * std::numbers::pi * std::pow(radius, 2.0 - alpha) / (alpha - 2.0);
}

struct SlotOutcome {
    std::uint64_t slot = 0;
    bool tagged_on = false;
    bool receiver_on = false;
    /// Evaluated only in slots where the link is usable (tagged on, receiver off); NaN otherwise.
    double interference = std::numeric_limits<double>::quiet_NaN();
    double sinr = 0.0;
    bool success = false;
};

struct ExitTimeResult {
    std::uint64_t slots = 0;
    bool censored = false;
};

/// Virtual nodes live in their own id range so they never collide with real ones.
inline constexpr std::uint64_t kVirtualIdBase = std::uint64_t{1} << 31;

namespace detail {
constexpr std::uint64_t slot_counter(std::uint64_t id, std::uint64_t slot) noexcept { return (id << 32) | slot; }
}  // namespace detail

/// Per-hop interferer table (structure of arrays). Each node carries the
/// transmit settings it may use this hop, one per candidate cone.
class InterfererSet {
public:
    void clear() {
        ids_.clear();
        loss_.clear();
        begin_.clear();
        count_.clear();
        options_.clear();
    }

    void add(std::uint64_t id, double loss, std::span<const TransmitSetting> options) {
        ids_.push_back(id);
        loss_.push_back(loss);
        begin_.push_back(static_cast<std::uint32_t>(options_.size()));
        count_.push_back(static_cast<std::uint32_t>(options.size()));
        options_.insert(options_.end(), options.begin(), options.end());
    }

    [[nodiscard]] std::size_t size() const noexcept { return ids_.size(); }
    [[nodiscard]] std::uint64_t id(std::size_t j) const noexcept { return ids_[j]; }
    [[nodiscard]] double loss(std::size_t j) const noexcept { return loss_[j]; }
    [[nodiscard]] std::span<const TransmitSetting> options(std::size_t j) const noexcept {
        return {options_.data() + begin_[j], count_[j]};
    }

    /// Setting node j uses in `slot`, or none if it has no neighbor.
    [[nodiscard]] std::optional<TransmitSetting> setting(std::size_t j, StreamKey cone_key, std::uint64_t slot) const noexcept {
        const auto cnt = count_[j];
        if (cnt == 0) return std::nullopt;
        if (cnt == 1) return options_[begin_[j]];
        const double u = cone_key.uniform(detail::slot_counter(ids_[j], slot));
        const auto pick = std::min<std::uint32_t>(cnt - 1, static_cast<std::uint32_t>(u * cnt));
        return options_[begin_[j] + pick];
    }

    /// Shot noise at the receiver in `slot`.
    [[nodiscard]] double sample(StreamKey hop_key, std::uint64_t slot, double mu) const noexcept {
        const StreamKey cone_key = hop_key.child(Purpose::cone_choice);
        const StreamKey mac_key = hop_key.child(Purpose::mac);
        const StreamKey fade_key = hop_key.child(Purpose::fade);
        double total = 0.0;
        for (std::size_t j = 0; j < ids_.size(); ++j) {
            const auto s = setting(j, cone_key, slot);
            if (!s) continue;
            const auto ctr = detail::slot_counter(ids_[j], slot);
            if (!mac_on(s->prob, mac_key.uniform(ctr))) continue;
            total += s->power * loss_[j] * fade_key.exponential(ctr, mu);
        }
        return total;
    }

private:
    std::vector<std::uint64_t> ids_;
    std::vector<double> loss_;
    std::vector<std::uint32_t> begin_;
    std::vector<std::uint32_t> count_;
    std::vector<TransmitSetting> options_;
};

/// Tagged transmitter -> receiver link for one hop.
struct LinkSpec {
    std::uint64_t source_id = 0;
    std::uint64_t receiver_id = 0;
    double distance = 0.0;
    TransmitSetting tagged;
    /// The receiver's own traffic: it is "on" (and deaf) with the probability
    /// of whichever setting it draws this slot.
    std::vector<TransmitSetting> receiver_options;
};

/// Slot-by-slot contention on one hop. The tagged (P, p) are frozen for the
/// lifetime of the object, i.e. until the packet leaves the source.
class HopContention {
public:
    HopContention(const SimParams& params, StreamKey hop_key, const LinkSpec& link, const InterfererSet& interferers)
        : hop_key_(hop_key),
          mac_key_(hop_key.child(Purpose::mac)),
          cone_key_(hop_key.child(Purpose::cone_choice)),
          fade_key_(hop_key.child(Purpose::fade)),
          link_(&link),
          interferers_(&interferers),
          channel_(params.channel()),
          loss_(path_loss(link.distance, params.alpha)),
          tagged_(link.tagged) {}

    SlotOutcome step() {
        SlotOutcome out;
        out.slot = ++slot_;
        out.tagged_on = mac_on(tagged_.prob, mac_key_.uniform(detail::slot_counter(link_->source_id, slot_)));
        out.receiver_on = receiver_on();
        if (!out.tagged_on || out.receiver_on) return out;
        out.interference = interferers_->sample(hop_key_, slot_, channel_.mu);
        const double h = fade_key_.exponential(detail::slot_counter(link_->source_id, slot_), channel_.mu);
        out.sinr = sinr(tagged_.power, h, loss_, out.interference, channel_.gamma, channel_.noise);
        out.success = out.sinr > channel_.beta;
        return out;
    }

    [[nodiscard]] std::uint64_t slot() const noexcept { return slot_; }
    [[nodiscard]] TransmitSetting tagged() const noexcept { return tagged_; }

private:
    bool receiver_on() const {
        const auto& opts = link_->receiver_options;
        if (opts.empty()) return false;
        const auto ctr = detail::slot_counter(link_->receiver_id, slot_);
        std::size_t pick = 0;
        if (opts.size() > 1) {
            pick = std::min(opts.size() - 1, static_cast<std::size_t>(cone_key_.uniform(ctr) * opts.size()));
        }
        return mac_on(opts[pick].prob, mac_key_.uniform(ctr));
    }

    StreamKey hop_key_, mac_key_, cone_key_, fade_key_;
    const LinkSpec* link_;
    const InterfererSet* interferers_;
    ChannelParams channel_;
    double loss_;
    const TransmitSetting tagged_;
    std::uint64_t slot_ = 0;
};

/// Runs a contention for at most `budget` slots. The result is min(T, budget);
/// reaching the cap counts as censored, so budget 1 censors every run.
inline ExitTimeResult run_contention(HopContention& hop, std::uint64_t budget) {
    while (hop.slot() + 1 < budget) {
        if (hop.step().success) return {hop.slot(), false};
    }
    return {budget, true};
}

/// Points added on top of the real process: the backward hop chain behind the
/// origin and the refills of each traversed sector. They interfere like real
/// nodes but never relay the tagged packet.
class VirtualInterferers {
public:
    [[nodiscard]] std::span<const Vec2> points() const noexcept { return points_; }
    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] std::uint64_t id(std::size_t i) const noexcept { return kVirtualIdBase + serial_[i]; }
    [[nodiscard]] std::uint64_t total_added() const noexcept { return next_serial_; }

    void add(Vec2 p) {
        points_.push_back(p);
        serial_.push_back(next_serial_++);
    }

    /// Drops points with x < x_cut.
    void prune_behind(double x_cut) {
        std::size_t w = 0;
        for (std::size_t i = 0; i < points_.size(); ++i) {
            if (points_[i].x < x_cut) continue;
            points_[w] = points_[i];
            serial_[w] = serial_[i];
            ++w;
        }
        points_.resize(w);
        serial_.resize(w);
    }

    /// Chains i.i.d. hop displacements backwards from `origin` until the
    /// cumulative x-depth exceeds `depth` or the chain leaves `window`.
    void seed_backward_chain(Vec2 origin, double lambda, const ConePartition& partition, double depth,
                             const Window& window, StreamKey key) {
        Stream rng(key);
        Vec2 next = origin;
        for (;;) {
            const auto hop = sample_hop(lambda, partition, rng);
            const Vec2 p = next - hop.vector();
            if (origin.x - p.x > depth || !window.contains(p)) break;
            add(p);
            next = p;
        }
    }

    /// Adds a PPP of intensity lambda on the sector (vertex + C_0) ∩ B(vertex, radius).
    /// Returns the number of points added.
    std::size_t refill_sector(Vec2 vertex, double radius, double lambda, const ConePartition& partition,
                              const Window& window, StreamKey key) {
        Stream rng(key);
        const double phi = partition.half_angle();
        const auto n = rng.poisson(lambda * phi * radius * radius);
        std::size_t added = 0;
        for (std::uint64_t i = 0; i < n; ++i) {
            const double r = radius * std::sqrt(rng.uniform());
            const double t = rng.uniform(-phi, phi);
            const Vec2 p = vertex + Vec2{r * std::cos(t), r * std::sin(t)};
            if (!window.contains(p)) continue;
            add(p);
            ++added;
        }
        return added;
    }

private:
    std::vector<Vec2> points_;
    std::vector<std::uint64_t> serial_;
    std::uint64_t next_serial_ = 0;
};

/// A fixed node realization plus the per-node cone-neighbor cache and the
/// policy that turns neighbor distances into transmit settings.
class World {
public:
    World(PointSet ps, const SimParams& params)
        : params_(params),
          partition_(params.cones),
          ps_(std::make_unique<PointSet>(std::move(ps))),
          index_(std::make_unique<ConeNeighborIndex>(*ps_, partition_)),
          cache_(ps_->size() * static_cast<std::size_t>(partition_.count()), kUnset) {
        params_.check();
        if (ps_->size() >= kVirtualIdBase) throw ParameterError("world: too many points");
    }

    [[nodiscard]] const PointSet& points() const noexcept { return *ps_; }
    [[nodiscard]] const ConePartition& partition() const noexcept { return partition_; }
    [[nodiscard]] const ConeNeighborIndex& index() const noexcept { return *index_; }
    [[nodiscard]] const SimParams& params() const noexcept { return params_; }

    /// Nearest-neighbor distance per cone for real node i, over real nodes only.
    std::span<const double> cone_distances(std::size_t i) {
        const auto m = static_cast<std::size_t>(partition_.count());
        std::span<double> slot(cache_.data() + i * m, m);
        if (slot[0] == kUnset) index_->cone_distances((*ps_)[i], slot);
        return slot;
    }

    /// Cone distances for an arbitrary location over real plus virtual nodes.
    void union_cone_distances(Vec2 x, const VirtualInterferers& virt, std::span<double> out) const {
        index_->cone_distances(x, out);
        for (const auto& v : virt.points()) {
            if (v == x) continue;
            const Vec2 d = v - x;
            auto& slot = out[static_cast<std::size_t>(partition_.cone_of(d))];
            slot = std::min(slot, d.norm());
        }
    }

    [[nodiscard]] std::optional<Neighbor> destination(std::size_t source, int cone) const {
        return index_->nearest((*ps_)[source], cone);
    }

    /// Candidate settings for a node with the given per-cone neighbor distances.
    void transmit_options(std::span<const double> dists, std::vector<TransmitSetting>& out) const {
        out.clear();
        if (params_.policy == PolicyKind::aloha) {
            const auto a = params_.aloha();
            out.push_back({a.power, a.prob});
            return;
        }
        const auto pc = params_.power_control();
        auto setting = [&](double d) {
            const double power = pc.c() / path_loss_unchecked(d, params_.alpha);
            return TransmitSetting{power, pc.avg_power / power};
        };
        if (params_.cone_choice == ConeChoiceModel::worst_case) {
            if (auto k = closest_cone(dists)) out.push_back(setting(dists[static_cast<std::size_t>(*k)]));
            return;
        }
        for (double d : dists)
            if (std::isfinite(d)) out.push_back(setting(d));
    }

    /// Tagged setting for a hop of length `distance`.
    [[nodiscard]] TransmitSetting tagged_setting(double distance) const {
        if (params_.policy == PolicyKind::aloha) {
            const auto a = params_.aloha();
            return {a.power, a.prob};
        }
        return power_and_prob(params_.power_control(), distance, params_.alpha);
    }

    /// Link spec for source -> receiver (both real indices).
    LinkSpec link(std::size_t source, std::size_t receiver) {
        LinkSpec l;
        l.source_id = source;
        l.receiver_id = receiver;
        l.distance = distance((*ps_)[source], (*ps_)[receiver]);
        l.tagged = tagged_setting(l.distance);
        transmit_options(cone_distances(receiver), l.receiver_options);
        return l;
    }

    /// Interferers at `receiver`: every real node except source and receiver,
    /// plus (optionally) virtual nodes, restricted to interference_radius
    /// when it is positive.
    void build_interferers(std::size_t source, std::size_t receiver, const VirtualInterferers* virt,
                           InterfererSet& out) {
        out.clear();
        const Vec2 rx = (*ps_)[receiver];
        const double radius = params_.interference_radius;
        std::vector<TransmitSetting> opts;
        auto add_real = [&](std::size_t i) {
            if (i == source || i == receiver) return;
            const double r = distance((*ps_)[i], rx);
            if (radius > 0.0 && r > radius) return;
            if (r == 0.0) throw GeometryError("interferer coincides with receiver");
            transmit_options(cone_distances(i), opts);
            out.add(i, path_loss_unchecked(r, params_.alpha), opts);
        };
        if (radius > 0.0) {
            index_->grid().for_each_near(rx, radius, add_real);
        } else {
            for (std::size_t i = 0; i < ps_->size(); ++i) add_real(i);
        }
        if (virt == nullptr) return;
        std::array<double, ConePartition::kMaxCones> buf{};
        const std::span<double> dists(buf.data(), static_cast<std::size_t>(partition_.count()));
        for (std::size_t v = 0; v < virt->size(); ++v) {
            const Vec2 p = virt->points()[v];
            const double r = distance(p, rx);
            if (radius > 0.0 && r > radius) continue;
            if (r == 0.0) throw GeometryError("virtual interferer coincides with receiver");
            union_cone_distances(p, *virt, dists);
            transmit_options(dists, opts);
            out.add(virt->id(v), path_loss_unchecked(r, params_.alpha), opts);
        }
    }

private:
    static constexpr double kUnset = -1.0;

    SimParams params_;
    ConePartition partition_;
    std::unique_ptr<PointSet> ps_;
    std::unique_ptr<ConeNeighborIndex> index_;
    std::vector<double> cache_;
};

/// Fixed-Phi exit-time problem: the tagged source, its cone-nearest receiver,
/// and the interferer table. Replays differ only in their hop key.
class ExitTimeProblem {
public:
    ExitTimeProblem(World& world, std::size_t source, int cone = 0) : world_(&world), source_(source) {
        const auto dest = world.destination(source, cone);
        if (!dest) throw NoNeighborError("exit time: destination cone of the tagged node is empty");
        receiver_ = dest->index;
        link_ = world.link(source_, receiver_);
        world.build_interferers(source_, receiver_, nullptr, interferers_);
    }

    [[nodiscard]] ExitTimeResult replay(StreamKey hop_key, std::uint64_t horizon) const {
        HopContention hop(world_->params(), hop_key, link_, interferers_);
        return run_contention(hop, horizon);
    }

    [[nodiscard]] const LinkSpec& link() const noexcept { return link_; }
    [[nodiscard]] const InterfererSet& interferers() const noexcept { return interferers_; }
    [[nodiscard]] std::size_t source() const noexcept { return source_; }
    [[nodiscard]] std::size_t receiver() const noexcept { return receiver_; }
    [[nodiscard]] const World& world() const noexcept { return *world_; }

private:
    World* world_;
    std::size_t source_;
    std::size_t receiver_ = 0;
    LinkSpec link_;
    InterfererSet interferers_;
};

/// Palm-conditioned realization for exit-time runs: PPP on a centered
/// window plus the tagged point at the origin.
inline World sample_palm_world(const SimParams& params, StreamKey phi_key) {
    params.check();
    Stream rng(phi_key);
    auto ps = sample_ppp(params.lambda, Window::centered(params.window_x, params.window_y), rng);
    return World(palm_condition(ps, Vec2{0.0, 0.0}), params);
}

/// One exit-time sample: fresh Phi, one fading/MAC realization.
inline ExitTimeResult run_exit_time(const SimParams& params, StreamKey replication_key) {
    World world = sample_palm_world(params, replication_key.child(Purpose::phi));
    ExitTimeProblem problem(world, *world.points().tagged_index());
    return problem.replay(replication_key.child(Purpose::replay).child(0), params.horizon);
}

struct HopRecord {
    std::size_t index = 0;
    Vec2 source;
    Vec2 destination;
    double r = 0.0;
    double theta = 0.0;
    std::uint64_t delay = 0;                          ///< T_i, real interferers only
    std::optional<std::uint64_t> enhanced_delay;      ///< T'_i, with virtual interferers
};

struct CensoredHop {
    std::size_t index = 0;
    std::uint64_t slots = 0;
};

struct PacketTrace {
    Vec2 origin;
    std::vector<HopRecord> hops;
    std::vector<double> distance;  ///< d(t) for t = 1..total_slots
    Termination reason = Termination::horizon;
    std::optional<CensoredHop> censored;
    std::uint64_t virtual_points_added = 0;

    [[nodiscard]] std::uint64_t total_slots() const noexcept { return distance.size(); }
};

/// Progress of a traversal, as needed by the stationarization step.
struct TraversalState {
    Vec2 origin;
    Vec2 position;
    const HopRecord* completed = nullptr;  ///< last finished hop, or null before hop 0
};

/// Stationarization step. Before hop 0 it lays the backward chain behind
/// the origin; after each hop it refills the traversed sector and drops
/// virtual points more than `guard` behind the packet.
inline void augment_stationary(VirtualInterferers& virt, const TraversalState& state, const SimParams& params,
                               const Window& window, StreamKey key) {
    const ConePartition partition(params.cones);
    if (state.completed == nullptr) {
        virt.seed_backward_chain(state.origin, params.lambda, partition, params.guard, window,
                                 key.child(Purpose::backward_chain));
        return;
    }
    const auto& hop = *state.completed;
    virt.refill_sector(hop.source, hop.r, params.lambda, partition, window,
                       key.child(Purpose::refill).child(hop.index));
    virt.prune_behind(state.position.x - params.guard);
}

/// Follows the tagged packet from `source` along cone-0 nearest neighbors
/// until the horizon, the guard band at the far edge, or a dead end.
inline PacketTrace traverse(World& world, std::size_t source, StreamKey run_key) {
    const SimParams& params = world.params();
    if (params.policy != PolicyKind::power_control)
        throw ParameterError("traversal requires the power-control policy");
    const auto& ps = world.points();
    const Window& window = ps.window();

    PacketTrace trace;
    trace.origin = ps[source];
    VirtualInterferers virt;
    if (params.stationary_mode) augment_stationary(virt, {trace.origin, trace.origin, nullptr}, params, window, run_key);

    InterfererSet plain;
    InterfererSet enhanced;
    std::size_t current = source;
    for (std::size_t i = 0;; ++i) {
        const Vec2 here = ps[current];
        if (here.x >= window.x_max - params.guard) {
            trace.reason = Termination::guard_exit;
            break;
        }
        const std::uint64_t elapsed = trace.total_slots();
        if (elapsed >= params.horizon) {
            trace.reason = Termination::horizon;
            break;
        }
        const auto next = world.destination(current, 0);
        if (!next) {
            trace.reason = Termination::dead_end;
            break;
        }
        const LinkSpec link = world.link(current, next->index);
        const StreamKey hop_key = run_key.child(Purpose::hop).child(i);
        const std::uint64_t budget = params.horizon - elapsed;

        world.build_interferers(current, next->index, nullptr, plain);
        HopContention plain_hop(params, hop_key, link, plain);
        const auto t_plain = run_contention(plain_hop, budget);

        ExitTimeResult t_actual = t_plain;
        std::optional<std::uint64_t> t_enhanced;
        if (params.stationary_mode) {
            world.build_interferers(current, next->index, &virt, enhanced);
            HopContention enhanced_hop(params, hop_key, link, enhanced);
            t_actual = run_contention(enhanced_hop, budget);
            if (!t_actual.censored) t_enhanced = t_actual.slots;
        }

        const double d_here = distance(here, trace.origin);
        if (t_actual.censored) {
            trace.distance.insert(trace.distance.end(), t_actual.slots, d_here);
            trace.censored = CensoredHop{i, t_actual.slots};
            trace.reason = Termination::horizon;
            break;
        }

        HopRecord rec;
        rec.index = i;
        rec.source = here;
        rec.destination = next->point;
        rec.r = next->distance;
        rec.theta = std::asin(std::clamp((next->point.y - here.y) / next->distance, -1.0, 1.0));
        rec.delay = t_plain.slots;
        rec.enhanced_delay = t_enhanced;
        trace.hops.push_back(rec);

        trace.distance.insert(trace.distance.end(), t_actual.slots - 1, d_here);
        trace.distance.push_back(distance(next->point, trace.origin));
        current = next->index;

        if (params.stationary_mode)
            augment_stationary(virt, {trace.origin, next->point, &trace.hops.back()}, params, window, run_key);
    }
    trace.virtual_points_added = virt.total_added();
    return trace;
}

/// Strip realization for traversal runs: x in [0, window_x],
/// y in [-window_y/2, window_y/2], tagged start at (guard, 0).
inline World sample_strip_world(const SimParams& params, StreamKey phi_key) {
    params.check();
    Stream rng(phi_key);
    const Window window{0.0, params.window_x, -0.5 * params.window_y, 0.5 * params.window_y};
    auto ps = sample_ppp(params.lambda, window, rng);
    return World(palm_condition(ps, Vec2{params.guard, 0.0}), params);
}

/// Full tagged-packet run on a fresh strip realization.
inline PacketTrace run_tagged_packet(const SimParams& params, StreamKey replication_key) {
    World world = sample_strip_world(params, replication_key.child(Purpose::phi));
    return traverse(world, *world.points().tagged_index(), replication_key);
}

struct VelocityEstimate {
    double velocity = 0.0;         ///< d(t_end) / t_end
    std::vector<double> ratio;     ///< d(t) / t for t = 1..t_end
};

inline VelocityEstimate information_velocity(const PacketTrace& trace) {
    if (trace.distance.empty()) throw ParameterError("information_velocity: empty trace");
    VelocityEstimate est;
    est.ratio.resize(trace.distance.size());
    for (std::size_t t = 0; t < trace.distance.size(); ++t)
        est.ratio[t] = trace.distance[t] / static_cast<double>(t + 1);
    est.velocity = est.ratio.back();
    return est;
}

namespace detail {
inline bool in_sector(Vec2 p, Vec2 vertex, double radius, double phi) noexcept {
    const Vec2 d = p - vertex;
    const double r = d.norm();
    if (!(r > 0.0) || r >= radius) return false;
    return std::abs(d.angle()) < phi;
}
}  // namespace detail

/// Checks that the traversed sectors (X_i + C_0) ∩ B(X_i, R_i) are pairwise
/// disjoint by testing densely sampled boundary points of each sector for
/// membership in the other's interior.
inline bool sectors_disjoint(const PacketTrace& trace, const ConePartition& partition, int samples = 48) {
    const double phi = partition.half_angle();
    const auto& h = trace.hops;
    auto boundary_hits = [&](const HopRecord& a, const HopRecord& b) {
        // Shrink slightly so shared boundary points do not count as overlap.
        const double shrink = 1.0 - 1e-9;
        for (int s = 0; s <= samples; ++s) {
            const double f = static_cast<double>(s) / samples;
            const double t = -phi + 2.0 * phi * f;
            const Vec2 arc = a.source + shrink * a.r * Vec2{std::cos(t), std::sin(t)};
            const Vec2 up = a.source + shrink * f * a.r * Vec2{std::cos(phi), std::sin(phi)};
            const Vec2 down = a.source + shrink * f * a.r * Vec2{std::cos(phi), -std::sin(phi)};
            for (const Vec2 p : {arc, up, down})
                if (detail::in_sector(p, b.source, b.r, phi)) return true;
        }
        return false;
    };
    for (std::size_t i = 0; i < h.size(); ++i) {
        for (std::size_t j = i + 1; j < h.size(); ++j) {
            if (h[j].source.x - h[i].source.x > h[i].r + h[j].r) break;
            if (boundary_hits(h[i], h[j]) || boundary_hits(h[j], h[i])) return false;
        }
    }
    return true;
}

}  // namespace ivsim
