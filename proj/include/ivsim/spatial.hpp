#pragma once

// Point-process sampling, cone geometry and nearest-neighbor-in-cone queries.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "ivsim/errors.hpp"
#include "ivsim/rng.hpp"

namespace ivsim {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) noexcept { return {s * a.x, s * a.y}; }
    friend constexpr bool operator==(Vec2 a, Vec2 b) noexcept = default;

    [[nodiscard]] double norm() const noexcept { return std::hypot(x, y); }
    [[nodiscard]] constexpr double norm2() const noexcept { return x * x + y * y; }
    [[nodiscard]] double angle() const noexcept { return std::atan2(y, x); }
};

inline double distance(Vec2 a, Vec2 b) noexcept { return (a - b).norm(); }

/// Lexicographic (x, then y) order; the deterministic tie-break for equidistant neighbors.
constexpr bool lex_less(Vec2 a, Vec2 b) noexcept { return a.x < b.x || (a.x == b.x && a.y < b.y); }

/// Axis-aligned simulation window, the finite surrogate for the plane.
struct Window {
    double x_min = 0.0;
    double x_max = 1.0;
    double y_min = 0.0;
    double y_max = 1.0;

    [[nodiscard]] constexpr double width() const noexcept { return x_max - x_min; }
    [[nodiscard]] constexpr double height() const noexcept { return y_max - y_min; }
    [[nodiscard]] constexpr double area() const noexcept { return width() * height(); }
    [[nodiscard]] constexpr Vec2 center() const noexcept {
        return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)};
    }
    [[nodiscard]] constexpr bool contains(Vec2 p) const noexcept {
        return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
    }
    [[nodiscard]] bool valid() const noexcept {
        return std::isfinite(x_min) && std::isfinite(x_max) && std::isfinite(y_min) &&
               std::isfinite(y_max) && x_min < x_max && y_min < y_max;
    }
    void check() const {
        if (!valid()) throw ParameterError("window: require x_min < x_max and y_min < y_max");
    }

    static Window centered(double width, double height) {
        Window w{-0.5 * width, 0.5 * width, -0.5 * height, 0.5 * height};
        w.check();
        return w;
    }
};

/// A realization of node positions in a window, optionally with one
/// distinguished (Palm-conditioned) point.
class PointSet {
public:
    PointSet(Window window, double intensity, std::vector<Vec2> points,
             std::optional<std::size_t> tagged = std::nullopt)
        : window_(window), intensity_(intensity), points_(std::move(points)), tagged_(tagged) {
        window_.check();
        if (!(intensity_ > 0.0) || !std::isfinite(intensity_))
            throw ParameterError("point set: intensity must be positive");
        for (const auto& p : points_)
            if (!window_.contains(p)) throw ParameterError("point set: point outside window");
        if (tagged_ && *tagged_ >= points_.size())
            throw ParameterError("point set: tagged index out of range");
        if (has_coincident_points(points_)) throw GeometryError("point set: coincident points");
    }

    [[nodiscard]] const Window& window() const noexcept { return window_; }
    [[nodiscard]] double intensity() const noexcept { return intensity_; }
    [[nodiscard]] std::span<const Vec2> points() const noexcept { return points_; }
    [[nodiscard]] std::size_t size() const noexcept { return points_.size(); }
    [[nodiscard]] const Vec2& operator[](std::size_t i) const noexcept { return points_[i]; }
    [[nodiscard]] std::optional<std::size_t> tagged_index() const noexcept { return tagged_; }
    [[nodiscard]] Vec2 tagged_point() const {
        if (!tagged_) throw ParameterError("point set has no tagged point");
        return points_[*tagged_];
    }

private:
    static bool has_coincident_points(std::span<const Vec2> pts) {
        std::vector<Vec2> sorted(pts.begin(), pts.end());
        std::sort(sorted.begin(), sorted.end(), lex_less);
        return std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
    }

    Window window_;
    double intensity_;
    std::vector<Vec2> points_;
    std::optional<std::size_t> tagged_;
};

/// m equal-angle cones about a vertex. Cone k covers the half-open angular
/// interval [2*pi*k/m - phi, 2*pi*k/m + phi) with phi = pi/m, so cone 0 is
/// symmetric about the positive x-axis.
class ConePartition {
public:
    static constexpr int kMinCones = 5;
    static constexpr int kMaxCones = 64;

    explicit ConePartition(int m) : m_(m) {
        if (m < kMinCones || m > kMaxCones)
            throw ParameterError("cone partition: require 5 <= m <= 64 (cone angle 2*phi < pi/2)");
        half_angle_ = std::numbers::pi / m;
    }

    [[nodiscard]] int count() const noexcept { return m_; }
    [[nodiscard]] double half_angle() const noexcept { return half_angle_; }
    [[nodiscard]] double center_angle(int k) const noexcept { return 2.0 * half_angle_ * k; }
    /// Inclusive lower boundary of cone k, in [-phi, 2*pi - phi).
    [[nodiscard]] double lower_bound(int k) const noexcept { return (2.0 * k - 1.0) * half_angle_; }

    /// Cone containing direction `angle` (radians, any branch).
    [[nodiscard]] int cone_of_angle(double angle) const noexcept {
        constexpr double two_pi = 2.0 * std::numbers::pi;
        double t = std::fmod(angle, two_pi);
        if (t < -half_angle_) t += two_pi;
        if (t >= two_pi - half_angle_) t -= two_pi;
        int k = static_cast<int>(std::floor((t + half_angle_) / (2.0 * half_angle_)));
        k = std::clamp(k, 0, m_ - 1);
        // Re-derive against the exact boundary expressions so the half-open
        // convention does not depend on rounding in the division above.
        while (k > 0 && t < lower_bound(k)) --k;
        while (k < m_ - 1 && t >= lower_bound(k + 1)) ++k;
        return k;
    }

    [[nodiscard]] int cone_of(Vec2 direction) const noexcept { return cone_of_angle(direction.angle()); }

    /// Whether `direction` lies in cone k.
    [[nodiscard]] bool contains(int k, Vec2 direction) const noexcept { return cone_of(direction) == k; }

private:
    int m_;
    double half_angle_;
};

/// Cone of `target` as seen from `vertex`.
inline int cone_index(const ConePartition& partition, Vec2 vertex, Vec2 target) {
    if (target == vertex) throw GeometryError("cone_index: target coincides with vertex");
    return partition.cone_of(target - vertex);
}

/// Homogeneous PPP of intensity `lambda` on `window`.
inline PointSet sample_ppp(double lambda, const Window& window, Stream& rng) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ParameterError("sample_ppp: intensity must be positive");
    window.check();
    const auto n = rng.poisson(lambda * window.area());
    std::vector<Vec2> pts;
    pts.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const double x = rng.uniform(window.x_min, window.x_max);
        const double y = rng.uniform(window.y_min, window.y_max);
        pts.push_back({x, y});
    }
    return PointSet(window, lambda, std::move(pts));
}

/// Slivnyak: the Palm version of a PPP is the PPP plus an atom at `location`.
inline PointSet palm_condition(const PointSet& ps, Vec2 location) {
    if (!ps.window().contains(location)) throw ParameterError("palm_condition: location outside window");
    std::vector<Vec2> pts(ps.points().begin(), ps.points().end());
    pts.push_back(location);
    const std::size_t tagged = pts.size() - 1;
    return PointSet(ps.window(), ps.intensity(), std::move(pts), tagged);
}

struct Neighbor {
    Vec2 point;
    double distance = 0.0;
    std::size_t index = 0;
};

namespace detail {
/// Strict "better neighbor" order: distance, then lexicographic coordinates.
inline bool closer(double d, Vec2 p, double best_d, Vec2 best_p) noexcept {
    return d < best_d || (d == best_d && lex_less(p, best_p));
}
}  // namespace detail

/// Brute-force nearest point of `ps` other than `x` inside the translated cone x + C_k.
inline std::optional<Neighbor> nearest_in_cone(const PointSet& ps, Vec2 x, int cone_k,
                                               const ConePartition& partition) {
    std::optional<Neighbor> best;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        const Vec2 p = ps[i];
        if (p == x) continue;
        const Vec2 d = p - x;
        if (partition.cone_of(d) != cone_k) continue;
        const double r = d.norm();
        if (!best || detail::closer(r, p, best->distance, best->point)) best = Neighbor{p, r, i};
    }
    return best;
}

/// Uniform bucket grid over a fixed set of points.
class GridIndex {
public:
    GridIndex(std::span<const Vec2> points, const Window& window, double cell_size)
        : window_(window), cell_(cell_size) {
        window.check();
        if (!(cell_size > 0.0)) throw ParameterError("grid: cell size must be positive");
        nx_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(window.width() / cell_)));
        ny_ = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(window.height() / cell_)));
        start_.assign(static_cast<std::size_t>(nx_ * ny_ + 1), 0);
        for (const auto& p : points) ++start_[static_cast<std::size_t>(flat(cell_x(p.x), cell_y(p.y))) + 1];
        for (std::size_t c = 1; c < start_.size(); ++c) start_[c] += start_[c - 1];
        items_.resize(points.size());
        std::vector<std::uint32_t> fill(start_.begin(), start_.end() - 1);
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto c = static_cast<std::size_t>(flat(cell_x(points[i].x), cell_y(points[i].y)));
            items_[fill[c]++] = static_cast<std::uint32_t>(i);
        }
    }

    [[nodiscard]] double cell_size() const noexcept { return cell_; }
    [[nodiscard]] const Window& window() const noexcept { return window_; }

    [[nodiscard]] std::int64_t cell_x(double x) const noexcept {
        return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((x - window_.x_min) / cell_)), 0, nx_ - 1);
    }
    [[nodiscard]] std::int64_t cell_y(double y) const noexcept {
        return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor((y - window_.y_min) / cell_)), 0, ny_ - 1);
    }

    /// Visits the indices in all cells at Chebyshev ring distance `r` from
    /// the cell containing `c`. Returns false when the ring lies wholly
    /// outside the grid.
    template <class F>
    bool for_each_in_ring(Vec2 c, std::int64_t r, F&& f) const {
        const auto cx = cell_x(c.x);
        const auto cy = cell_y(c.y);
        if (cx - r < 0 && cx + r >= nx_ && cy - r < 0 && cy + r >= ny_) return false;
        auto visit = [&](std::int64_t i, std::int64_t j) {
            if (i < 0 || i >= nx_ || j < 0 || j >= ny_) return;
            const auto cell = static_cast<std::size_t>(flat(i, j));
            for (auto k = start_[cell]; k < start_[cell + 1]; ++k) f(static_cast<std::size_t>(items_[k]));
        };
        if (r == 0) {
            visit(cx, cy);
            return true;
        }
        for (std::int64_t i = cx - r; i <= cx + r; ++i) {
            visit(i, cy - r);
            visit(i, cy + r);
        }
        for (std::int64_t j = cy - r + 1; j <= cy + r - 1; ++j) {
            visit(cx - r, j);
            visit(cx + r, j);
        }
        return true;
    }

    /// Lower bound on the distance from `c` to any point outside rings 0..r-1.
    [[nodiscard]] double ring_clearance(Vec2 c, std::int64_t r) const noexcept {
        if (r == 0) return 0.0;
        const auto cx = cell_x(c.x);
        const auto cy = cell_y(c.y);
        // Block of rings < r spans cells [cx-r+1, cx+r-1]; clearance is the
        // distance from c to that block's boundary (sides off-grid don't bound).
        double clear = std::numeric_limits<double>::infinity();
        if (cx - r + 1 > 0) clear = std::min(clear, c.x - (window_.x_min + (cx - r + 1) * cell_));
        if (cx + r < nx_) clear = std::min(clear, window_.x_min + (cx + r) * cell_ - c.x);
        if (cy - r + 1 > 0) clear = std::min(clear, c.y - (window_.y_min + (cy - r + 1) * cell_));
        if (cy + r < ny_) clear = std::min(clear, window_.y_min + (cy + r) * cell_ - c.y);
        return std::max(0.0, clear);
    }

    /// Visits indices of all cells intersecting the disk B(c, radius); the
    /// caller filters by exact distance.
    template <class F>
    void for_each_near(Vec2 c, double radius, F&& f) const {
        const auto i0 = cell_x(c.x - radius), i1 = cell_x(c.x + radius);
        const auto j0 = cell_y(c.y - radius), j1 = cell_y(c.y + radius);
        for (auto j = j0; j <= j1; ++j)
            for (auto i = i0; i <= i1; ++i) {
                const auto cell = static_cast<std::size_t>(flat(i, j));
                for (auto k = start_[cell]; k < start_[cell + 1]; ++k) f(static_cast<std::size_t>(items_[k]));
            }
    }

private:
    [[nodiscard]] std::int64_t flat(std::int64_t i, std::int64_t j) const noexcept { return j * nx_ + i; }

    Window window_;
    double cell_;
    std::int64_t nx_ = 1;
    std::int64_t ny_ = 1;
    std::vector<std::uint32_t> start_;
    std::vector<std::uint32_t> items_;
};

/// Grid-accelerated nearest-neighbor-in-cone queries over a PointSet.
/// Results are identical to `nearest_in_cone` (same tie-break).
class ConeNeighborIndex {
public:
    ConeNeighborIndex(const PointSet& ps, const ConePartition& partition)
        : ps_(&ps),
          partition_(partition),
          grid_(ps.points(), ps.window(),
                std::sqrt(partition.count() / (ps.intensity() * std::numbers::pi))) {}

    [[nodiscard]] const PointSet& points() const noexcept { return *ps_; }
    [[nodiscard]] const ConePartition& partition() const noexcept { return partition_; }
    [[nodiscard]] const GridIndex& grid() const noexcept { return grid_; }

    [[nodiscard]] std::optional<Neighbor> nearest(Vec2 x, int cone_k) const {
        std::optional<Neighbor> best;
        for (std::int64_t r = 0;; ++r) {
            if (best && grid_.ring_clearance(x, r) > best->distance) break;
            const bool any = grid_.for_each_in_ring(x, r, [&](std::size_t i) {
                const Vec2 p = (*ps_)[i];
                if (p == x) return;
                const Vec2 d = p - x;
                if (partition_.cone_of(d) != cone_k) return;
                const double dist = d.norm();
                if (!best || detail::closer(dist, p, best->distance, best->point)) best = Neighbor{p, dist, i};
            });
            if (!any) break;
        }
        return best;
    }

    /// Nearest-neighbor distance in every cone at once; +inf marks an empty
    /// cone. `out` must have partition().count() entries.
    void cone_distances(Vec2 x, std::span<double> out) const {
        const int m = partition_.count();
        std::fill(out.begin(), out.begin() + m, std::numeric_limits<double>::infinity());
        for (std::int64_t r = 0;; ++r) {
            const double worst = *std::max_element(out.begin(), out.begin() + m);
            if (grid_.ring_clearance(x, r) > worst) break;
            const bool any = grid_.for_each_in_ring(x, r, [&](std::size_t i) {
                const Vec2 p = (*ps_)[i];
                if (p == x) return;
                const Vec2 d = p - x;
                const int k = partition_.cone_of(d);
                out[static_cast<std::size_t>(k)] = std::min(out[static_cast<std::size_t>(k)], d.norm());
            });
            if (!any) break;
        }
    }

private:
    const PointSet* ps_;
    ConePartition partition_;
    GridIndex grid_;
};

/// One hop displacement drawn from the cone-nearest-neighbor law:
/// R has density (2*lambda*pi*r/m) exp(-lambda*pi*r^2/m), theta ~ U(-phi, phi),
/// independent.
struct HopDisplacement {
    double r = 0.0;
    double theta = 0.0;

    [[nodiscard]] double progress() const noexcept { return r * std::cos(theta); }
    [[nodiscard]] Vec2 vector() const noexcept { return {r * std::cos(theta), r * std::sin(theta)}; }
};

inline HopDisplacement sample_hop(double lambda, const ConePartition& partition, Stream& rng) {
    if (!(lambda > 0.0)) throw ParameterError("sample_hop: intensity must be positive");
    const double rate = lambda * std::numbers::pi / partition.count();
    HopDisplacement h;
    h.r = std::sqrt(rng.exponential(rate));
    h.theta = rng.uniform(-partition.half_angle(), partition.half_angle());
    return h;
}

}  // namespace ivsim
