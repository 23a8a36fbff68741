#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "atv/errors.hpp"
#include "atv/parallel.hpp"

namespace atv {

enum class Metric { euclidean, l1, linf };

inline std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::euclidean: return "euclidean";
        case Metric::l1: return "l1";
        case Metric::linf: return "linf";
    }
    return "?";
}

inline Metric parse_metric(std::string_view s) {
    if (s == "euclidean") return Metric::euclidean;
    if (s == "l1") return Metric::l1;
    if (s == "linf") return Metric::linf;
    throw PreconditionError("unknown metric '" + std::string(s) + "' (expected euclidean, l1 or linf)");
}

inline double distance(Metric m, std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = std::abs(a[k] - b[k]);
        switch (m) {
            case Metric::euclidean: acc += d * d; break;
            case Metric::l1: acc += d; break;
            case Metric::linf: acc = std::max(acc, d); break;
        }
    }
    return m == Metric::euclidean ? std::sqrt(acc) : acc;
}

/// Default relative slack on the closed-ball test d(x, y) <= eps.
inline constexpr double kBallTol = 1e-12;

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};

/// Closed eps-balls in compressed-row form. Slot s in [offsets[i], offsets[i+1])
/// stores the ordered pair (i, members[s]); mirror[s] is the slot of the reversed
/// pair. Lists are sorted ascending and always contain their center.
struct BallIndex {
    std::vector<std::size_t> offsets{0};
    std::vector<std::size_t> members;
    std::vector<std::size_t> mirror;

    std::size_t num_points() const { return offsets.size() - 1; }
    std::size_t num_pairs() const { return members.size(); }
    std::span<const std::size_t> operator[](std::size_t i) const {
        return {members.data() + offsets[i], offsets[i + 1] - offsets[i]};
    }
    std::size_t begin(std::size_t i) const { return offsets[i]; }
    std::size_t end(std::size_t i) const { return offsets[i + 1]; }

    /// Slot of the pair (i, j), or nullopt when j is not in ball i.
    std::optional<std::size_t> slot(std::size_t i, std::size_t j) const {
        const auto ball = (*this)[i];
        const auto it = std::lower_bound(ball.begin(), ball.end(), j);
        if (it == ball.end() || *it != j) return std::nullopt;
        return offsets[i] + static_cast<std::size_t>(it - ball.begin());
    }
};

namespace detail {

inline BallIndex finalize_balls(std::vector<std::vector<std::size_t>> lists) {
    BallIndex idx;
    const std::size_t n = lists.size();
    idx.offsets.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        std::sort(lists[i].begin(), lists[i].end());
        idx.offsets[i + 1] = idx.offsets[i] + lists[i].size();
    }
    idx.members.reserve(idx.offsets[n]);
    for (auto& l : lists) idx.members.insert(idx.members.end(), l.begin(), l.end());
    idx.mirror.assign(idx.members.size(), 0);
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t s = idx.offsets[i]; s < idx.offsets[i + 1]; ++s) {
            // Symmetry of the metric guarantees the reversed pair exists.
            idx.mirror[s] = *idx.slot(idx.members[s], i);
        }
    });
    return idx;
}

}  // namespace detail

/// Closed-ball index over an explicit point set (row-major coordinates).
/// Sweeps along the first coordinate, which lower-bounds all three metrics.
inline BallIndex build_ball_index(std::span<const double> coords, std::size_t dim, Metric metric,
                                  double epsilon, double ball_tol = kBallTol) {
    if (dim == 0) throw PreconditionError("dimension must be at least 1");
    const std::size_t n = coords.size() / dim;
    if (n == 0) throw PreconditionError("point set is empty");
    const double radius = epsilon * (1.0 + ball_tol);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return coords[a * dim] < coords[b * dim]; });
    std::vector<std::vector<std::size_t>> lists(n);
    for (std::size_t a = 0; a < n; ++a) {
        const std::size_t i = order[a];
        const auto xi = coords.subspan(i * dim, dim);
        lists[i].push_back(i);
        for (std::size_t b = a + 1; b < n; ++b) {
            const std::size_t j = order[b];
            if (coords[j * dim] - xi[0] > radius) break;
            if (distance(metric, xi, coords.subspan(j * dim, dim)) <= radius) {
                lists[i].push_back(j);
                lists[j].push_back(i);
            }
        }
    }
    return detail::finalize_balls(std::move(lists));
}

/// Finite metric measure space with precomputed eps-balls.
struct DiscreteDomain {
    std::size_t dim = 1;
    std::vector<double> coords;           // n * dim, row-major
    std::optional<double> spacing;        // grid mode only
    std::vector<std::size_t> cells;       // grid mode: cells per axis, last axis fastest
    std::vector<Interval> bounds;         // grid box, or bounding box of a point cloud
    Metric metric = Metric::euclidean;
    std::vector<double> quad_weights;
    double epsilon = 0.0;
    double ball_tol = kBallTol;
    BallIndex balls;

    std::size_t size() const { return quad_weights.size(); }
    bool is_grid() const { return spacing.has_value(); }
    std::span<const double> point(std::size_t i) const { return {coords.data() + i * dim, dim}; }
    double dist(std::size_t i, std::size_t j) const { return distance(metric, point(i), point(j)); }
    double volume() const {
        double v = 1.0;
        for (const auto& b : bounds) v *= b.hi - b.lo;
        return v;
    }
};

/// Cell-centred grid on a box with spacing h and quadrature weight h^N per cell.
inline DiscreteDomain build_grid(const std::vector<Interval>& box, double h, Metric metric, double epsilon) {
    if (box.empty()) throw PreconditionError("grid box has no axes");
    if (!(h > 0.0) || !std::isfinite(h)) throw PreconditionError("grid spacing h must be positive");
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw PreconditionError("epsilon must be positive");
    // Below one spacing an interior ball is just its center and every
    // nonlocal difference vanishes.
    if (epsilon < h * (1.0 - kBallTol)) {
        throw PreconditionError("epsilon " + std::to_string(epsilon) + " < h = " + std::to_string(h) +
                                ": balls would hold fewer than 3 points per axis");
    }
    DiscreteDomain d;
    d.dim = box.size();
    d.spacing = h;
    d.bounds = box;
    d.metric = metric;
    d.epsilon = epsilon;
    std::size_t n = 1;
    for (const auto& iv : box) {
        const double width = iv.hi - iv.lo;
        if (!(width > 0.0)) throw PreconditionError("grid box has an empty axis");
        const double ratio = width / h;
        const auto c = static_cast<std::size_t>(std::llround(ratio));
        if (c < 1) throw PreconditionError("box axis shorter than one cell");
        if (std::abs(static_cast<double>(c) * h - width) > 1e-9 * width) {
            throw PreconditionError("spacing h does not divide the box width " + std::to_string(width));
        }
        d.cells.push_back(c);
        n *= c;
    }
    d.coords.resize(n * d.dim);
    std::vector<std::size_t> idx(d.dim, 0);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t k = 0; k < d.dim; ++k) {
            d.coords[p * d.dim + k] = box[k].lo + (static_cast<double>(idx[k]) + 0.5) * h;
        }
        for (std::size_t k = d.dim; k-- > 0;) {
            if (++idx[k] < d.cells[k]) break;
            idx[k] = 0;
        }
    }
    d.quad_weights.assign(n, std::pow(h, static_cast<double>(d.dim)));

    // Stencil search: only cells within r = floor(eps/h) index steps per axis
    // can be within eps.
    const double radius = epsilon * (1.0 + d.ball_tol);
    const auto r = static_cast<long>(std::floor(radius / h + 1e-9));
    std::vector<long> stride(d.dim, 1);
    for (std::size_t k = d.dim - 1; k-- > 0;) stride[k] = stride[k + 1] * static_cast<long>(d.cells[k + 1]);
    std::vector<std::vector<std::size_t>> lists(n);
    parallel_for(n, [&](std::size_t p) {
        std::vector<long> base(d.dim);
        long rem = static_cast<long>(p);
        for (std::size_t k = 0; k < d.dim; ++k) {
            base[k] = rem / stride[k];
            rem %= stride[k];
        }
        std::vector<long> off(d.dim, -r);
        const auto xp = d.point(p);
        while (true) {
            bool inside = true;
            long q = 0;
            for (std::size_t k = 0; k < d.dim; ++k) {
                const long c = base[k] + off[k];
                if (c < 0 || c >= static_cast<long>(d.cells[k])) {
                    inside = false;
                    break;
                }
                q += c * stride[k];
            }
            if (inside) {
                const auto qi = static_cast<std::size_t>(q);
                if (distance(metric, xp, d.point(qi)) <= radius) lists[p].push_back(qi);
            }
            std::size_t k = d.dim;
            while (k-- > 0) {
                if (++off[k] <= r) break;
                off[k] = -r;
            }
            if (k == static_cast<std::size_t>(-1)) break;
        }
    });
    d.balls = detail::finalize_balls(std::move(lists));
    return d;
}

/// Domain over an explicit point cloud. Quadrature weights default to 1/n.
inline DiscreteDomain build_point_cloud(const std::vector<std::vector<double>>& points, Metric metric,
                                        double epsilon, std::vector<double> weights = {}) {
    if (points.empty()) throw PreconditionError("point cloud is empty");
    if (!(epsilon > 0.0)) throw PreconditionError("epsilon must be positive");
    DiscreteDomain d;
    d.dim = points.front().size();
    if (d.dim == 0) throw PreconditionError("points must have at least one coordinate");
    d.metric = metric;
    d.epsilon = epsilon;
    d.bounds.assign(d.dim, Interval{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()});
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != d.dim) {
            throw PreconditionError("point " + std::to_string(i) + " has the wrong number of coordinates");
        }
        for (std::size_t k = 0; k < d.dim; ++k) {
            d.coords.push_back(points[i][k]);
            d.bounds[k].lo = std::min(d.bounds[k].lo, points[i][k]);
            d.bounds[k].hi = std::max(d.bounds[k].hi, points[i][k]);
        }
    }
    if (weights.empty()) weights.assign(points.size(), 1.0 / static_cast<double>(points.size()));
    if (weights.size() != points.size()) throw PreconditionError("one quadrature weight per point required");
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] > 0.0)) throw PreconditionError("quadrature weight " + std::to_string(i) + " is not positive");
    }
    d.quad_weights = std::move(weights);
    d.balls = build_ball_index(d.coords, d.dim, metric, epsilon, d.ball_tol);
    return d;
}

/// Flags of the inner parallel set {x : dist(x, boundary) > eps}.
using InteriorMask = std::vector<bool>;

inline InteriorMask interior_mask(const DiscreteDomain& d) {
    if (!d.is_grid()) throw PreconditionError("interior mask needs a grid domain");
    InteriorMask mask(d.size(), false);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto x = d.point(i);
        double gap = std::numeric_limits<double>::infinity();
        // Distance to the complement of a box is axis-aligned for l1, l2 and linf.
        for (std::size_t k = 0; k < d.dim; ++k) {
            gap = std::min({gap, x[k] - d.bounds[k].lo, d.bounds[k].hi - x[k]});
        }
        mask[i] = gap > d.epsilon * (1.0 + d.ball_tol);
    }
    return mask;
}

}  // namespace atv
