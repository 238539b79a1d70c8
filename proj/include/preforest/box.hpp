#pragma once

// Axis-aligned box arithmetic: volumes, containment, dyadic grids, duplicate
// removal and union membership. Everything downstream (trees, oracles,
// reports) trades in these boxes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace preforest {

using Point = std::vector<double>;

struct AxisBox {
    std::vector<double> lower;
    std::vector<double> upper;

    AxisBox() = default;
    AxisBox(std::vector<double> lo, std::vector<double> hi)
        : lower(std::move(lo)), upper(std::move(hi)) {
        if (lower.size() != upper.size())
            throw std::invalid_argument("AxisBox: lower/upper dimension mismatch");
        for (std::size_t i = 0; i < lower.size(); ++i)
            if (!(lower[i] <= upper[i]))
                throw std::invalid_argument("AxisBox: lower > upper on axis " + std::to_string(i));
    }

    std::size_t dims() const { return lower.size(); }

    bool degenerate() const {
        for (std::size_t i = 0; i < lower.size(); ++i)
            if (lower[i] == upper[i]) return true;
        return false;
    }

    bool operator==(const AxisBox& other) const {
        return lower == other.lower && upper == other.upper;
    }
};

using BoxSet = std::vector<AxisBox>;

/// Unit hypercube [0,1]^n.
inline AxisBox unit_box(std::size_t n) {
    return AxisBox(std::vector<double>(n, 0.0), std::vector<double>(n, 1.0));
}

inline double volume(const AxisBox& b) {
    double v = 1.0;
    for (std::size_t i = 0; i < b.dims(); ++i) v *= b.upper[i] - b.lower[i];
    return v;
}

inline void check_same_dims(std::size_t a, std::size_t b, const char* what) {
    if (a != b) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

inline bool contains_box(const AxisBox& outer, const AxisBox& inner) {
    check_same_dims(outer.dims(), inner.dims(), "contains_box");
    for (std::size_t i = 0; i < outer.dims(); ++i)
        if (inner.lower[i] < outer.lower[i] || inner.upper[i] > outer.upper[i]) return false;
    return true;
}

/// Closed-box membership: boundary points are inside.
inline bool contains_point(const AxisBox& b, std::span<const double> x) {
    check_same_dims(b.dims(), x.size(), "contains_point");
    for (std::size_t i = 0; i < b.dims(); ++i)
        if (x[i] < b.lower[i] || x[i] > b.upper[i]) return false;
    return true;
}

inline bool in_union(const BoxSet& s, std::span<const double> x) {
    for (const auto& b : s)
        if (contains_point(b, x)) return true;
    return false;
}

/// Indices of the boxes that survive duplicate removal: a box is dropped iff
/// it is strictly contained in another box of the set, or it is an exact
/// duplicate of an earlier box. The kept subset covers the same union.
inline std::vector<std::size_t> dedup_kept_indices(const BoxSet& s) {
    std::vector<std::size_t> kept;
    kept.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        bool drop = false;
        for (std::size_t j = 0; j < s.size() && !drop; ++j) {
            if (j == i) continue;
            if (!contains_box(s[j], s[i])) continue;
            if (s[j] == s[i]) {
                if (j < i) drop = true; // exact duplicates keep the earliest
            } else {
                drop = true;
            }
        }
        if (!drop) kept.push_back(i);
    }
    return kept;
}

inline BoxSet remove_duplicate_boxes(const BoxSet& s) {
    BoxSet out;
    for (std::size_t i : dedup_kept_indices(s)) out.push_back(s[i]);
    return out;
}

/// Dyadic grid of step xi = 2^(-depth) over a domain box. Split thresholds
/// and oracle cells live on its lines.
struct XiGrid {
    AxisBox domain;
    int depth = 1;
    double xi = 0.5;

    XiGrid() = default;
    XiGrid(AxisBox dom, int depth_)
        : domain(std::move(dom)), depth(depth_), xi(std::ldexp(1.0, -depth_)) {
        if (depth_ < 1 || depth_ > 52)
            throw std::invalid_argument("XiGrid: depth must be in [1, 52]");
        if (domain.degenerate())
            throw std::invalid_argument("XiGrid: degenerate domain");
    }

    std::size_t dims() const { return domain.dims(); }
    std::int64_t lines_per_axis() const { return std::int64_t{1} << depth; }

    /// Grid line k on an axis: domain.lower + k * xi * side.
    double line(std::size_t axis, std::int64_t k) const {
        const double side = domain.upper[axis] - domain.lower[axis];
        return domain.lower[axis] + static_cast<double>(k) * xi * side;
    }

    /// Continuous grid coordinate of a value (0 at domain.lower, 2^depth at upper).
    double coord(std::size_t axis, double value) const {
        const double side = domain.upper[axis] - domain.lower[axis];
        return (value - domain.lower[axis]) / (xi * side);
    }
};

enum class SnapDirection { down, up };

struct SnapResult {
    double value = 0.0;
    bool clamped = false;
};

/// Nearest grid line at or below/above the value. Values outside the domain
/// are clamped to the domain edge and flagged instead of erroring; border
/// drift must not abort a run.
inline SnapResult snap_to_grid(double value, const XiGrid& grid, std::size_t axis,
                               SnapDirection direction) {
    if (axis >= grid.dims()) throw std::invalid_argument("snap_to_grid: axis out of range");
    SnapResult r;
    double v = value;
    if (v < grid.domain.lower[axis]) {
        v = grid.domain.lower[axis];
        r.clamped = true;
    } else if (v > grid.domain.upper[axis]) {
        v = grid.domain.upper[axis];
        r.clamped = true;
    }
    const double c = grid.coord(axis, v);
    const double k = direction == SnapDirection::down ? std::floor(c) : std::ceil(c);
    r.value = grid.line(axis, static_cast<std::int64_t>(k));
    return r;
}

/// Affine map between an original region and the unit cube. Training, grids
/// and volumes live in unit space; reports translate back on the way out.
struct UnitMap {
    AxisBox original;

    UnitMap() = default;
    explicit UnitMap(AxisBox region) : original(std::move(region)) {
        if (original.degenerate())
            throw std::invalid_argument("UnitMap: degenerate input region");
    }

    std::size_t dims() const { return original.dims(); }

    Point to_unit(std::span<const double> x) const {
        check_same_dims(dims(), x.size(), "UnitMap::to_unit");
        Point u(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            u[i] = (x[i] - original.lower[i]) / (original.upper[i] - original.lower[i]);
        return u;
    }

    Point from_unit(std::span<const double> u) const {
        check_same_dims(dims(), u.size(), "UnitMap::from_unit");
        Point x(u.size());
        for (std::size_t i = 0; i < u.size(); ++i)
            x[i] = original.lower[i] + u[i] * (original.upper[i] - original.lower[i]);
        return x;
    }

    AxisBox box_from_unit(const AxisBox& b) const {
        return AxisBox(from_unit(b.lower), from_unit(b.upper));
    }

    AxisBox box_to_unit(const AxisBox& b) const {
        return AxisBox(to_unit(b.lower), to_unit(b.upper));
    }
};

/// Intersection, or an empty optional-like flag via zero-size check by caller.
inline bool intersect(const AxisBox& a, const AxisBox& b, AxisBox& out) {
    check_same_dims(a.dims(), b.dims(), "intersect");
    std::vector<double> lo(a.dims()), hi(a.dims());
    for (std::size_t i = 0; i < a.dims(); ++i) {
        lo[i] = std::max(a.lower[i], b.lower[i]);
        hi[i] = std::min(a.upper[i], b.upper[i]);
        if (lo[i] > hi[i]) return false;
    }
    out = AxisBox(std::move(lo), std::move(hi));
    return true;
}

/// Exact volume of cell ∩ (∪ boxes) by local coordinate compression: clip
/// every box to the cell, cut the cell along all clipped bounds, and count
/// sub-cells whose centers are covered. Intended for low dimensions.
inline double union_volume_within(const AxisBox& cell, const BoxSet& boxes) {
    const std::size_t n = cell.dims();
    BoxSet clipped;
    for (const auto& b : boxes) {
        AxisBox c;
        if (intersect(cell, b, c) && !c.degenerate()) clipped.push_back(std::move(c));
    }
    if (clipped.empty()) return 0.0;
    // Fast path: one clipped box covering everything.
    for (const auto& c : clipped)
        if (c == cell) return volume(cell);

    std::vector<std::vector<double>> cuts(n);
    for (std::size_t i = 0; i < n; ++i) {
        cuts[i].push_back(cell.lower[i]);
        cuts[i].push_back(cell.upper[i]);
        for (const auto& c : clipped) {
            cuts[i].push_back(c.lower[i]);
            cuts[i].push_back(c.upper[i]);
        }
        std::sort(cuts[i].begin(), cuts[i].end());
        cuts[i].erase(std::unique(cuts[i].begin(), cuts[i].end()), cuts[i].end());
        if (cuts[i].size() < 2) return 0.0; // degenerate cell
    }

    std::vector<std::size_t> idx(n, 0);
    Point center(n);
    double covered = 0.0;
    while (true) {
        double v = 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double lo = cuts[i][idx[i]];
            const double hi = cuts[i][idx[i] + 1];
            v *= hi - lo;
            center[i] = 0.5 * (lo + hi);
        }
        if (v > 0.0 && in_union(clipped, center)) covered += v;
        // advance the mixed-radix counter over sub-cells
        std::size_t axis = 0;
        while (axis < n) {
            if (++idx[axis] + 1 < cuts[axis].size()) break;
            idx[axis] = 0;
            ++axis;
        }
        if (axis == n) break;
    }
    return covered;
}

} // namespace preforest
