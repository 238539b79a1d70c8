#pragma once

// Seeded uniform sampling over boxes and box unions, and labeled-example
// generation. All coordinates here are unit-space unless stated otherwise.

#include <concepts>
#include <cstdint>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "preforest/box.hpp"
#include "preforest/rng.hpp"

namespace preforest {

template <typename L>
concept PointLabeler = requires(const L& l, const Point& x) {
    { l.label(x) } -> std::convertible_to<int>;
};

/// Adapts any callable point -> {0,1} to the labeler interface (test helper).
template <typename F>
struct FnLabeler {
    F fn;
    int label(const Point& x) const { return fn(x); }
};
template <typename F>
FnLabeler(F) -> FnLabeler<F>;

struct LabeledSample {
    Point x;
    int y = 0;
};

struct Dataset {
    std::vector<LabeledSample> samples;
    std::int64_t positives_count = 0;

    std::size_t size() const { return samples.size(); }
    std::size_t dims() const { return samples.empty() ? 0 : samples.front().x.size(); }
};

inline std::vector<Point> sample_uniform(const AxisBox& b, std::int64_t count, RngStream& rng) {
    if (count < 0) throw std::invalid_argument("sample_uniform: negative count");
    if (b.degenerate()) throw std::invalid_argument("sample_uniform: degenerate box");
    std::vector<Point> pts;
    pts.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
        Point p(b.dims());
        for (std::size_t d = 0; d < b.dims(); ++d) p[d] = rng.uniform(b.lower[d], b.upper[d]);
        pts.push_back(std::move(p));
    }
    return pts;
}

template <PointLabeler L>
Dataset get_examples(const L& labeler, std::int64_t count, const AxisBox& region, RngStream& rng) {
    if (count < 1) throw std::invalid_argument("get_examples: count must be >= 1");
    Dataset ds;
    ds.samples.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
        LabeledSample s;
        s.x.resize(region.dims());
        for (std::size_t d = 0; d < region.dims(); ++d)
            s.x[d] = rng.uniform(region.lower[d], region.upper[d]);
        s.y = labeler.label(s.x);
        ds.positives_count += s.y;
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

/// Uniform sampling over a union of possibly overlapping boxes: pick a box
/// with probability proportional to its volume, draw a point in it, and
/// accept with probability 1/multiplicity. This is exactly uniform over the
/// union without ever computing overlap volumes.
inline std::vector<Point> sample_union_uniform(const BoxSet& s, std::int64_t count,
                                               RngStream& rng) {
    if (s.empty()) throw std::invalid_argument("sample_union_uniform: empty box set");
    for (const auto& b : s)
        if (b.degenerate())
            throw std::invalid_argument("sample_union_uniform: degenerate box in set");
    std::vector<double> cumulative(s.size());
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        total += volume(s[i]);
        cumulative[i] = total;
    }

    std::vector<Point> pts;
    pts.reserve(static_cast<std::size_t>(count));
    Point p;
    while (static_cast<std::int64_t>(pts.size()) < count) {
        const double u = rng.next_double() * total;
        std::size_t pick = static_cast<std::size_t>(
            std::lower_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        if (pick >= s.size()) pick = s.size() - 1;
        const AxisBox& b = s[pick];
        p.resize(b.dims());
        for (std::size_t d = 0; d < b.dims(); ++d) p[d] = rng.uniform(b.lower[d], b.upper[d]);
        int multiplicity = 0;
        for (const auto& other : s)
            if (contains_point(other, p)) ++multiplicity;
        // pick's own box always contains p, so multiplicity >= 1
        if (multiplicity == 1 || rng.next_double() * multiplicity < 1.0) pts.push_back(p);
    }
    return pts;
}

/// CSV dump: one coordinate column per axis plus a label column.
inline void write_dataset_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    const std::size_t n = ds.dims();
    for (std::size_t d = 0; d < n; ++d) out << "x" << d << ",";
    out << "label\n";
    out.precision(17);
    for (const auto& s : ds.samples) {
        for (std::size_t d = 0; d < n; ++d) out << s.x[d] << ",";
        out << s.y << "\n";
    }
}

} // namespace preforest
