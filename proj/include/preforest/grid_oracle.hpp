#pragma once

// Brute-force grid oracle: classifies every cell of a dyadic grid over the
// input region as positive, negative or mixed by probing corners, center and
// one refinement level. Gives exact preimage volume brackets for the
// low-dimensional tasks that back statistical acceptance checks.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "preforest/box.hpp"
#include "preforest/network.hpp"
#include "preforest/parallel.hpp"

namespace preforest {

enum class CellClass : std::int8_t { negative = 0, positive = 1, mixed = 2 };

class GridOracle {
public:
    GridOracle(AxisBox domain, int depth)
        : domain_(std::move(domain)), depth_(depth), cells_per_axis_(std::int64_t{1} << depth) {
        const std::size_t n = domain_.dims();
        if (n < 1 || n > 4) throw std::invalid_argument("GridOracle: dims must be in [1, 4]");
        if (depth < 1) throw std::invalid_argument("GridOracle: depth must be >= 1");
        if (static_cast<std::int64_t>(n) * depth > 24)
            throw std::invalid_argument("GridOracle: N * depth must be <= 24");
        total_cells_ = 1;
        for (std::size_t i = 0; i < n; ++i) total_cells_ *= cells_per_axis_;
        classes_.assign(static_cast<std::size_t>(total_cells_), CellClass::mixed);
        cell_volume_ = volume(domain_);
        for (std::size_t i = 0; i < n; ++i) cell_volume_ /= static_cast<double>(cells_per_axis_);
    }

    std::size_t dims() const { return domain_.dims(); }
    int depth() const { return depth_; }
    std::int64_t total_cells() const { return total_cells_; }
    double cell_volume() const { return cell_volume_; }
    const AxisBox& domain() const { return domain_; }
    CellClass cell_class(std::int64_t index) const {
        return classes_[static_cast<std::size_t>(index)];
    }

    AxisBox cell_box(std::int64_t index) const {
        const std::size_t n = dims();
        std::vector<double> lo(n), hi(n);
        std::int64_t rest = index;
        for (std::size_t i = 0; i < n; ++i) {
            const std::int64_t k = rest % cells_per_axis_;
            rest /= cells_per_axis_;
            const double step = (domain_.upper[i] - domain_.lower[i]) /
                                static_cast<double>(cells_per_axis_);
            lo[i] = domain_.lower[i] + static_cast<double>(k) * step;
            hi[i] = domain_.lower[i] + static_cast<double>(k + 1) * step;
        }
        return AxisBox(std::move(lo), std::move(hi));
    }

    std::int64_t count(CellClass c) const {
        std::int64_t n = 0;
        for (auto cc : classes_)
            if (cc == c) ++n;
        return n;
    }

    double class_volume(CellClass c) const { return static_cast<double>(count(c)) * cell_volume_; }

    /// [positive volume, positive + mixed volume] brackets the true preimage.
    std::pair<double, double> volume_bracket() const {
        const double pos = class_volume(CellClass::positive);
        return {pos, pos + class_volume(CellClass::mixed)};
    }

    template <typename Labeler>
    void classify(const Labeler& labeler, unsigned threads = 1) {
        parallel_for(static_cast<std::size_t>(total_cells_), threads, [&](std::size_t idx) {
            classes_[idx] = classify_cell(labeler, cell_box(static_cast<std::int64_t>(idx)));
        });
    }

private:
    template <typename Labeler>
    CellClass classify_cell(const Labeler& labeler, const AxisBox& cell) const {
        const std::size_t n = dims();
        int first = -1;
        bool agree = true;
        auto probe = [&](const Point& p) {
            const int y = labeler.label(p);
            if (first < 0) first = y;
            else if (y != first) agree = false;
        };

        // Probes are pulled strictly inside the cell: closed-region boundaries
        // have measure zero, and a probe landing exactly on a shared face
        // would smear one cell's class into its neighbor.
        constexpr double inset = 0x1p-30;
        Point p(n);
        auto at = [&](std::size_t i, double t) {
            return cell.lower[i] + t * (cell.upper[i] - cell.lower[i]);
        };
        // near-corners
        for (std::uint32_t mask = 0; mask < (1u << n) && agree; ++mask) {
            for (std::size_t i = 0; i < n; ++i)
                p[i] = at(i, (mask >> i) & 1u ? 1.0 - inset : inset);
            probe(p);
        }
        // center
        if (agree) {
            for (std::size_t i = 0; i < n; ++i) p[i] = at(i, 0.5);
            probe(p);
        }
        // refinement: centers of the 2^n sub-cells
        for (std::uint32_t mask = 0; mask < (1u << n) && agree; ++mask) {
            for (std::size_t i = 0; i < n; ++i) p[i] = at(i, (mask >> i) & 1u ? 0.75 : 0.25);
            probe(p);
        }
        if (!agree) return CellClass::mixed;
        return first == 1 ? CellClass::positive : CellClass::negative;
    }

    AxisBox domain_;
    int depth_;
    std::int64_t cells_per_axis_;
    std::int64_t total_cells_ = 0;
    double cell_volume_ = 0.0;
    std::vector<CellClass> classes_;
};

template <typename Labeler>
GridOracle build_oracle(const Labeler& labeler, const AxisBox& domain, int depth,
                        unsigned threads = 1) {
    GridOracle oracle(domain, depth);
    oracle.classify(labeler, threads);
    return oracle;
}

/// vol(positive cells ∩ union) / vol(positive cells); exact because cells and
/// boxes are both axis-aligned.
inline double oracle_coverage(const GridOracle& oracle, const BoxSet& boxes) {
    const double positive = oracle.class_volume(CellClass::positive);
    if (positive <= 0.0) throw std::runtime_error("oracle_coverage: no positive cells");
    if (boxes.empty()) return 0.0;
    double covered = 0.0;
    for (std::int64_t i = 0; i < oracle.total_cells(); ++i) {
        if (oracle.cell_class(i) != CellClass::positive) continue;
        covered += union_volume_within(oracle.cell_box(i), boxes);
    }
    return covered / positive;
}

struct OracleError {
    double error = 0.0;       // negative-cell share of the union (certain)
    double uncertainty = 0.0; // mixed-cell share of the union (unresolved)
    double union_volume = 0.0;
};

inline OracleError oracle_error(const GridOracle& oracle, const BoxSet& boxes) {
    if (boxes.empty()) throw std::invalid_argument("oracle_error: empty union");
    OracleError result;
    double negative = 0.0, mixed = 0.0, total = 0.0;
    for (std::int64_t i = 0; i < oracle.total_cells(); ++i) {
        const double v = union_volume_within(oracle.cell_box(i), boxes);
        if (v == 0.0) continue;
        total += v;
        if (oracle.cell_class(i) == CellClass::negative) negative += v;
        else if (oracle.cell_class(i) == CellClass::mixed) mixed += v;
    }
    if (total <= 0.0) throw std::runtime_error("oracle_error: union has zero volume");
    result.error = negative / total;
    result.uncertainty = mixed / total;
    result.union_volume = total;
    return result;
}

} // namespace preforest
