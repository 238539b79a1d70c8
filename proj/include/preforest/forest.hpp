#pragma once

// Randomized depth-bounded decision trees with Gini splitting on dyadic grid
// thresholds, trained on bootstrap resamples. Pure-positive leaves are the
// candidate preimage boxes everything else revolves around.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "preforest/box.hpp"
#include "preforest/parallel.hpp"
#include "preforest/rng.hpp"
#include "preforest/sampling.hpp"

namespace preforest {

struct ForestConfig {
    std::int64_t n_trees = 100;
    int max_depth = 5;
    bool bootstrap = true;
    int features_per_split = 0; // 0 resolves to ceil(sqrt(N))
    std::int64_t min_samples_split = 2;
    std::uint64_t seed = 0;

    int resolved_features_per_split(std::size_t dims) const {
        const int n = static_cast<int>(dims);
        if (features_per_split == 0)
            return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
        if (features_per_split < 1 || features_per_split > n)
            throw std::invalid_argument("features_per_split must be in [1, N]");
        return features_per_split;
    }

    void validate(std::size_t dims) const {
        if (n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
        if (max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
        if (min_samples_split < 2) throw std::invalid_argument("min_samples_split must be >= 2");
        (void)resolved_features_per_split(dims);
    }
};

/// 2p(1-p): the probability two independent draws from the node disagree.
inline double gini_impurity(std::int64_t n_pos, std::int64_t n_total) {
    if (n_pos < 0 || n_total < 0 || n_pos > n_total)
        throw std::invalid_argument("gini_impurity: need 0 <= n_pos <= n_total");
    if (n_total == 0) return 0.0;
    const double p = static_cast<double>(n_pos) / static_cast<double>(n_total);
    return 2.0 * p * (1.0 - p);
}

struct TreeNode {
    int axis = -1; // -1 marks a leaf
    double threshold = 0.0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::int64_t n_samples = 0;
    std::int64_t n_positive = 0;
    AxisBox box;

    bool is_leaf() const { return axis < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes; // nodes[0] is the root, children follow in DFS order

    const TreeNode& root() const { return nodes.front(); }
};

struct Forest {
    std::vector<Tree> trees;
    ForestConfig config;
    XiGrid grid;
};

struct SplitChoice {
    int axis = -1;
    double threshold = 0.0;
    double impurity_decrease = 0.0;
};

/// Exhaustive scan over grid thresholds strictly inside the box on the
/// candidate axes; returns the split maximizing the weighted Gini decrease.
/// Thresholds that leave a child empty are skipped. Ties resolve to the
/// lowest axis, then the lowest threshold.
inline std::optional<SplitChoice> best_split(const Dataset& data,
                                             std::span<const std::int32_t> idx, const AxisBox& box,
                                             const XiGrid& grid,
                                             std::span<const int> candidate_axes) {
    const std::int64_t n = static_cast<std::int64_t>(idx.size());
    if (n < 2) return std::nullopt;
    std::int64_t n_pos = 0;
    for (std::int32_t i : idx) n_pos += data.samples[i].y;
    const double parent = gini_impurity(n_pos, n);

    std::optional<SplitChoice> best;
    std::vector<std::int64_t> bin_total, bin_pos;
    for (int axis : candidate_axes) {
        // grid lines strictly inside the box on this axis
        const std::int64_t k_first =
            static_cast<std::int64_t>(std::floor(grid.coord(axis, box.lower[axis]))) + 1;
        const std::int64_t k_last =
            static_cast<std::int64_t>(std::ceil(grid.coord(axis, box.upper[axis]))) - 1;
        if (k_first > k_last) continue;

        const std::int64_t nbins = k_last - k_first + 2; // one extra bin below k_first
        bin_total.assign(nbins, 0);
        bin_pos.assign(nbins, 0);
        for (std::int32_t i : idx) {
            const double c = grid.coord(axis, data.samples[i].x[axis]);
            std::int64_t bin = static_cast<std::int64_t>(std::floor(c)) - (k_first - 1);
            bin = std::clamp<std::int64_t>(bin, 0, nbins - 1);
            ++bin_total[bin];
            bin_pos[bin] += data.samples[i].y;
        }

        std::int64_t left_n = 0, left_pos = 0;
        for (std::int64_t k = k_first; k <= k_last; ++k) {
            left_n += bin_total[k - k_first];
            left_pos += bin_pos[k - k_first];
            const std::int64_t right_n = n - left_n;
            const std::int64_t right_pos = n_pos - left_pos;
            if (left_n == 0 || right_n == 0) continue;
            const double child =
                (static_cast<double>(left_n) * gini_impurity(left_pos, left_n) +
                 static_cast<double>(right_n) * gini_impurity(right_pos, right_n)) /
                static_cast<double>(n);
            const double decrease = parent - child;
            if (!best || decrease > best->impurity_decrease)
                best = SplitChoice{axis, grid.line(axis, k), decrease};
        }
    }
    return best;
}

namespace forest_detail {

struct Builder {
    const Dataset& data;
    const ForestConfig& config;
    const XiGrid& grid;
    RngStream& rng;
    int features_per_split;
    std::vector<TreeNode> nodes;
    std::vector<int> axis_pool;

    std::vector<int> pick_axes() {
        const std::size_t n_axes = axis_pool.size();
        const auto k = static_cast<std::size_t>(features_per_split);
        // partial Fisher-Yates; rng consumption order is part of determinism
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.next_below(n_axes - i));
            std::swap(axis_pool[i], axis_pool[j]);
        }
        std::vector<int> axes(axis_pool.begin(), axis_pool.begin() + static_cast<long>(k));
        std::sort(axes.begin(), axes.end());
        return axes;
    }

    std::int32_t build(std::span<std::int32_t> idx, const AxisBox& box, int depth) {
        std::int64_t n_pos = 0;
        for (std::int32_t i : idx) n_pos += data.samples[i].y;
        const auto n = static_cast<std::int64_t>(idx.size());

        const auto node_id = static_cast<std::int32_t>(nodes.size());
        nodes.emplace_back();
        nodes[node_id].n_samples = n;
        nodes[node_id].n_positive = n_pos;
        nodes[node_id].box = box;

        const bool pure = n_pos == 0 || n_pos == n;
        if (pure || depth >= config.max_depth || n < config.min_samples_split) return node_id;

        const auto choice = best_split(data, idx, box, grid, pick_axes());
        if (!choice) return node_id;

        auto mid = std::partition(idx.begin(), idx.end(), [&](std::int32_t i) {
            return data.samples[i].x[choice->axis] < choice->threshold;
        });
        const auto left_count = static_cast<std::size_t>(mid - idx.begin());

        AxisBox left_box = box;
        left_box.upper[choice->axis] = choice->threshold;
        AxisBox right_box = box;
        right_box.lower[choice->axis] = choice->threshold;

        nodes[node_id].axis = choice->axis;
        nodes[node_id].threshold = choice->threshold;
        const std::int32_t left = build(idx.subspan(0, left_count), left_box, depth + 1);
        nodes[node_id].left = left;
        const std::int32_t right = build(idx.subspan(left_count), right_box, depth + 1);
        nodes[node_id].right = right;
        return node_id;
    }
};

} // namespace forest_detail

/// One tree on a bootstrap resample (when configured) of the dataset,
/// recursively split until purity, max depth, no valid split, or node size.
/// Leaf boxes tile the grid domain exactly.
inline Tree train_tree(const Dataset& data, const ForestConfig& config, const XiGrid& grid,
                       RngStream rng) {
    if (data.samples.empty()) throw std::invalid_argument("train_tree: empty dataset");
    config.validate(data.dims());

    const auto m = static_cast<std::int64_t>(data.size());
    std::vector<std::int32_t> indices(static_cast<std::size_t>(m));
    if (config.bootstrap) {
        for (auto& i : indices)
            i = static_cast<std::int32_t>(rng.next_below(static_cast<std::uint64_t>(m)));
    } else {
        for (std::int64_t i = 0; i < m; ++i) indices[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(i);
    }

    forest_detail::Builder builder{data, config, grid, rng,
                                   config.resolved_features_per_split(data.dims()),
                                   {},
                                   {}};
    builder.axis_pool.resize(data.dims());
    for (std::size_t i = 0; i < data.dims(); ++i) builder.axis_pool[i] = static_cast<int>(i);
    builder.nodes.reserve(64);
    builder.build(indices, grid.domain, 0);

    Tree t;
    t.nodes = std::move(builder.nodes);
    return t;
}

/// T independent trees; tree t draws from stream (config.seed, t).
inline Forest train_forest(const Dataset& data, const ForestConfig& config, const XiGrid& grid,
                           unsigned threads = 1) {
    if (data.samples.empty()) throw std::invalid_argument("train_forest: empty dataset");
    config.validate(data.dims());
    Forest f;
    f.config = config;
    f.grid = grid;
    f.trees.resize(static_cast<std::size_t>(config.n_trees));
    parallel_for(f.trees.size(), threads, [&](std::size_t t) {
        f.trees[t] = train_tree(data, config, grid,
                                RngStream(config.seed, static_cast<std::uint64_t>(t)));
    });
    return f;
}

/// A candidate box: a leaf whose in-bootstrap samples are all positive,
/// annotated with that sample count for the resample-skip check.
struct PureLeaf {
    AxisBox box;
    std::int64_t n_samples = 0;
    std::int32_t node_index = -1;
};

inline std::vector<PureLeaf> get_pure_positive_leaves(const Tree& tree) {
    std::vector<PureLeaf> out;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const TreeNode& n = tree.nodes[i];
        if (n.is_leaf() && n.n_samples >= 1 && n.n_positive == n.n_samples)
            out.push_back({n.box, n.n_samples, static_cast<std::int32_t>(i)});
    }
    return out;
}

// --- debug dump ------------------------------------------------------------

inline nlohmann::json tree_node_to_json(const Tree& tree, std::int32_t id) {
    const TreeNode& n = tree.nodes[static_cast<std::size_t>(id)];
    nlohmann::json j;
    j["n_samples"] = n.n_samples;
    j["n_positive"] = n.n_positive;
    if (n.is_leaf()) {
        j["leaf"] = true;
        j["box"] = {{"lower", n.box.lower}, {"upper", n.box.upper}};
    } else {
        j["axis"] = n.axis;
        j["threshold"] = n.threshold;
        j["left"] = tree_node_to_json(tree, n.left);
        j["right"] = tree_node_to_json(tree, n.right);
    }
    return j;
}

inline nlohmann::json forest_to_json(const Forest& f) {
    nlohmann::json j;
    j["n_trees"] = f.trees.size();
    j["max_depth"] = f.config.max_depth;
    j["xi"] = f.grid.xi;
    j["trees"] = nlohmann::json::array();
    for (const auto& t : f.trees) j["trees"].push_back(tree_node_to_json(t, 0));
    return j;
}

} // namespace preforest
