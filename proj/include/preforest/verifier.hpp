#pragma once

// End-to-end verification runs: train a forest on labeled samples, harvest
// pure-positive leaves per tree, validate each candidate box by active
// resampling, deduplicate, track Monte Carlo coverage and stop at the
// target. Also provides the no-filter ablation and the single-deep-tree
// baseline, and serializes reports.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "preforest/box.hpp"
#include "preforest/forest.hpp"
#include "preforest/guarantees.hpp"
#include "preforest/network.hpp"
#include "preforest/parallel.hpp"
#include "preforest/rng.hpp"
#include "preforest/sampling.hpp"

namespace preforest {

/// Labels unit-space points through the original-coordinate network.
struct UnitLabeler {
    const MarginLabeler* labeler;
    const UnitMap* map;

    int label(const Point& u) const { return labeler->label(map->from_unit(u)); }
};

struct RunOptions {
    std::int64_t n_error_samples = 0;     // 0 -> use k
    bool reuse_test_set = false;          // one fixed coverage test set instead of fresh draws
    std::int64_t max_total_resamples = 0; // 0 -> worst-case budget from the planner
    bool bonferroni = false;              // split delta across the worst-case box count
    int single_tree_depth = 11;
    unsigned threads = 1;
    std::string dump_forest_path;  // debug dump of the trained forest (json)
    std::string dump_dataset_path; // debug dump of the training set (csv)
};

struct VerificationTask {
    MarginLabeler labeler;
    AxisBox input_region; // original coordinates
    GuaranteeParams params;
    ForestConfig forest_config;
    std::int64_t m = 20000; // training samples
    std::int64_t k = 10000; // coverage test samples
    RunOptions options;

    std::vector<std::string> validate() const {
        if (m < 1) throw std::invalid_argument("task: m must be >= 1");
        if (k < 1) throw std::invalid_argument("task: k must be >= 1");
        if (input_region.dims() == 0) throw std::invalid_argument("task: empty input region");
        if (input_region.degenerate()) throw std::invalid_argument("task: degenerate input region");
        if (labeler.network().input_dim() != input_region.dims())
            throw std::invalid_argument("task: network input dim " +
                                        std::to_string(labeler.network().input_dim()) +
                                        " != region dim " + std::to_string(input_region.dims()));
        forest_config.validate(input_region.dims());
        return params.validate();
    }
};

enum class RunMode { verify, no_filter, single_tree };

inline std::string run_mode_name(RunMode m) {
    switch (m) {
    case RunMode::verify: return "verify";
    case RunMode::no_filter: return "no_filter";
    case RunMode::single_tree: return "single_tree";
    }
    return "?";
}

struct Certificate {
    std::int64_t n_per_box = 0;
    double delta = 0.0;
    double delta_per_box = 0.0; // delta, or delta / max_boxes under bonferroni
    double purity = 0.0;
    double epsilon = 0.0;
    double wilks_conf = 0.0;             // 1 - R^n
    double per_box_error_bound = 0.0;    // 1 - R, as a fraction of each box
    double coverage_lb_k3 = 0.0;         // ((k-2)/k)^N at the minimal k = 3
    double chernoff_p_neg = 0.0;         // per-cell miss probability at alpha = 2
    double chernoff_min_m = 0.0;         // training size needed for the occupancy bound
    double forest_miss_bound = 0.0;      // union bound over estimated positive cells
    std::int64_t max_boxes = 0;
    bool bonferroni = false;
};

struct BoxProvenance {
    std::int64_t tree = 0;
    std::int64_t leaf_node = 0;
    std::int64_t support = 0; // positive points backing the box (training or resampled)
    bool via_resample = false;
};

struct VerificationReport {
    BoxSet boxes; // original coordinates
    std::vector<BoxProvenance> provenance;
    double coverage_estimate = 0.0;
    std::vector<double> coverage_history; // one estimate per tree iteration
    double error_estimate = 0.0;
    std::int64_t trees_used = 0;
    std::int64_t resamples_spent = 0;
    Certificate certificate;
    double wall_time_ms = 0.0;
    std::uint64_t seed = 0;
    RunMode mode = RunMode::verify;
    bool coverage_target_met = false;
    bool budget_exhausted = false;
    std::int64_t coverage_positives_seen = 0;
    std::vector<std::string> warnings;
};

struct FilterOutcome {
    bool accepted = false;
    std::int64_t resamples_used = 0;
};

/// A box already holding >= n of its tree's samples is accepted outright;
/// otherwise n fresh uniform points must all label positive. Rejection
/// happens on the first negative draw, which cannot change the outcome.
template <PointLabeler L>
FilterOutcome filter_box(const AxisBox& b, std::int64_t tree_sample_count, std::int64_t n,
                         const L& labeler, RngStream rng) {
    if (n < 1) throw std::invalid_argument("filter_box: n must be >= 1");
    if (tree_sample_count >= n) return {true, 0};
    FilterOutcome out;
    Point p(b.dims());
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::size_t d = 0; d < b.dims(); ++d) p[d] = rng.uniform(b.lower[d], b.upper[d]);
        ++out.resamples_used;
        if (labeler.label(p) != 1) return out;
    }
    out.accepted = true;
    return out;
}

struct CoverageEstimate {
    double coverage = 0.0;
    std::int64_t positives_seen = 0;
    bool no_positives = false;
};

/// Fraction of freshly sampled positive points that fall inside the union.
template <PointLabeler L>
CoverageEstimate estimate_coverage(const BoxSet& boxes, const L& labeler, const AxisBox& domain,
                                   std::int64_t k, RngStream rng) {
    if (k < 1) throw std::invalid_argument("estimate_coverage: k must be >= 1");
    std::int64_t positives = 0, inside = 0;
    Point p(domain.dims());
    for (std::int64_t i = 0; i < k; ++i) {
        for (std::size_t d = 0; d < domain.dims(); ++d)
            p[d] = rng.uniform(domain.lower[d], domain.upper[d]);
        if (labeler.label(p) != 1) continue;
        ++positives;
        if (in_union(boxes, p)) ++inside;
    }
    CoverageEstimate est;
    est.positives_seen = positives;
    est.no_positives = positives == 0;
    est.coverage = static_cast<double>(inside) / static_cast<double>(std::max<std::int64_t>(1, positives));
    return est;
}

inline CoverageEstimate estimate_coverage_fixed(const BoxSet& boxes,
                                                const std::vector<Point>& points,
                                                const std::vector<int>& labels) {
    std::int64_t positives = 0, inside = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (labels[i] != 1) continue;
        ++positives;
        if (in_union(boxes, points[i])) ++inside;
    }
    CoverageEstimate est;
    est.positives_seen = positives;
    est.no_positives = positives == 0;
    est.coverage = static_cast<double>(inside) / static_cast<double>(std::max<std::int64_t>(1, positives));
    return est;
}

/// Fraction of uniform-over-union samples labeled negative.
template <PointLabeler L>
double estimate_error(const BoxSet& boxes, const L& labeler, std::int64_t n_samples,
                      RngStream rng) {
    if (boxes.empty()) throw std::invalid_argument("estimate_error: empty box set");
    if (n_samples < 1) throw std::invalid_argument("estimate_error: n_samples must be >= 1");
    const auto pts = sample_union_uniform(boxes, n_samples, rng);
    std::int64_t bad = 0;
    for (const auto& p : pts) bad += labeler.label(p) == 0;
    return static_cast<double>(bad) / static_cast<double>(n_samples);
}

namespace verifier_detail {

inline VerificationReport run_mode(const VerificationTask& task, std::uint64_t seed, RunMode mode) {
    const auto t0 = std::chrono::steady_clock::now();

    VerificationReport report;
    report.seed = seed;
    report.mode = mode;
    report.warnings = task.validate();

    const UnitMap map(task.input_region);
    const std::size_t N = task.input_region.dims();
    const UnitLabeler ulabel{&task.labeler, &map};

    ForestConfig fc = task.forest_config;
    if (mode == RunMode::single_tree) {
        fc.n_trees = 1;
        fc.max_depth = std::max(fc.max_depth, task.options.single_tree_depth);
    }
    fc.seed = rng_detail::combine(seed, stream_tag::forest);
    const XiGrid grid(unit_box(N), fc.max_depth);

    const BudgetPlan budget = plan_budget(task.params, fc.n_trees, fc.max_depth);
    const double delta_per_box =
        task.options.bonferroni ? task.params.delta / static_cast<double>(budget.max_boxes)
                                : task.params.delta;
    const std::int64_t n_per_box = wilks_n(delta_per_box, task.params.purity);
    const std::int64_t resample_cap = task.options.max_total_resamples > 0
                                          ? task.options.max_total_resamples
                                          : n_per_box * budget.max_boxes;

    // certificate (independent of run outcome)
    report.certificate.n_per_box = n_per_box;
    report.certificate.delta = task.params.delta;
    report.certificate.delta_per_box = delta_per_box;
    report.certificate.purity = task.params.purity;
    report.certificate.epsilon = task.params.epsilon;
    report.certificate.wilks_conf = wilks_confidence(n_per_box, task.params.purity);
    report.certificate.per_box_error_bound = 1.0 - task.params.purity;
    report.certificate.coverage_lb_k3 = coverage_lower_bound(3, N);
    report.certificate.chernoff_p_neg = chernoff_miss_probability(task.m, grid.xi, N, 2.0);
    report.certificate.chernoff_min_m = chernoff_min_training_samples(n_per_box, grid.xi, N, 2.0);
    report.certificate.max_boxes = budget.max_boxes;
    report.certificate.bonferroni = task.options.bonferroni;
    if (static_cast<double>(task.m) <= report.certificate.chernoff_min_m)
        report.warnings.push_back("training set of " + std::to_string(task.m) +
                                  " samples is below the occupancy-bound threshold " +
                                  std::to_string(report.certificate.chernoff_min_m));

    // training set and forest (trained once, up front)
    RngStream train_rng(seed, stream_tag::training);
    const Dataset data = get_examples(ulabel, task.m, grid.domain, train_rng);
    if (data.positives_count == 0)
        report.warnings.push_back("no positive training samples; preimage may be empty");
    const Forest forest = train_forest(data, fc, grid, task.options.threads);
    if (!task.options.dump_dataset_path.empty())
        write_dataset_csv(data, task.options.dump_dataset_path);
    if (!task.options.dump_forest_path.empty()) {
        std::ofstream dump(task.options.dump_forest_path);
        if (!dump)
            throw std::runtime_error("cannot open for writing: " + task.options.dump_forest_path);
        dump << forest_to_json(forest).dump(2) << "\n";
    }
    report.certificate.forest_miss_bound = forest_miss_probability(
        report.certificate.chernoff_p_neg, fc.n_trees,
        static_cast<double>(data.positives_count) / static_cast<double>(task.m), grid.xi, N);

    // optional fixed coverage test set
    std::vector<Point> fixed_points;
    std::vector<int> fixed_labels;
    if (task.options.reuse_test_set) {
        RngStream cov_rng = RngStream(seed, stream_tag::coverage).derive(0);
        fixed_points = sample_uniform(grid.domain, task.k, cov_rng);
        fixed_labels.reserve(fixed_points.size());
        for (const auto& p : fixed_points) fixed_labels.push_back(ulabel.label(p));
    }

    BoxSet accepted;                       // unit space
    std::vector<BoxProvenance> provenance; // parallel to accepted
    CoverageEstimate coverage{};
    bool no_positive_coverage_sample = false;

    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
        ++report.trees_used;
        auto leaves = get_pure_positive_leaves(forest.trees[t]);
        // leaf boxes already tile the unit domain; the clip only guards FP drift
        for (auto& leaf : leaves) {
            AxisBox clipped;
            if (!intersect(leaf.box, grid.domain, clipped))
                throw std::logic_error("pure leaf escaped the input domain");
            leaf.box = std::move(clipped);
        }

        std::vector<FilterOutcome> outcomes(leaves.size());
        if (mode == RunMode::no_filter) {
            for (auto& o : outcomes) o = {true, 0};
        } else {
            parallel_for(leaves.size(), task.options.threads, [&](std::size_t i) {
                outcomes[i] =
                    filter_box(leaves[i].box, leaves[i].n_samples, n_per_box, ulabel,
                               RngStream(seed, stream_tag::filter).derive(t, i));
            });
        }

        // sequential replay in leaf order keeps budget accounting deterministic
        for (std::size_t i = 0; i < leaves.size(); ++i) {
            const PureLeaf& leaf = leaves[i];
            if (mode == RunMode::no_filter) {
                accepted.push_back(leaf.box);
                provenance.push_back({static_cast<std::int64_t>(t), leaf.node_index,
                                      leaf.n_samples, false});
                continue;
            }
            if (leaf.n_samples >= n_per_box) {
                accepted.push_back(leaf.box);
                provenance.push_back({static_cast<std::int64_t>(t), leaf.node_index,
                                      leaf.n_samples, false});
                continue;
            }
            if (report.resamples_spent >= resample_cap) {
                report.budget_exhausted = true;
                continue;
            }
            report.resamples_spent += outcomes[i].resamples_used;
            if (outcomes[i].accepted) {
                accepted.push_back(leaf.box);
                provenance.push_back({static_cast<std::int64_t>(t), leaf.node_index, n_per_box,
                                      true});
            }
        }

        const auto kept = dedup_kept_indices(accepted);
        BoxSet next_boxes;
        std::vector<BoxProvenance> next_prov;
        next_boxes.reserve(kept.size());
        next_prov.reserve(kept.size());
        for (std::size_t idx : kept) {
            next_boxes.push_back(accepted[idx]);
            next_prov.push_back(provenance[idx]);
        }
        accepted.swap(next_boxes);
        provenance.swap(next_prov);

        if (task.options.reuse_test_set) {
            coverage = estimate_coverage_fixed(accepted, fixed_points, fixed_labels);
        } else {
            coverage = estimate_coverage(accepted, ulabel, grid.domain, task.k,
                                         RngStream(seed, stream_tag::coverage).derive(t + 1));
        }
        no_positive_coverage_sample = coverage.no_positives;
        report.coverage_history.push_back(coverage.coverage);
        if (coverage.coverage >= task.params.coverage_target) {
            report.coverage_target_met = true;
            break;
        }
    }

    report.coverage_estimate = coverage.coverage;
    report.coverage_positives_seen = coverage.positives_seen;
    if (no_positive_coverage_sample)
        report.warnings.push_back("coverage test set contained no positive points");

    if (accepted.empty()) {
        report.warnings.push_back("no boxes accepted; error estimate undefined, reported as 0");
        report.error_estimate = 0.0;
    } else {
        const std::int64_t n_err =
            task.options.n_error_samples > 0 ? task.options.n_error_samples : task.k;
        report.error_estimate =
            estimate_error(accepted, ulabel, n_err, RngStream(seed, stream_tag::error));
    }
    if (!report.coverage_target_met)
        report.warnings.push_back("coverage target not reached before the forest was exhausted");

    report.boxes.reserve(accepted.size());
    for (const auto& b : accepted) report.boxes.push_back(map.box_from_unit(b));
    report.provenance = std::move(provenance);

    report.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

} // namespace verifier_detail

inline VerificationReport run(const VerificationTask& task, std::uint64_t seed) {
    return verifier_detail::run_mode(task, seed, RunMode::verify);
}

/// Ablation: every pure-positive leaf is returned unvalidated.
inline VerificationReport run_ablation_no_filter(const VerificationTask& task, std::uint64_t seed) {
    return verifier_detail::run_mode(task, seed, RunMode::no_filter);
}

/// Baseline: one deep tree instead of a forest.
inline VerificationReport run_single_tree_baseline(const VerificationTask& task,
                                                   std::uint64_t seed) {
    return verifier_detail::run_mode(task, seed, RunMode::single_tree);
}

// --- serialization -----------------------------------------------------------

inline nlohmann::json box_to_json(const AxisBox& b) {
    return {{"lower", b.lower}, {"upper", b.upper}};
}

inline AxisBox box_from_json(const nlohmann::json& j) {
    return AxisBox(j.at("lower").get<std::vector<double>>(),
                   j.at("upper").get<std::vector<double>>());
}

inline nlohmann::json certificate_to_json(const Certificate& c) {
    return {{"n_per_box", c.n_per_box},
            {"delta", c.delta},
            {"delta_per_box", c.delta_per_box},
            {"purity", c.purity},
            {"epsilon", c.epsilon},
            {"wilks_confidence", c.wilks_conf},
            {"per_box_error_bound", c.per_box_error_bound},
            {"coverage_lower_bound_k3", c.coverage_lb_k3},
            {"chernoff_p_neg", c.chernoff_p_neg},
            {"chernoff_min_m", c.chernoff_min_m},
            {"forest_miss_bound", c.forest_miss_bound},
            {"max_boxes", c.max_boxes},
            {"bonferroni", c.bonferroni}};
}

/// Full resolved configuration: everything needed to reproduce the run.
inline nlohmann::json task_config_to_json(const VerificationTask& task) {
    nlohmann::json j;
    j["region"] = box_to_json(task.input_region);
    j["delta"] = task.params.delta;
    j["R"] = task.params.purity;
    j["epsilon"] = task.params.epsilon;
    j["coverage"] = task.params.coverage_target;
    j["m"] = task.m;
    j["k"] = task.k;
    j["trees"] = task.forest_config.n_trees;
    j["depth"] = task.forest_config.max_depth;
    j["bootstrap"] = task.forest_config.bootstrap;
    j["features_per_split"] = task.forest_config.features_per_split;
    j["min_samples_split"] = task.forest_config.min_samples_split;
    j["error_samples"] = task.options.n_error_samples;
    j["reuse_test_set"] = task.options.reuse_test_set;
    j["max_resamples"] = task.options.max_total_resamples;
    j["bonferroni"] = task.options.bonferroni;
    j["single_tree_depth"] = task.options.single_tree_depth;
    j["threads"] = task.options.threads;
    return j;
}

inline nlohmann::json report_to_json(const VerificationReport& r, const VerificationTask& task) {
    nlohmann::json j;
    j["boxes"] = nlohmann::json::array();
    for (const auto& b : r.boxes) j["boxes"].push_back(box_to_json(b));
    j["n_boxes"] = r.boxes.size();
    j["coverage_estimate"] = r.coverage_estimate;
    j["coverage_history"] = r.coverage_history;
    j["error_estimate"] = r.error_estimate;
    j["trees_used"] = r.trees_used;
    j["resamples_spent"] = r.resamples_spent;
    j["certificate"] = certificate_to_json(r.certificate);
    j["wall_time_ms"] = r.wall_time_ms;
    j["seed"] = r.seed;
    j["mode"] = run_mode_name(r.mode);
    j["coverage_target_met"] = r.coverage_target_met;
    j["budget_exhausted"] = r.budget_exhausted;
    j["coverage_positives_seen"] = r.coverage_positives_seen;
    j["warnings"] = r.warnings;
    j["provenance"] = nlohmann::json::array();
    for (const auto& p : r.provenance)
        j["provenance"].push_back({{"tree", p.tree},
                                   {"leaf_node", p.leaf_node},
                                   {"support", p.support},
                                   {"via_resample", p.via_resample}});
    j["config"] = task_config_to_json(task);
    return j;
}

inline void write_report_json(const VerificationReport& r, const VerificationTask& task,
                              const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << report_to_json(r, task).dump(2) << "\n";
}

/// One row per box: lower coordinates then upper coordinates.
inline void write_boxes_csv(const BoxSet& boxes, std::size_t dims, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (std::size_t d = 0; d < dims; ++d) out << "lower_" << d << ",";
    for (std::size_t d = 0; d < dims; ++d) out << "upper_" << d << (d + 1 < dims ? "," : "");
    out << "\n";
    out.precision(17);
    for (const auto& b : boxes) {
        for (std::size_t d = 0; d < dims; ++d) out << b.lower[d] << ",";
        for (std::size_t d = 0; d < dims; ++d) out << b.upper[d] << (d + 1 < dims ? "," : "");
        out << "\n";
    }
}

} // namespace preforest
