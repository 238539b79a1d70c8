#pragma once

// Experiment harnesses: the dimensional scalability sweep and the paired
// filter/no-filter ablation, both emitting per-run and aggregated CSV tables.

#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "preforest/synthetic.hpp"
#include "preforest/verifier.hpp"

namespace preforest {

/// Attach run parameters to a synthetic network + region.
inline VerificationTask make_task(const SyntheticTask& synth, GuaranteeParams params,
                                  ForestConfig forest, std::int64_t m = 20000,
                                  std::int64_t k = 10000, RunOptions options = {}) {
    return VerificationTask{synth.labeler, synth.domain, params, forest, m, k, options};
}

struct SuiteRow {
    std::int64_t n = 0; // input dimensionality
    std::uint64_t seed = 0;
    double coverage = 0.0;
    double error = 0.0;
    std::int64_t n_boxes = 0;
    std::int64_t n_trees_used = 0;
    double wall_time_ms = 0.0;
};

struct ScalabilityConfig {
    std::int64_t m = 20000;
    std::int64_t k = 10000;
    std::int64_t n_resample = 200; // fixed resample count; R is derived as delta^(1/n)
    double delta = 0.05;
    double coverage_target = 0.75;
    std::int64_t trees = 100;
    int depth = 5;
    unsigned threads = 1;
};

/// Purity level R such that wilks_n(delta, R) lands exactly on n.
inline double purity_for_resamples(double delta, std::int64_t n) {
    if (n < 1) throw std::invalid_argument("purity_for_resamples: n must be >= 1");
    return std::pow(delta, 1.0 / static_cast<double>(n));
}

/// Halfspace tasks of growing dimensionality, fixed sampling budget.
inline std::vector<SuiteRow> run_scalability_suite(const std::vector<std::int64_t>& dims,
                                                   const std::vector<std::uint64_t>& seeds,
                                                   const ScalabilityConfig& cfg = {}) {
    if (dims.empty() || seeds.empty())
        throw std::invalid_argument("run_scalability_suite: empty dims or seeds");
    std::vector<SuiteRow> rows;
    for (std::int64_t n : dims) {
        const SyntheticTask synth = generate_synthetic(preset_halfspace(static_cast<std::size_t>(n)), 0);
        for (std::uint64_t seed : seeds) {
            GuaranteeParams params;
            params.delta = cfg.delta;
            params.purity = purity_for_resamples(cfg.delta, cfg.n_resample);
            params.coverage_target = cfg.coverage_target;
            params.epsilon = 1.0 - params.purity;
            ForestConfig fc;
            fc.n_trees = cfg.trees;
            fc.max_depth = cfg.depth;
            RunOptions opts;
            opts.threads = cfg.threads;
            opts.n_error_samples = cfg.k;
            VerificationTask task = make_task(synth, params, fc, cfg.m, cfg.k, opts);
            const VerificationReport report = run(task, seed);
            rows.push_back({n, seed, report.coverage_estimate, report.error_estimate,
                            static_cast<std::int64_t>(report.boxes.size()), report.trees_used,
                            report.wall_time_ms});
        }
    }
    return rows;
}

struct AblationRow {
    std::string task;
    std::string mode; // "verify" or "no_filter"
    std::uint64_t seed = 0;
    double coverage = 0.0;
    double error = 0.0;
    std::int64_t n_boxes = 0;
    std::int64_t n_trees_used = 0;
    double wall_time_ms = 0.0;
};

struct NamedTask {
    std::string name;
    VerificationTask task;
};

/// Paired runs, filtering on vs off, same seeds.
inline std::vector<AblationRow> run_ablation_suite(const std::vector<NamedTask>& tasks,
                                                   const std::vector<std::uint64_t>& seeds) {
    if (tasks.empty() || seeds.empty())
        throw std::invalid_argument("run_ablation_suite: empty tasks or seeds");
    std::vector<AblationRow> rows;
    for (const auto& nt : tasks) {
        for (std::uint64_t seed : seeds) {
            for (const bool filtered : {true, false}) {
                const VerificationReport report =
                    filtered ? run(nt.task, seed) : run_ablation_no_filter(nt.task, seed);
                rows.push_back({nt.name, run_mode_name(report.mode), seed,
                                report.coverage_estimate, report.error_estimate,
                                static_cast<std::int64_t>(report.boxes.size()),
                                report.trees_used, report.wall_time_ms});
            }
        }
    }
    return rows;
}

// --- CSV emission --------------------------------------------------------

inline void write_scalability_csv(const std::vector<SuiteRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "n,seed,coverage,error,n_boxes,n_trees_used,wall_time_ms\n";
    for (const auto& r : rows)
        out << r.n << "," << r.seed << "," << r.coverage << "," << r.error << "," << r.n_boxes
            << "," << r.n_trees_used << "," << r.wall_time_ms << "\n";
}

inline void write_scalability_summary_csv(const std::vector<SuiteRow>& rows,
                                          const std::string& path) {
    std::map<std::int64_t, std::vector<const SuiteRow*>> by_dim;
    for (const auto& r : rows) by_dim[r.n].push_back(&r);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "n,coverage,error,n_boxes,n_trees_used,wall_time_ms\n";
    for (const auto& [n, group] : by_dim) {
        double cov = 0, err = 0, boxes = 0, trees = 0, ms = 0;
        for (const auto* r : group) {
            cov += r->coverage;
            err += r->error;
            boxes += static_cast<double>(r->n_boxes);
            trees += static_cast<double>(r->n_trees_used);
            ms += r->wall_time_ms;
        }
        const auto c = static_cast<double>(group.size());
        out << n << "," << cov / c << "," << err / c << "," << boxes / c << "," << trees / c
            << "," << ms / c << "\n";
    }
}

inline void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "task,mode,seed,coverage,error,n_boxes,n_trees_used,wall_time_ms\n";
    for (const auto& r : rows)
        out << r.task << "," << r.mode << "," << r.seed << "," << r.coverage << "," << r.error
            << "," << r.n_boxes << "," << r.n_trees_used << "," << r.wall_time_ms << "\n";
}

inline void write_ablation_summary_csv(const std::vector<AblationRow>& rows,
                                       const std::string& path) {
    std::map<std::pair<std::string, std::string>, std::vector<const AblationRow*>> groups;
    for (const auto& r : rows) groups[{r.task, r.mode}].push_back(&r);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << "task,mode,coverage,error,n_boxes,n_trees_used,wall_time_ms\n";
    for (const auto& [key, group] : groups) {
        double cov = 0, err = 0, boxes = 0, trees = 0, ms = 0;
        for (const auto* r : group) {
            cov += r->coverage;
            err += r->error;
            boxes += static_cast<double>(r->n_boxes);
            trees += static_cast<double>(r->n_trees_used);
            ms += r->wall_time_ms;
        }
        const auto c = static_cast<double>(group.size());
        out << key.first << "," << key.second << "," << cov / c << "," << err / c << ","
            << boxes / c << "," << trees / c << "," << ms / c << "\n";
    }
}

} // namespace preforest
