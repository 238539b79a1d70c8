// Command-line front end: verify runs, budget planning, grid-oracle checks
// and benchmark suites, all reproducible from a seed and a config file.

#include <cstdio>
#include <cstring>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "preforest/grid_oracle.hpp"
#include "preforest/suites.hpp"
#include "preforest/synthetic.hpp"
#include "preforest/verifier.hpp"

using namespace preforest;
using nlohmann::json;

namespace {

struct VerifyConfig {
    std::string network_path;
    std::string property_path;
    std::string region_text; // json array of [lo, hi] pairs
    std::string out_prefix = "preforest_run";
    std::string mode = "verify";
    double delta = 0.001;
    double purity = 0.995;
    double epsilon = 0.005;
    double coverage = 0.9;
    std::int64_t m = 20000;
    std::int64_t k = 10000;
    std::int64_t trees = 100;
    int depth = 5;
    bool bootstrap = true;
    int features_per_split = 0;
    std::int64_t min_samples_split = 2;
    std::uint64_t seed = 0;
    unsigned threads = default_thread_count();
    std::int64_t max_resamples = 0;
    std::int64_t error_samples = 0;
    bool reuse_test_set = false;
    bool bonferroni = false;
    int single_tree_depth = 11;
    std::string dump_forest;
    std::string dump_dataset;
};

AxisBox region_from_json(const json& j) {
    std::vector<double> lo, hi;
    for (const auto& pair : j) {
        if (!pair.is_array() || pair.size() != 2)
            throw std::runtime_error("region: expected [lo, hi] per axis");
        lo.push_back(pair.at(0).get<double>());
        hi.push_back(pair.at(1).get<double>());
    }
    if (lo.empty()) throw std::runtime_error("region: no axes given");
    return AxisBox(std::move(lo), std::move(hi));
}

void apply_config_file(VerifyConfig& cfg, const std::string& path) {
    const json j = load_json_file(path);
    auto set_if = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).template get<std::decay_t<decltype(field)>>();
    };
    set_if("network", cfg.network_path);
    set_if("property", cfg.property_path);
    if (j.contains("region")) cfg.region_text = j.at("region").dump();
    set_if("out", cfg.out_prefix);
    set_if("mode", cfg.mode);
    set_if("delta", cfg.delta);
    set_if("R", cfg.purity);
    set_if("epsilon", cfg.epsilon);
    set_if("coverage", cfg.coverage);
    set_if("m", cfg.m);
    set_if("k", cfg.k);
    set_if("trees", cfg.trees);
    set_if("depth", cfg.depth);
    set_if("bootstrap", cfg.bootstrap);
    set_if("features_per_split", cfg.features_per_split);
    set_if("min_samples_split", cfg.min_samples_split);
    set_if("seed", cfg.seed);
    set_if("threads", cfg.threads);
    set_if("max_resamples", cfg.max_resamples);
    set_if("error_samples", cfg.error_samples);
    set_if("reuse_test_set", cfg.reuse_test_set);
    set_if("bonferroni", cfg.bonferroni);
    set_if("single_tree_depth", cfg.single_tree_depth);
    set_if("dump_forest", cfg.dump_forest);
    set_if("dump_dataset", cfg.dump_dataset);
}

int command_verify(const VerifyConfig& cfg) {
    if (cfg.network_path.empty()) throw std::runtime_error("verify: --network is required");
    if (cfg.property_path.empty()) throw std::runtime_error("verify: --property is required");
    if (cfg.region_text.empty()) throw std::runtime_error("verify: --region is required");

    Network net = load_network(cfg.network_path);
    OutputProperty prop = load_property(cfg.property_path);
    const AxisBox region = region_from_json(json::parse(cfg.region_text));

    GuaranteeParams params;
    params.delta = cfg.delta;
    params.purity = cfg.purity;
    params.epsilon = cfg.epsilon;
    params.coverage_target = cfg.coverage;

    ForestConfig forest;
    forest.n_trees = cfg.trees;
    forest.max_depth = cfg.depth;
    forest.bootstrap = cfg.bootstrap;
    forest.features_per_split = cfg.features_per_split;
    forest.min_samples_split = cfg.min_samples_split;

    RunOptions options;
    options.n_error_samples = cfg.error_samples;
    options.reuse_test_set = cfg.reuse_test_set;
    options.max_total_resamples = cfg.max_resamples;
    options.bonferroni = cfg.bonferroni;
    options.single_tree_depth = cfg.single_tree_depth;
    options.threads = cfg.threads;
    options.dump_forest_path = cfg.dump_forest;
    options.dump_dataset_path = cfg.dump_dataset;

    VerificationTask task{MarginLabeler(std::move(net), std::move(prop)), region, params,
                          forest, cfg.m, cfg.k, options};

    VerificationReport report;
    if (cfg.mode == "verify") report = run(task, cfg.seed);
    else if (cfg.mode == "no_filter") report = run_ablation_no_filter(task, cfg.seed);
    else if (cfg.mode == "single_tree") report = run_single_tree_baseline(task, cfg.seed);
    else throw std::runtime_error("verify: unknown mode '" + cfg.mode + "'");

    write_report_json(report, task, cfg.out_prefix + ".report.json");
    write_boxes_csv(report.boxes, region.dims(), cfg.out_prefix + ".boxes.csv");

    std::printf("n_boxes=%zu coverage=%.4f error=%.4f time_ms=%.1f trees_used=%lld mode=%s\n",
                report.boxes.size(), report.coverage_estimate, report.error_estimate,
                report.wall_time_ms, static_cast<long long>(report.trees_used),
                run_mode_name(report.mode).c_str());
    return report.coverage_target_met ? 0 : 2;
}

int command_plan(double delta, double R, const std::vector<std::int64_t>& trees,
                 const std::vector<int>& depths, const std::string& out) {
    if (trees.empty() || depths.empty()) throw std::runtime_error("plan: empty T or D range");
    GuaranteeParams params;
    params.delta = delta;
    params.purity = R;
    params.validate();

    std::vector<BudgetPlan> plans;
    for (std::int64_t T : trees)
        for (int D : depths) plans.push_back(plan_budget(params, T, D));

    std::printf("%8s %4s %12s %10s %16s\n", "T", "D", "max_boxes", "n_per_box",
                "total_resamples");
    for (const auto& p : plans)
        std::printf("%8lld %4d %12lld %10lld %16lld\n", static_cast<long long>(p.trees), p.depth,
                    static_cast<long long>(p.max_boxes), static_cast<long long>(p.n_per_box),
                    static_cast<long long>(p.total_resamples));

    if (!out.empty()) {
        std::ofstream csv(out);
        if (!csv) throw std::runtime_error("cannot open for writing: " + out);
        csv << "T,D,max_boxes,n_per_box,total_resamples\n";
        for (const auto& p : plans)
            csv << p.trees << "," << p.depth << "," << p.max_boxes << "," << p.n_per_box << ","
                << p.total_resamples << "\n";
    }
    return 0;
}

SyntheticSpec preset_by_name(const std::string& name) {
    if (name == "box2d") return preset_box2d();
    if (name == "noisy_box2d") return preset_noisy_box2d();
    if (name == "multibox2d") return preset_multibox2d();
    if (name == "checker2d") return preset_checkerboard2d();
    if (name == "halfspace2d") return preset_halfspace(2);
    if (name == "halfspace3d") return preset_halfspace(3);
    throw std::runtime_error("unknown task preset '" + name + "'");
}

int command_oracle(const std::string& task_name, int depth, std::uint64_t seed,
                   unsigned threads) {
    const SyntheticTask synth = generate_synthetic(preset_by_name(task_name), seed);
    const GridOracle oracle = build_oracle(synth.labeler, synth.domain, depth, threads);
    const auto [lo, hi] = oracle.volume_bracket();
    std::printf("task=%s depth=%d cells=%lld\n", task_name.c_str(), depth,
                static_cast<long long>(oracle.total_cells()));
    std::printf("positive_volume_bracket=[%.9f, %.9f]\n", lo, hi);
    if (synth.positive_volume >= 0.0)
        std::printf("analytic_positive_volume=%.9f\n", synth.positive_volume);
    return 0;
}

int command_bench(const std::string& suite, int n_seeds,
                  const std::vector<std::int64_t>& dims, std::int64_t trees, std::int64_t m,
                  std::int64_t k, const std::string& out_dir, unsigned threads) {
    if (n_seeds < 1) throw std::runtime_error("bench: --seeds must be >= 1");
    std::vector<std::uint64_t> seeds;
    for (int s = 0; s < n_seeds; ++s) seeds.push_back(static_cast<std::uint64_t>(s));
    const std::string prefix = out_dir.empty() ? std::string(".") : out_dir;

    if (suite == "scalability") {
        ScalabilityConfig cfg;
        cfg.m = m;
        cfg.k = k;
        cfg.trees = trees;
        cfg.threads = threads;
        const auto rows = run_scalability_suite(dims, seeds, cfg);
        write_scalability_csv(rows, prefix + "/scalability.csv");
        write_scalability_summary_csv(rows, prefix + "/scalability_summary.csv");
        std::printf("scalability: %zu runs -> %s/scalability.csv\n", rows.size(),
                    prefix.c_str());
        return 0;
    }
    if (suite == "ablation") {
        GuaranteeParams params;
        params.delta = 0.05;
        params.purity = 0.9;
        params.coverage_target = 0.9;
        params.epsilon = 0.1;
        RunOptions options;
        options.threads = threads;
        options.n_error_samples = k;

        std::vector<NamedTask> tasks;
        for (const char* name : {"noisy_box2d", "multibox2d"}) {
            const SyntheticTask synth = generate_synthetic(preset_by_name(name), 0);
            ForestConfig fc;
            fc.n_trees = trees;
            // the noisy boundary needs two splits per side to isolate purity
            fc.max_depth = std::strcmp(name, "noisy_box2d") == 0 ? 8 : 5;
            tasks.push_back({name, make_task(synth, params, fc, m, k, options)});
        }
        const auto rows = run_ablation_suite(tasks, seeds);
        write_ablation_csv(rows, prefix + "/ablation.csv");
        write_ablation_summary_csv(rows, prefix + "/ablation_summary.csv");
        std::printf("ablation: %zu runs -> %s/ablation.csv\n", rows.size(), prefix.c_str());
        return 0;
    }
    throw std::runtime_error("bench: unknown suite '" + suite + "' (scalability|ablation)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"probabilistic preimage approximation with randomized forests"};
    app.require_subcommand(1);

    // verify
    VerifyConfig cfg;
    std::string config_path;
    auto* verify = app.add_subcommand("verify", "run a verification and write report files");
    verify->add_option("--config", config_path, "json config file; flags override its values");
    auto* net_opt = verify->add_option("--network", cfg.network_path, "network weights (json)");
    auto* prop_opt = verify->add_option("--property", cfg.property_path, "output property (json)");
    auto* region_opt =
        verify->add_option("--region", cfg.region_text, "input region, e.g. [[0,1],[0,1]]");
    auto* out_opt = verify->add_option("--out", cfg.out_prefix, "output path prefix");
    auto* mode_opt =
        verify->add_option("--mode", cfg.mode, "verify | no_filter | single_tree");
    auto* delta_opt = verify->add_option("--delta", cfg.delta, "confidence error");
    auto* r_opt = verify->add_option("--R", cfg.purity, "required box purity");
    auto* eps_opt = verify->add_option("--epsilon", cfg.epsilon, "tolerated union error");
    auto* cov_opt = verify->add_option("--coverage", cfg.coverage, "target coverage");
    auto* m_opt = verify->add_option("--m", cfg.m, "training samples");
    auto* k_opt = verify->add_option("--k", cfg.k, "coverage test samples");
    auto* trees_opt = verify->add_option("--trees", cfg.trees, "number of trees");
    auto* depth_opt = verify->add_option("--depth", cfg.depth, "maximum tree depth");
    auto* seed_opt = verify->add_option("--seed", cfg.seed, "run seed");
    auto* threads_opt = verify->add_option("--threads", cfg.threads, "worker threads");
    auto* maxres_opt =
        verify->add_option("--max-resamples", cfg.max_resamples, "resampling budget cap");
    auto* errs_opt =
        verify->add_option("--error-samples", cfg.error_samples, "error estimate samples");
    auto* reuse_flag =
        verify->add_flag("--reuse-test-set", cfg.reuse_test_set, "reuse one coverage test set");
    auto* bonf_flag =
        verify->add_flag("--bonferroni", cfg.bonferroni, "split delta across the max box count");
    auto* stdepth_opt = verify->add_option("--single-tree-depth", cfg.single_tree_depth,
                                           "depth used by the single_tree mode");
    auto* dumpf_opt = verify->add_option("--dump-forest", cfg.dump_forest, "write forest json");
    auto* dumpd_opt =
        verify->add_option("--dump-dataset", cfg.dump_dataset, "write training csv");

    // plan
    double plan_delta = 0.001, plan_r = 0.995;
    std::vector<std::int64_t> plan_trees{1};
    std::vector<int> plan_depths{5};
    std::string plan_out;
    auto* plan = app.add_subcommand("plan", "print the resampling budget over a (T, D) grid");
    plan->add_option("--delta", plan_delta, "confidence error");
    plan->add_option("--R", plan_r, "required box purity");
    plan->add_option("--trees", plan_trees, "tree counts")->delimiter(',');
    plan->add_option("--depth", plan_depths, "depths")->delimiter(',');
    plan->add_option("--out", plan_out, "also write a csv table");

    // oracle
    std::string oracle_task = "box2d";
    int oracle_depth = 8;
    std::uint64_t oracle_seed = 0;
    unsigned oracle_threads = default_thread_count();
    auto* oracle = app.add_subcommand("oracle", "grid-oracle volume bracket for a preset task");
    oracle->add_option("--task", oracle_task,
                       "box2d | noisy_box2d | multibox2d | checker2d | halfspace2d | halfspace3d");
    oracle->add_option("--depth", oracle_depth, "grid depth per axis");
    oracle->add_option("--seed", oracle_seed, "generator seed");
    oracle->add_option("--threads", oracle_threads, "worker threads");

    // bench
    std::string bench_suite = "ablation";
    int bench_seeds = 5;
    std::vector<std::int64_t> bench_dims{2, 5, 7, 10};
    std::int64_t bench_trees = 50;
    std::int64_t bench_m = 20000;
    std::int64_t bench_k = 10000;
    std::string bench_out = ".";
    unsigned bench_threads = default_thread_count();
    auto* bench = app.add_subcommand("bench", "run a benchmark suite and write csv tables");
    bench->add_option("--suite", bench_suite, "scalability | ablation");
    bench->add_option("--seeds", bench_seeds, "number of seeds (0..n-1)");
    bench->add_option("--dims", bench_dims, "dimensions for scalability")->delimiter(',');
    bench->add_option("--trees", bench_trees, "trees per run");
    bench->add_option("--m", bench_m, "training samples per run");
    bench->add_option("--k", bench_k, "test samples per run");
    bench->add_option("--out", bench_out, "output directory");
    bench->add_option("--threads", bench_threads, "worker threads");

    CLI11_PARSE(app, argc, argv);

    try {
        if (verify->parsed()) {
            if (!config_path.empty()) {
                // file values first, then explicit flags on top
                VerifyConfig from_file;
                apply_config_file(from_file, config_path);
                auto keep = [&](const CLI::Option* opt, auto& flag_value, auto& file_value) {
                    if (opt->count() == 0) flag_value = file_value;
                };
                keep(net_opt, cfg.network_path, from_file.network_path);
                keep(prop_opt, cfg.property_path, from_file.property_path);
                keep(region_opt, cfg.region_text, from_file.region_text);
                keep(out_opt, cfg.out_prefix, from_file.out_prefix);
                keep(mode_opt, cfg.mode, from_file.mode);
                keep(delta_opt, cfg.delta, from_file.delta);
                keep(r_opt, cfg.purity, from_file.purity);
                keep(eps_opt, cfg.epsilon, from_file.epsilon);
                keep(cov_opt, cfg.coverage, from_file.coverage);
                keep(m_opt, cfg.m, from_file.m);
                keep(k_opt, cfg.k, from_file.k);
                keep(trees_opt, cfg.trees, from_file.trees);
                keep(depth_opt, cfg.depth, from_file.depth);
                keep(seed_opt, cfg.seed, from_file.seed);
                keep(threads_opt, cfg.threads, from_file.threads);
                keep(maxres_opt, cfg.max_resamples, from_file.max_resamples);
                keep(errs_opt, cfg.error_samples, from_file.error_samples);
                keep(reuse_flag, cfg.reuse_test_set, from_file.reuse_test_set);
                keep(bonf_flag, cfg.bonferroni, from_file.bonferroni);
                keep(stdepth_opt, cfg.single_tree_depth, from_file.single_tree_depth);
                keep(dumpf_opt, cfg.dump_forest, from_file.dump_forest);
                keep(dumpd_opt, cfg.dump_dataset, from_file.dump_dataset);
            }
            return command_verify(cfg);
        }
        if (plan->parsed()) return command_plan(plan_delta, plan_r, plan_trees, plan_depths, plan_out);
        if (oracle->parsed())
            return command_oracle(oracle_task, oracle_depth, oracle_seed, oracle_threads);
        if (bench->parsed())
            return command_bench(bench_suite, bench_seeds, bench_dims, bench_trees, bench_m,
                                 bench_k, bench_out, bench_threads);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
