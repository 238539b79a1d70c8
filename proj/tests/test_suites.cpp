#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "preforest/suites.hpp"

using namespace preforest;

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) lines.push_back(line);
    return lines;
}

} // namespace

TEST_CASE("resample count inversion", "[suites]") {
    // fixing n = 200 at delta = 0.05 corresponds to purity ~0.9851
    const double R = purity_for_resamples(0.05, 200);
    REQUIRE(R == Catch::Approx(0.98513).margin(1e-4));
    REQUIRE(wilks_n(0.05, R) == 200);
    REQUIRE_THROWS_AS(purity_for_resamples(0.05, 0), std::invalid_argument);
}

TEST_CASE("scalability suite emits one row per dim and seed", "[suites]") {
    ScalabilityConfig cfg;
    cfg.m = 2000;
    cfg.k = 1500;
    cfg.trees = 10;
    cfg.threads = 2;
    const auto rows = run_scalability_suite({2, 5}, {1, 2}, cfg);
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) {
        REQUIRE((r.n == 2 || r.n == 5));
        REQUIRE(r.coverage >= 0.0);
        REQUIRE(r.coverage <= 1.0);
        REQUIRE(r.error >= 0.0);
        REQUIRE(r.n_trees_used >= 1);
        REQUIRE(r.wall_time_ms > 0.0);
    }

    write_scalability_csv(rows, "scal_rows.csv");
    auto lines = read_lines("scal_rows.csv");
    REQUIRE(lines[0] == "n,seed,coverage,error,n_boxes,n_trees_used,wall_time_ms");
    REQUIRE(lines.size() == 5);

    write_scalability_summary_csv(rows, "scal_summary.csv");
    lines = read_lines("scal_summary.csv");
    REQUIRE(lines[0] == "n,coverage,error,n_boxes,n_trees_used,wall_time_ms");
    REQUIRE(lines.size() == 3); // two dims
    std::remove("scal_rows.csv");
    std::remove("scal_summary.csv");

    REQUIRE_THROWS_AS(run_scalability_suite({}, {1}, cfg), std::invalid_argument);
}

TEST_CASE("ablation suite pairs modes per task and seed", "[suites]") {
    const SyntheticTask synth = generate_synthetic(preset_noisy_box2d(), 0);
    GuaranteeParams params;
    params.delta = 0.05;
    params.purity = 0.9;
    params.coverage_target = 0.85;
    params.epsilon = 0.1;
    ForestConfig fc;
    fc.n_trees = 12;
    fc.max_depth = 8;
    const VerificationTask task = make_task(synth, params, fc, 1500, 1500);

    const auto rows = run_ablation_suite({{"noisy_box", task}}, {1, 2, 3});
    REQUIRE(rows.size() == 6);
    int verify_rows = 0, ablation_rows = 0;
    for (const auto& r : rows) {
        REQUIRE(r.task == "noisy_box");
        verify_rows += r.mode == "verify";
        ablation_rows += r.mode == "no_filter";
    }
    REQUIRE(verify_rows == 3);
    REQUIRE(ablation_rows == 3);

    write_ablation_csv(rows, "abl_rows.csv");
    auto lines = read_lines("abl_rows.csv");
    REQUIRE(lines[0] == "task,mode,seed,coverage,error,n_boxes,n_trees_used,wall_time_ms");
    REQUIRE(lines.size() == 7);

    write_ablation_summary_csv(rows, "abl_summary.csv");
    lines = read_lines("abl_summary.csv");
    REQUIRE(lines.size() == 3); // one task, two modes
    std::remove("abl_rows.csv");
    std::remove("abl_summary.csv");
}

TEST_CASE("filtering costs measurable extra runtime", "[suites]") {
    // resample-heavy setup: sparse training keeps every candidate below the
    // 1379-sample support threshold, and the unreachable target makes both
    // modes run all trees, so the only difference is the filtering work
    const SyntheticTask synth = generate_synthetic(preset_noisy_box2d(), 0);
    GuaranteeParams params;
    params.delta = 0.001;
    params.purity = 0.995;
    params.coverage_target = 0.999;
    params.epsilon = 0.005;
    ForestConfig fc;
    fc.n_trees = 10;
    fc.max_depth = 8;
    const VerificationTask task = make_task(synth, params, fc, 1500, 2000);

    const auto rows = run_ablation_suite({{"noisy_box", task}}, {1, 2, 3});
    double filtered_ms = 0.0, unfiltered_ms = 0.0;
    std::int64_t filtered_boxes = 0;
    for (const auto& r : rows) {
        if (r.mode == "verify") {
            filtered_ms += r.wall_time_ms;
            filtered_boxes += r.n_boxes;
        } else {
            unfiltered_ms += r.wall_time_ms;
        }
    }
    REQUIRE(filtered_boxes > 0); // the filter actually accepted work
    REQUIRE(filtered_ms >= unfiltered_ms);
}
