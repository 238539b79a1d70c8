#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "preforest/grid_oracle.hpp"
#include "preforest/suites.hpp"
#include "preforest/synthetic.hpp"
#include "preforest/verifier.hpp"

using namespace preforest;

namespace {

VerificationTask indicator_task(const SyntheticTask& synth, double delta = 0.05,
                                double purity = 0.9, double c = 0.75, std::int64_t m = 4000,
                                std::int64_t k = 4000, std::int64_t trees = 40, int depth = 5) {
    GuaranteeParams params;
    params.delta = delta;
    params.purity = purity;
    params.coverage_target = c;
    params.epsilon = 1.0 - purity;
    ForestConfig fc;
    fc.n_trees = trees;
    fc.max_depth = depth;
    return make_task(synth, params, fc, m, k);
}

nlohmann::json report_json_without_time(const VerificationReport& r,
                                        const VerificationTask& task) {
    nlohmann::json j = report_to_json(r, task);
    j.erase("wall_time_ms");
    return j;
}

} // namespace

TEST_CASE("filter accepts on existing sample support without resampling", "[verifier]") {
    const SyntheticTask synth = generate_synthetic(preset_box2d(), 0);
    const UnitMap map(synth.domain);
    const UnitLabeler ulabel{&synth.labeler, &map};
    const AxisBox inside({0.3125, 0.3125}, {0.6875, 0.6875});

    const auto out = filter_box(inside, 29, 29, ulabel, RngStream(1, 1));
    REQUIRE(out.accepted);
    REQUIRE(out.resamples_used == 0);
}

TEST_CASE("filter draws exactly n samples inside the preimage", "[verifier]") {
    const SyntheticTask synth = generate_synthetic(preset_box2d(), 0);
    const UnitMap map(synth.domain);
    const UnitLabeler ulabel{&synth.labeler, &map};
    const AxisBox inside({0.3125, 0.3125}, {0.6875, 0.6875});

    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto out = filter_box(inside, 0, 29, ulabel, RngStream(s, 2));
        REQUIRE(out.accepted);
        REQUIRE(out.resamples_used == 29);
    }
}

TEST_CASE("filter rejects a half-contained box early", "[verifier]") {
    const SyntheticTask synth = generate_synthetic(preset_box2d(), 0);
    const UnitMap map(synth.domain);
    const UnitLabeler ulabel{&synth.labeler, &map};
    // positive iff x >= 0.25: exactly half of this box
    const AxisBox straddle({0.125, 0.3125}, {0.375, 0.6875});

    std::int64_t total_draws = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto out = filter_box(straddle, 0, 29, ulabel, RngStream(s, 3));
        REQUIRE_FALSE(out.accepted); // acceptance probability is 2^-29
        REQUIRE(out.resamples_used <= 29);
        total_draws += out.resamples_used;
    }
    // geometric early exit: roughly two draws per rejection on average
    REQUIRE(total_draws < 600);

    REQUIRE_THROWS_AS(filter_box(straddle, 0, 0, ulabel, RngStream(0, 0)),
                      std::invalid_argument);
}

TEST_CASE("coverage estimator semantics", "[verifier]") {
    SECTION("exact ratio on a fixed test set") {
        std::vector<Point> points;
        std::vector<int> labels;
        const AxisBox box({0.0, 0.0}, {0.5, 1.0});
        // 5000 positives: 4500 inside the box, 500 outside; plus 5000 negatives
        for (int i = 0; i < 4500; ++i) { points.push_back({0.25, 0.5}); labels.push_back(1); }
        for (int i = 0; i < 500; ++i) { points.push_back({0.75, 0.5}); labels.push_back(1); }
        for (int i = 0; i < 5000; ++i) { points.push_back({0.25, 0.5}); labels.push_back(0); }
        const auto est = estimate_coverage_fixed({box}, points, labels);
        REQUIRE(est.coverage == Catch::Approx(0.9));
        REQUIRE(est.positives_seen == 5000);
    }
    SECTION("negative points inside boxes earn no credit") {
        const AxisBox box = unit_box(2);
        std::vector<Point> points{{0.5, 0.5}, {0.6, 0.6}};
        std::vector<int> labels{0, 1};
        const auto est = estimate_coverage_fixed({box}, points, labels);
        REQUIRE(est.coverage == 1.0); // 1 positive, 1 inside
        REQUIRE(est.positives_seen == 1);
    }
    SECTION("exact preimage and empty set") {
        const SyntheticTask synth = generate_synthetic(preset_box2d(), 0);
        const UnitMap map(synth.domain);
        const UnitLabeler ulabel{&synth.labeler, &map};
        const auto full = estimate_coverage(synth.positive_boxes, ulabel, unit_box(2), 10000,
                                            RngStream(9, 0));
        REQUIRE(full.coverage == 1.0);

        const auto empty = estimate_coverage({}, ulabel, unit_box(2), 1000, RngStream(9, 1));
        REQUIRE(empty.coverage == 0.0);
    }
    SECTION("no positives anywhere flags a warning") {
        const FnLabeler never{[](const Point&) { return 0; }};
        const auto est = estimate_coverage({unit_box(2)}, never, unit_box(2), 500,
                                           RngStream(9, 2));
        REQUIRE(est.no_positives);
        REQUIRE(est.coverage == 0.0);
    }
}

TEST_CASE("error estimator semantics", "[verifier]") {
    const SyntheticTask synth = generate_synthetic(preset_box2d(), 0);
    const UnitMap map(synth.domain);
    const UnitLabeler ulabel{&synth.labeler, &map};

    // strictly inside: no error
    REQUIRE(estimate_error({AxisBox({0.3, 0.3}, {0.7, 0.7})}, ulabel, 5000, RngStream(1, 0)) ==
            0.0);
    // fully outside: pure error
    REQUIRE(estimate_error({AxisBox({0.8, 0.8}, {0.95, 0.95})}, ulabel, 5000, RngStream(1, 1)) ==
            1.0);
    // half in, half out: binomial around one half
    const double half =
        estimate_error({AxisBox({0.125, 0.3125}, {0.375, 0.6875})}, ulabel, 10000, RngStream(1, 2));
    REQUIRE(half > 0.47);
    REQUIRE(half < 0.53);

    REQUIRE_THROWS_AS(estimate_error({}, ulabel, 100, RngStream(1, 3)), std::invalid_argument);
}

TEST_CASE("zero coverage target stops after the first tree", "[verifier]") {
    const SyntheticTask synth = generate_synthetic(preset_box2d(), 0);
    VerificationTask task = indicator_task(synth);
    task.params.coverage_target = 0.0;
    const VerificationReport report = run(task, 7);
    REQUIRE(report.trees_used == 1);
    REQUIRE(report.coverage_target_met);
}

TEST_CASE("aligned indicator task verifies reliably", "[verifier]") {
    const SyntheticTask synth = generate_synthetic(preset_box2d(), 0);
    const VerificationTask task = indicator_task(synth);

    int good = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const VerificationReport report = run(task, seed);
        const double exact_error =
            report.boxes.empty() ? 0.0 : synth.union_error(report.boxes);
        if (report.coverage_estimate >= 0.75 && exact_error <= 0.1) ++good;

        // certificate consistency on every run
        REQUIRE(report.certificate.n_per_box == wilks_n(0.05, 0.9));
        for (const auto& p : report.provenance)
            REQUIRE(p.support >= report.certificate.n_per_box);
        // every returned box lies inside the input region
        for (const auto& b : report.boxes) REQUIRE(contains_box(synth.domain, b));
    }
    REQUIRE(good >= 18);
}

TEST_CASE("all-negative network returns an empty report", "[verifier]") {
    // indicator box fully outside the verified region
    SyntheticSpec spec;
    spec.kind = SyntheticKind::box_indicator;
    spec.dims = 2;
    spec.domain = AxisBox({0.0, 0.0}, {1.0, 1.0});
    spec.boxes = {AxisBox({2.0, 2.0}, {3.0, 3.0})};
    const SyntheticTask synth = generate_synthetic(spec, 0);
    VerificationTask task = indicator_task(synth, 0.05, 0.9, 0.75, 1000, 1000, 5);

    const VerificationReport report = run(task, 3);
    REQUIRE(report.boxes.empty());
    REQUIRE(report.coverage_estimate == 0.0);
    REQUIRE_FALSE(report.coverage_target_met);
    REQUIRE_FALSE(report.warnings.empty());
}

TEST_CASE("ablation mode only adds boxes", "[verifier]") {
    const SyntheticTask synth = generate_synthetic(preset_noisy_box2d(), 0);
    VerificationTask task = indicator_task(synth, 0.05, 0.9, 0.9, 1500, 2000, 10, 8);

    const VerificationReport filtered = run(task, 11);
    const VerificationReport unfiltered = run_ablation_no_filter(task, 11);
    REQUIRE(unfiltered.mode == RunMode::no_filter);

    // the filtered union is contained in the unfiltered union
    RngStream rng(0x5A5A, 0);
    for (int i = 0; i < 2000; ++i) {
        const Point p{rng.next_double(), rng.next_double()};
        if (in_union(filtered.boxes, p)) REQUIRE(in_union(unfiltered.boxes, p));
    }
}

TEST_CASE("ablation is a no-op when every leaf is solidly positive", "[verifier]") {
    // the whole domain is positive: one pure root leaf per tree, backed by
    // every bootstrap sample
    SyntheticSpec spec;
    spec.kind = SyntheticKind::box_indicator;
    spec.dims = 2;
    spec.boxes = {AxisBox({-1.0, -1.0}, {2.0, 2.0})};
    const SyntheticTask synth = generate_synthetic(spec, 0);
    VerificationTask task = indicator_task(synth, 0.05, 0.9, 0.99, 500, 500, 3);

    const VerificationReport a = run(task, 5);
    const VerificationReport b = run_ablation_no_filter(task, 5);
    REQUIRE(a.boxes == b.boxes);
    REQUIRE(a.coverage_estimate == b.coverage_estimate);
    REQUIRE(a.resamples_spent == 0);
}

TEST_CASE("single tree baseline forces one deep tree", "[verifier]") {
    const SyntheticTask synth = generate_synthetic(preset_multibox2d(), 0);
    VerificationTask task = indicator_task(synth, 0.05, 0.9, 0.9, 3000, 2000, 25);

    const VerificationReport a = run_single_tree_baseline(task, 13);
    const VerificationReport b = run_single_tree_baseline(task, 13);
    REQUIRE(a.mode == RunMode::single_tree);
    REQUIRE(a.trees_used == 1);
    REQUIRE(report_json_without_time(a, task) == report_json_without_time(b, task));
}

TEST_CASE("seed determinism of full runs", "[verifier]") {
    const SyntheticTask synth = generate_synthetic(preset_multibox2d(), 0);
    const VerificationTask task = indicator_task(synth, 0.01, 0.95, 0.8, 2000, 2000, 15);

    const VerificationReport a = run(task, 99);
    const VerificationReport b = run(task, 99);
    REQUIRE(report_json_without_time(a, task) == report_json_without_time(b, task));

    const VerificationReport c = run(task, 100);
    REQUIRE(report_json_without_time(a, task) != report_json_without_time(c, task));
}

TEST_CASE("thread count does not change results", "[verifier]") {
    const SyntheticTask synth = generate_synthetic(preset_multibox2d(), 0);
    VerificationTask task = indicator_task(synth, 0.05, 0.9, 0.8, 2000, 2000, 10);

    task.options.threads = 1;
    const VerificationReport serial = run(task, 21);
    task.options.threads = 4;
    const VerificationReport parallel = run(task, 21);
    // thread count is part of the config echo; compare reports field-wise
    nlohmann::json a = report_to_json(serial, task);
    nlohmann::json b = report_to_json(parallel, task);
    a.erase("wall_time_ms");
    b.erase("wall_time_ms");
    a.erase("config");
    b.erase("config");
    REQUIRE(a == b);
}

TEST_CASE("coverage history is monotone on a fixed test set", "[verifier]") {
    const SyntheticTask synth = generate_synthetic(preset_multibox2d(), 0);
    VerificationTask task = indicator_task(synth, 0.05, 0.9, 1.0, 2000, 3000, 8);
    task.options.reuse_test_set = true;

    const VerificationReport report = run(task, 31);
    REQUIRE(report.coverage_history.size() == static_cast<std::size_t>(report.trees_used));
    for (std::size_t i = 1; i < report.coverage_history.size(); ++i)
        REQUIRE(report.coverage_history[i] >= report.coverage_history[i - 1]);
}

TEST_CASE("resampling budget cap halts filtering and flags the report", "[verifier]") {
    const SyntheticTask synth = generate_synthetic(preset_noisy_box2d(), 0);
    VerificationTask task = indicator_task(synth, 0.001, 0.995, 1.0, 2000, 1000, 6, 8);
    task.options.max_total_resamples = 50; // far below one box worth (1379)

    const VerificationReport report = run(task, 17);
    REQUIRE(report.budget_exhausted);
    // the crossing box may finish, so spent stays below cap + n
    REQUIRE(report.resamples_spent <= 50 + report.certificate.n_per_box);
    // boxes backed by enough training samples are still accepted for free
    for (const auto& p : report.provenance) {
        if (!p.via_resample) REQUIRE(p.support >= report.certificate.n_per_box);
    }
}

TEST_CASE("bonferroni option tightens the per-box sample size", "[verifier]") {
    const SyntheticTask synth = generate_synthetic(preset_box2d(), 0);
    VerificationTask task = indicator_task(synth, 0.05, 0.9, 0.5, 1500, 1000, 4);
    task.options.bonferroni = true;

    const VerificationReport report = run(task, 2);
    const std::int64_t max_boxes = report.certificate.max_boxes;
    REQUIRE(report.certificate.delta_per_box ==
            Catch::Approx(0.05 / static_cast<double>(max_boxes)));
    REQUIRE(report.certificate.n_per_box ==
            wilks_n(0.05 / static_cast<double>(max_boxes), 0.9));
    REQUIRE(report.certificate.n_per_box > wilks_n(0.05, 0.9));
}

TEST_CASE("reports round trip through json and csv", "[verifier]") {
    const SyntheticTask synth = generate_synthetic(preset_box2d(), 0);
    const VerificationTask task = indicator_task(synth, 0.05, 0.9, 0.75, 1500, 1000, 8);
    const VerificationReport report = run(task, 1);

    const nlohmann::json j = report_to_json(report, task);
    REQUIRE(j.at("n_boxes").get<std::size_t>() == report.boxes.size());
    REQUIRE(j.at("config").at("m").get<std::int64_t>() == 1500);
    REQUIRE(j.at("mode").get<std::string>() == "verify");
    for (std::size_t i = 0; i < report.boxes.size(); ++i)
        REQUIRE(box_from_json(j.at("boxes").at(i)) == report.boxes[i]);

    write_report_json(report, task, "report_roundtrip.json");
    const nlohmann::json loaded = load_json_file("report_roundtrip.json");
    REQUIRE(loaded.at("seed").get<std::uint64_t>() == 1);

    write_boxes_csv(report.boxes, 2, "boxes_roundtrip.csv");
    std::ifstream csv("boxes_roundtrip.csv");
    std::string header;
    std::getline(csv, header);
    REQUIRE(header == "lower_0,lower_1,upper_0,upper_1");
    std::size_t rows = 0;
    for (std::string line; std::getline(csv, line);) rows += !line.empty();
    REQUIRE(rows == report.boxes.size());
    std::remove("report_roundtrip.json");
    std::remove("boxes_roundtrip.csv");
}

TEST_CASE("reports translate boxes back to original coordinates", "[verifier]") {
    SyntheticSpec spec;
    spec.kind = SyntheticKind::box_indicator;
    spec.dims = 2;
    spec.domain = AxisBox({-4.0, 10.0}, {4.0, 18.0});
    spec.boxes = {AxisBox({-2.0, 12.0}, {2.0, 16.0})};
    const SyntheticTask synth = generate_synthetic(spec, 0);
    const VerificationTask task = indicator_task(synth, 0.05, 0.9, 0.75, 3000, 3000, 20);

    const VerificationReport report = run(task, 8);
    REQUIRE(report.coverage_target_met);
    REQUIRE_FALSE(report.boxes.empty());
    for (const auto& b : report.boxes) {
        REQUIRE(contains_box(spec.domain, b));
        // accepted boxes must sit inside the true region up to the purity slack;
        // here the region is grid aligned, so containment is exact
        REQUIRE(contains_box(spec.boxes[0], b));
    }
}

TEST_CASE("sampled error estimates agree with the grid oracle", "[verifier]") {
    // a box set with a known mix of positive and negative volume
    const SyntheticTask synth = generate_synthetic(preset_box2d(), 0);
    const UnitMap map(synth.domain);
    const UnitLabeler ulabel{&synth.labeler, &map};
    const GridOracle oracle = build_oracle(synth.labeler, synth.domain, 5, 2);

    const BoxSet boxes{AxisBox({0.25, 0.25}, {0.875, 0.75}),   // hangs out on the right
                       AxisBox({0.3125, 0.0625}, {0.5, 0.5})}; // dips below
    const auto exact = oracle_error(oracle, boxes);
    REQUIRE(exact.uncertainty == 0.0); // aligned: the oracle is exact

    const std::int64_t samples = 40000;
    const double mc = estimate_error(boxes, ulabel, samples, RngStream(77, 0));
    const double sigma = std::sqrt(exact.error * (1 - exact.error) / samples);
    REQUIRE(std::abs(mc - exact.error) <= 4.5 * sigma);
}

TEST_CASE("checkerboard tasks exercise many-box extraction", "[verifier]") {
    const SyntheticTask synth = generate_synthetic(preset_checkerboard2d(4), 0);
    VerificationTask task = indicator_task(synth, 0.05, 0.9, 0.9, 20000, 10000, 30);

    const VerificationReport report = run(task, 5);
    REQUIRE(report.coverage_target_met);
    REQUIRE(report.boxes.size() >= 4); // several separate cells must be found

    // every returned box is one of the positive cells (grid aligned, pure)
    for (const auto& b : report.boxes) {
        bool inside_some = false;
        for (const auto& cell : synth.positive_boxes) inside_some |= contains_box(cell, b);
        REQUIRE(inside_some);
    }
    REQUIRE(synth.union_error(report.boxes) == 0.0);

    // dedup left no contained pairs
    for (std::size_t i = 0; i < report.boxes.size(); ++i)
        for (std::size_t j = 0; j < report.boxes.size(); ++j)
            if (i != j) REQUIRE_FALSE(contains_box(report.boxes[j], report.boxes[i]));
}

TEST_CASE("task validation catches bad setups", "[verifier]") {
    const SyntheticTask synth = generate_synthetic(preset_box2d(), 0);
    VerificationTask task = indicator_task(synth);
    task.m = 0;
    REQUIRE_THROWS_AS(run(task, 0), std::invalid_argument);

    VerificationTask mismatched = indicator_task(synth);
    mismatched.input_region = unit_box(3);
    REQUIRE_THROWS_AS(run(mismatched, 0), std::invalid_argument);
}
