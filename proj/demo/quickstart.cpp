// Minimal library walkthrough: build a task with a known preimage, verify
// it, and inspect the certificate. Build target: demo_quickstart.

#include <cstdio>

#include "preforest/suites.hpp"
#include "preforest/synthetic.hpp"
#include "preforest/verifier.hpp"

using namespace preforest;

int main() {
    // a 2-D network whose preimage is exactly [0.25, 0.75]^2
    const SyntheticTask synth = generate_synthetic(preset_box2d(), /*seed=*/0);

    GuaranteeParams params;
    params.delta = 0.001;          // confidence error
    params.purity = 0.995;         // required positive fraction per box
    params.coverage_target = 0.9;  // stop once 90% of the preimage is covered
    params.epsilon = 0.005;

    ForestConfig forest;
    forest.n_trees = 50;
    forest.max_depth = 5;

    const VerificationTask task = make_task(synth, params, forest, /*m=*/20000, /*k=*/10000);
    const VerificationReport report = run(task, /*seed=*/42);

    std::printf("boxes=%zu coverage=%.3f error=%.4f trees_used=%lld\n", report.boxes.size(),
                report.coverage_estimate, report.error_estimate,
                static_cast<long long>(report.trees_used));
    std::printf("certificate: n_per_box=%lld confidence=%.4f per-box error bound=%.4f\n",
                static_cast<long long>(report.certificate.n_per_box),
                report.certificate.wilks_conf, report.certificate.per_box_error_bound);
    for (const auto& b : report.boxes)
        std::printf("  [%.5f, %.5f] x [%.5f, %.5f]\n", b.lower[0], b.upper[0], b.lower[1],
                    b.upper[1]);

    write_report_json(report, task, "quickstart.report.json");
    return report.coverage_target_met ? 0 : 2;
}
