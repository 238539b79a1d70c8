// End-to-end checks of the command-line tool: exit codes, output files and
// flag/config precedence, driven through the real binary.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "preforest/network.hpp"
#include "preforest/synthetic.hpp"

using namespace preforest;
using nlohmann::json;

namespace {

int failures = 0;

#define CHECK(cond, msg)                                                      \
    do {                                                                      \
        if (cond) {                                                           \
            std::printf("[PASS] %s\n", msg);                                  \
        } else {                                                              \
            std::printf("[FAIL] %s (line %d)\n", msg, __LINE__);              \
            ++failures;                                                       \
        }                                                                     \
    } while (0)

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(PREFOREST_CLI_PATH) + " " + args + " 2>&1";
    RunResult result;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return result;
    char buf[512];
    while (fgets(buf, sizeof buf, pipe)) result.output += buf;
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

bool file_exists(const std::string& path) { return std::ifstream(path).good(); }

} // namespace

int main() {
    // materialize a small grid-aligned indicator task as input files
    const SyntheticTask synth = generate_synthetic(preset_box2d(), 0);
    {
        std::ofstream net("cli_net.json");
        net << network_to_json(synth.labeler.network()).dump(2);
        std::ofstream prop("cli_prop.json");
        prop << property_to_json(synth.labeler.property()).dump(2);
    }
    const SyntheticTask noisy = generate_synthetic(preset_noisy_box2d(), 0);
    {
        std::ofstream net("cli_noisy_net.json");
        net << network_to_json(noisy.labeler.network()).dump(2);
    }

    // planner anchors land in the csv
    {
        const auto r = run_cli("plan --delta 0.001 --R 0.995 --trees 1,2000 --depth 5,11 "
                               "--out cli_plan.csv");
        CHECK(r.exit_code == 0, "plan exits 0");
        std::ifstream csv("cli_plan.csv");
        std::string all((std::istreambuf_iterator<char>(csv)),
                        std::istreambuf_iterator<char>());
        CHECK(all.find("1,11,1024,1379,1412096") != std::string::npos,
              "plan csv contains the deep single-tree row");
        CHECK(all.find("2000,5,32000,1379") != std::string::npos,
              "plan csv contains the wide forest row");
    }

    // a verify run that reaches its target
    {
        const auto r = run_cli(
            "verify --network cli_net.json --property cli_prop.json "
            "--region [[0,1],[0,1]] --delta 0.05 --R 0.9 --coverage 0.75 "
            "--m 3000 --k 3000 --trees 30 --seed 1 --threads 2 --out cli_run");
        CHECK(r.exit_code == 0, "verify exits 0 when the target is met");
        CHECK(file_exists("cli_run.report.json"), "report json written");
        CHECK(file_exists("cli_run.boxes.csv"), "boxes csv written");
        CHECK(r.output.find("n_boxes=") != std::string::npos, "summary line printed");

        const json report = load_json_file("cli_run.report.json");
        CHECK(report.at("coverage_estimate").get<double>() >= 0.75,
              "reported coverage meets the target");
        CHECK(report.at("config").at("m").get<long long>() == 3000, "config echo holds m");
        CHECK(report.at("seed").get<unsigned long long>() == 1, "config echo holds the seed");
    }

    // unreachable coverage: boxes still written, exit code 2
    {
        const auto r = run_cli(
            "verify --network cli_noisy_net.json --property cli_prop.json "
            "--region [[0,1],[0,1]] --delta 0.05 --R 0.9 --coverage 1.0 "
            "--m 2000 --k 2000 --trees 5 --seed 3 --out cli_miss");
        CHECK(r.exit_code == 2, "verify exits 2 below the target");
        CHECK(file_exists("cli_miss.report.json"), "report written even when short");
    }

    // malformed network file: exit 1 and a pointed message
    {
        std::ofstream bad("cli_bad_net.json");
        bad << "{\"input_dim\": 2, \"layers\": [{\"weights\": [[1,0],[0,1]], "
               "\"bias\": [0,0], \"activation\": \"relu\"}, {\"weights\": [[1,2,3]], "
               "\"bias\": [0], \"activation\": \"linear\"}]}";
        bad.close();
        const auto r = run_cli("verify --network cli_bad_net.json --property cli_prop.json "
                               "--region [[0,1],[0,1]]");
        CHECK(r.exit_code == 1, "verify exits 1 on a bad network");
        CHECK(r.output.find("layer 1") != std::string::npos,
              "error names the offending layer");
    }

    // regions with negative coordinates parse fine
    {
        SyntheticSpec offset;
        offset.kind = SyntheticKind::box_indicator;
        offset.dims = 2;
        offset.domain = AxisBox({-2.0, -1.0}, {2.0, 1.0});
        offset.boxes = {AxisBox({-1.0, -0.5}, {1.0, 0.5})};
        const SyntheticTask shifted = generate_synthetic(offset, 0);
        std::ofstream("cli_neg_net.json")
            << network_to_json(shifted.labeler.network()).dump(2);
        const auto r = run_cli(
            "verify --network cli_neg_net.json --property cli_prop.json "
            "--region [[-2,2],[-1,1]] --delta 0.05 --R 0.9 --coverage 0.75 "
            "--m 3000 --k 3000 --trees 30 --seed 2 --out cli_neg");
        CHECK(r.exit_code == 0, "negative-coordinate region verifies");
        const json report = load_json_file("cli_neg.report.json");
        CHECK(report.at("boxes").size() >= 1, "boxes returned in original coordinates");
        const auto& b0 = report.at("boxes").at(0);
        CHECK(b0.at("lower").at(0).get<double>() >= -2.0, "box lies inside the region");
    }

    // bad planner ranges are rejected
    {
        const auto r = run_cli("plan --delta 0.001 --R 0.995 --trees 1 --depth 0");
        CHECK(r.exit_code == 1, "plan exits 1 on an invalid depth range");
    }

    // oracle preset prints a volume bracket containing the analytic value
    {
        const auto r = run_cli("oracle --task box2d --depth 8 --threads 2");
        CHECK(r.exit_code == 0, "oracle exits 0");
        CHECK(r.output.find("positive_volume_bracket=") != std::string::npos,
              "oracle prints the bracket");
        CHECK(r.output.find("analytic_positive_volume=0.25") != std::string::npos,
              "oracle prints the analytic volume");
    }

    // bench writes its csv tables
    {
        const auto r = run_cli("bench --suite ablation --seeds 1 --m 1500 --k 1000 "
                               "--trees 8 --threads 2 --out .");
        CHECK(r.exit_code == 0, "bench ablation exits 0");
        CHECK(file_exists("ablation.csv"), "ablation rows csv written");
        CHECK(file_exists("ablation_summary.csv"), "ablation summary csv written");
    }
    {
        const auto r = run_cli("bench --suite scalability --dims 2,3 --seeds 1 --m 1500 "
                               "--k 1000 --trees 8 --threads 2 --out .");
        CHECK(r.exit_code == 0, "bench scalability exits 0");
        CHECK(file_exists("scalability.csv"), "scalability rows csv written");
    }

    // config file values load, and explicit flags override them
    {
        json cfg;
        cfg["network"] = "cli_net.json";
        cfg["property"] = "cli_prop.json";
        cfg["region"] = json::array({json::array({0.0, 1.0}), json::array({0.0, 1.0})});
        cfg["coverage"] = 0.75;
        cfg["m"] = 2222;
        cfg["k"] = 1500;
        cfg["trees"] = 20;
        cfg["delta"] = 0.05;
        cfg["R"] = 0.9;
        cfg["seed"] = 4;
        cfg["out"] = "cli_cfg_run";
        std::ofstream("cli_cfg.json") << cfg.dump(2);

        const auto r = run_cli("verify --config cli_cfg.json --m 1777");
        CHECK(r.exit_code == 0, "config-file run exits 0");
        const json report = load_json_file("cli_cfg_run.report.json");
        CHECK(report.at("config").at("m").get<long long>() == 1777,
              "explicit flag overrides the config file");
        CHECK(report.at("config").at("k").get<long long>() == 1500,
              "unset flags fall back to the config file");
    }

    // demo directory stays usable as documented
    {
        const std::string demo = PREFOREST_DEMO_DIR;
        if (file_exists(demo + "/network.json")) {
            const auto r = run_cli("verify --config " + demo + "/config.json --network " +
                                   demo + "/network.json --property " + demo +
                                   "/property.json --out cli_demo_run");
            CHECK(r.exit_code == 0, "demo config runs clean");
        }
    }

    std::printf("%s: %d failure(s)\n", failures == 0 ? "OK" : "FAILED", failures);
    return failures == 0 ? 0 : 1;
}
