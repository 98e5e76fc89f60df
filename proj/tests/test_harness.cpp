// Workload registry, report normalization and serialization, the latency
// bench, and the CLI surface.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mdd/harness.hpp"

using namespace mdd;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
    std::vector<const char*> argv = {"mdd"};
    for (const std::string& a : args) argv.push_back(a.c_str());
    return cli_run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("mdd_harness_" + tag);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("registry workloads resolve and unknown names are rejected") {
    for (const std::string& name : registry_names()) {
        const Workload wl = make_workload(name, 1, 2, 10);
        CHECK(wl.id == name);
        REQUIRE(wl.model != nullptr);
        CHECK(wl.prompts.size() == 2);
        for (const auto& p : wl.prompts) {
            CHECK(p.size() == 10);
            for (TokenId t : p) {
                CHECK(t >= 0);
                CHECK(t < wl.model->vocab_size());
            }
        }
    }
    CHECK_THROWS_AS(make_workload("nonsense", 1, 1), ConfigError);
    CHECK_THROWS_AS(make_workload("scripted:", 1, 1), ConfigError);
    CHECK_THROWS_AS(make_workload("markov:seedx", 1, 1), ConfigError);
    CHECK_THROWS_AS(make_workload("degenerate:spiral", 1, 1), ConfigError);
    CHECK_THROWS_AS(make_workload("scripted:easy", 1, 0), GenError);
}

TEST_CASE("markov workload seed comes from the name") {
    const Workload a = make_workload("markov:seed7", 1, 1);
    const Workload b = make_workload("markov:seed7", 99, 1);  // run seed differs
    const Workload c = make_workload("markov:seed8", 1, 1);
    const std::vector<TokenId> probe = {3};
    CHECK(a.model->reference_output(probe, 12) == b.model->reference_output(probe, 12));
    CHECK(a.model->reference_output(probe, 12) != c.model->reference_output(probe, 12));
}

TEST_CASE("degenerate workload prompts avoid the loop tokens") {
    const Workload wl = make_workload("degenerate:loop", 4, 6, 16);
    const auto* oracle = static_cast<const DegenerateLoopOracle*>(wl.model.get());
    for (const auto& p : wl.prompts)
        for (TokenId t : p) {
            CHECK(t != oracle->params().token_a);
            CHECK(t != oracle->params().token_b);
        }
}

TEST_CASE("workload prompts are seed-deterministic") {
    const Workload a = make_workload("scripted:mixed", 42, 4);
    const Workload b = make_workload("scripted:mixed", 42, 4);
    const Workload c = make_workload("scripted:mixed", 43, 4);
    CHECK(a.prompts == b.prompts);
    CHECK(a.prompts != c.prompts);
}

TEST_CASE("scripted profiles load from a file-backed workload") {
    const fs::path dir = fresh_dir("profiles");
    fs::create_directories(dir);
    const fs::path file = dir / "custom.profile";
    std::ofstream(file) << "block.0.c_start = 0.9\n"
                           "block.0.c_plateau = 0.95\n"
                           "block.0.kappa = 1.0\n";
    const Workload wl = make_workload("scripted:" + file.string(), 1, 1);
    const DecodeResult r = generate(*wl.model, wl.prompts[0], 24, default_config());
    CHECK(r.metrics.nfe <= 4);  // a 0.9-start schedule commits almost immediately
    CHECK_THROWS_AS(make_workload("scripted:/no/such/file", 1, 1), ConfigError);
}

TEST_CASE("ablation report normalizes throughput to OFF and the threshold baseline") {
    const Workload wl = make_workload("scripted:mixed", 0, 2);
    const BenchReport rep =
        ablate_report(wl, 96, default_config(), {"ON", "OFF", "threshold"}, 2, 0);
    REQUIRE(rep.rows.size() == 3);
    CHECK(rep.rows[0].mode == "ON");
    const BenchRow* off = &rep.rows[1];
    const BenchRow* thr = &rep.rows[2];
    CHECK(off->tps_norm == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(thr->improvement == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.rows[0].tps_norm ==
          doctest::Approx(rep.rows[0].tokens_per_second / off->tokens_per_second)
              .epsilon(1e-12));
    CHECK(rep.rows[0].improvement ==
          doctest::Approx(rep.rows[0].tokens_per_second / thr->tokens_per_second)
              .epsilon(1e-12));
    CHECK(rep.report == "ablate");
    CHECK(rep.workload == "scripted:mixed");
    CHECK(rep.g_list == std::vector<int>{96});
}

TEST_CASE("report body is byte-deterministic while the environment varies") {
    const Workload wl = make_workload("scripted:easy", 3, 2);
    const BenchReport a = ablate_report(wl, 64, default_config(), {"ON", "OFF"}, 2, 3);
    const BenchReport b = ablate_report(wl, 64, default_config(), {"ON", "OFF"}, 1, 3);
    CHECK(a.body_json() == b.body_json());
    CHECK(a.to_csv() == b.to_csv());
    CHECK(a.body_json().find("environment") == std::string::npos);
    CHECK(a.to_json().find("environment") != std::string::npos);
    CHECK(a.to_csv().rfind("# config_hash=", 0) == 0);
    // The full JSON parses and carries the deterministic fields.
    const auto j = nlohmann::json::parse(a.to_json());
    CHECK(j["report"] == "ablate");
    CHECK(j["rows"].size() == 2);
    CHECK(j["environment"].contains("timestamp"));
}

TEST_CASE("undefined accuracy serializes as null in JSON and empty in CSV") {
    const Workload wl = make_workload("degenerate:loop", 0, 1);
    const BenchReport rep = ablate_report(wl, 48, default_config(), {"ON"}, 1, 0);
    REQUIRE(rep.rows.size() == 1);
    // The loop oracle defines a reference, so accuracy is defined; improvement
    // is not (no threshold row in this report).
    CHECK(rep.rows[0].improvement == -1.0);
    const auto j = nlohmann::json::parse(rep.to_json());
    CHECK(j["rows"][0]["improvement"].is_null());
    const std::string csv = rep.to_csv();
    CHECK(csv.find(",,") != std::string::npos);
}

TEST_CASE("cache report keeps NFE fixed while cost orders dual < prefix < none") {
    const Workload wl = make_workload("scripted:mixed", 1, 2);
    const BenchReport rep = cache_report(wl, {256}, default_config(), 4, 1);
    REQUIRE(rep.rows.size() == 3);
    double nfe = rep.rows[0].mean_nfe;
    double cost_none = 0, cost_prefix = 0, cost_dual = 0;
    for (const BenchRow& r : rep.rows) {
        CHECK(r.mean_nfe == nfe);
        if (r.cache == "none") cost_none = r.mean_cost;
        if (r.cache == "prefix") cost_prefix = r.mean_cost;
        if (r.cache == "dual") cost_dual = r.mean_cost;
    }
    CHECK(cost_dual < cost_prefix);
    CHECK(cost_prefix < cost_none);
    CHECK(rep.report == "cache-bench");
}

TEST_CASE("softmax bench returns one positive median per size") {
    const auto rows = softmax_bench({4, 16, 64}, 2, 3, 64, 9);
    REQUIRE(rows.size() == 3);
    for (const SoftmaxBenchRow& r : rows) CHECK(r.median_us_per_row > 0.0);
    CHECK(rows[0].size == 4);
    CHECK(rows[2].size == 64);
    CHECK_THROWS_AS(softmax_bench({128}, 2, 3, 64, 9), RangeError);   // size > width
    CHECK_THROWS_AS(softmax_bench({4}, 2, 2, 64, 9), GenError);       // too few repeats
    CHECK_THROWS_AS(softmax_bench({}, 2, 3, 64, 9), GenError);        // no sizes
    CHECK_THROWS_AS(softmax_bench({4}, 0, 3, 64, 9), GenError);       // no rows
}

TEST_CASE("cli decode writes result and trace files with the config hash") {
    const fs::path dir = fresh_dir("decode");
    CHECK(run_cli({"decode", "--g", "32", "--oracle", "scripted:easy", "--out",
                   dir.string()}) == 0);
    const std::string result = slurp(dir / "result.json");
    const std::string trace = slurp(dir / "trace.csv");
    const auto j = nlohmann::json::parse(result);
    CHECK(j["g"] == 32);
    CHECK(j["output"].size() == 32);
    CHECK(j["metrics"]["nfe"].get<long long>() >= 1);
    const std::string hash = j["config_hash"].get<std::string>();
    CHECK(trace.find("# config_hash=" + hash) == 0);
}

TEST_CASE("cli ablate honors config overrides and emits both file formats") {
    const fs::path dir = fresh_dir("ablate");
    CHECK(run_cli({"ablate", "--g", "48", "--oracle", "scripted:easy", "--prompts", "2",
                   "--modes", "ON,OFF", "--threads", "2", "--cache", "prefix", "--set",
                   "tau_min=0.45", "--out", dir.string(), "--format", "csv"}) == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "ablate.json"));
    REQUIRE(j["rows"].size() == 2);
    CHECK(j["rows"][0]["cache"] == "prefix");
    const std::string csv = slurp(dir / "ablate.csv");
    CHECK(csv.rfind("# config_hash=", 0) == 0);
    // The override must be visible in the stamped hash: rerun without it.
    const fs::path dir2 = fresh_dir("ablate2");
    CHECK(run_cli({"ablate", "--g", "48", "--oracle", "scripted:easy", "--prompts", "2",
                   "--modes", "ON,OFF", "--threads", "2", "--cache", "prefix", "--out",
                   dir2.string(), "--format", "csv"}) == 0);
    const auto j2 = nlohmann::json::parse(slurp(dir2 / "ablate.json"));
    CHECK(j["config_hash"] != j2["config_hash"]);
}

TEST_CASE("cli rejects bad arguments with exit code 2") {
    const fs::path dir = fresh_dir("bad");
    CHECK(run_cli({"frobnicate"}) == 2);
    CHECK(run_cli({"decode", "--no-such-flag", "1", "--out", dir.string()}) == 2);
    CHECK(run_cli({"decode", "--set", "bogus_key=1", "--out", dir.string()}) == 2);
    CHECK(run_cli({"decode", "--set", "malformed", "--out", dir.string()}) == 2);
    CHECK(run_cli({"decode", "--oracle", "unknown:thing", "--out", dir.string()}) == 2);
    CHECK(run_cli({"decode", "--config", "/no/such/file.cfg", "--out", dir.string()}) == 2);
    CHECK(run_cli({"decode", "--set", "tau_min=0.99", "--out", dir.string()}) == 2);
    CHECK(run_cli({"ablate", "--modes", "ON,adaptive", "--g", "16", "--prompts", "1",
                   "--out", dir.string()}) == 2);  // a mode list naming no real mode
    CHECK(run_cli({"--help"}) == 0);
}

TEST_CASE("cli seed falls back to the environment variable") {
    const fs::path dir_a = fresh_dir("seed_env");
    setenv("DLDECODE_SEED", "77", 1);
    CHECK(run_cli({"decode", "--g", "16", "--oracle", "scripted:easy", "--out",
                   dir_a.string()}) == 0);
    unsetenv("DLDECODE_SEED");
    const auto ja = nlohmann::json::parse(slurp(dir_a / "result.json"));
    CHECK(ja["seed"] == 77);
    // An explicit flag beats the environment.
    const fs::path dir_b = fresh_dir("seed_flag");
    setenv("DLDECODE_SEED", "77", 1);
    CHECK(run_cli({"decode", "--g", "16", "--oracle", "scripted:easy", "--seed", "5",
                   "--out", dir_b.string()}) == 0);
    unsetenv("DLDECODE_SEED");
    const auto jb = nlohmann::json::parse(slurp(dir_b / "result.json"));
    CHECK(jb["seed"] == 5);
}

TEST_CASE("cli heatmap pins fixed-width blocks and writes the matrix") {
    const fs::path dir = fresh_dir("heatmap");
    CHECK(run_cli({"heatmap", "--g", "96", "--oracle", "scripted:mixed", "--out",
                   dir.string()}) == 0);
    const std::string csv = slurp(dir / "heatmap.csv");
    CHECK(csv.find("block,step,mean_conf") != std::string::npos);
    // 96 positions in fixed 24-wide blocks: rows for blocks 0..3 must appear.
    CHECK(csv.find("\n3,0,") != std::string::npos);
}

TEST_CASE("cli cache-bench and softmax-bench run end to end") {
    const fs::path dir = fresh_dir("cachebench");
    CHECK(run_cli({"cache-bench", "--g", "64", "--oracle", "scripted:easy", "--prompts",
                   "1", "--threads", "2", "--out", dir.string()}) == 0);
    const auto j = nlohmann::json::parse(slurp(dir / "cache_bench.json"));
    CHECK(j["rows"].size() == 3);  // one per cache mode

    const fs::path dir2 = fresh_dir("softmaxbench");
    CHECK(run_cli({"softmax-bench", "--sizes", "4,16", "--rows", "2", "--repeats", "3",
                   "--width", "64", "--out", dir2.string()}) == 0);
    const auto j2 = nlohmann::json::parse(slurp(dir2 / "softmax_bench.json"));
    CHECK(j2["sizes"].size() == 2);
}
