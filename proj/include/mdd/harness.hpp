// CLI entry point and benchmark plumbing: the workload registry, ablation and
// cache sweeps, the softmax latency study, and report formatting.
#pragma once

#include <memory>

#include "mdd/decode.hpp"

namespace mdd {

// A named model plus the prompt set runs are evaluated on.
struct Workload {
    std::string id;
    std::shared_ptr<const Denoiser> model;
    std::vector<std::vector<TokenId>> prompts;
};

// Registry: scripted:easy, scripted:mixed, markov:seed<N>, degenerate:loop,
// or scripted:<path> loading difficulty profiles from a key=value file.
std::vector<std::string> registry_names();
Workload make_workload(const std::string& name, uint64_t seed, int n_prompts,
                       int prompt_len = 16);

// One aggregated report row. Negative accuracy/token_match/improvement mean
// "undefined here" and serialize as empty/null.
struct BenchRow {
    std::string workload;
    std::string mode;
    std::string cache;
    int g = 0;
    double mean_nfe = 0.0;
    double mean_cost = 0.0;
    double tokens_per_second = 0.0;  // simulated: tokens per work unit
    double tps_norm = 0.0;           // relative to the OFF row at equal (workload, g)
    double improvement = -1.0;       // relative to the threshold baseline row
    double accuracy = -1.0;
    double token_match = -1.0;
    long long max_bigram_run = 0;
};

// Deterministic body plus an environment block (timestamp, host, wall time)
// that is excluded from byte-for-byte comparisons.
struct BenchReport {
    std::string report;  // "ablate" | "cache-bench"
    std::string cfg_hash_hex;
    std::string workload;
    std::vector<int> g_list;
    int prompts = 0;
    uint64_t seed = 0;
    std::string note;
    std::vector<BenchRow> rows;

    double wall_s = 0.0;
    std::string timestamp;
    std::string host;

    std::string body_json() const;  // environment excluded
    std::string to_json() const;
    std::string to_csv() const;
    std::string to_table() const;
};

BenchReport ablate_report(const Workload& wl, int g, const DecodeConfig& cfg,
                          const std::vector<std::string>& modes, int threads, uint64_t seed);

// Same decode under each cache mode; commit decisions ignore the cache, so
// NFE must agree across modes while costs differ.
BenchReport cache_report(const Workload& wl, const std::vector<int>& g_list,
                         const DecodeConfig& cfg, int threads, uint64_t seed);

struct SoftmaxBenchRow {
    int size = 0;
    double median_us_per_row = 0.0;
};

// Wall-clock cost of candidate selection + subset softmax at each size, over
// random rows of fixed full width, single-threaded, median over repeats.
std::vector<SoftmaxBenchRow> softmax_bench(const std::vector<int>& sizes, int rows, int repeats,
                                           int width, uint64_t seed);

// Full CLI: decode | ablate | cache-bench | softmax-bench | heatmap.
// Returns 0 on success, 1 on runtime errors, 2 on argument errors.
int cli_run(int argc, const char* const* argv);

}  // namespace mdd
