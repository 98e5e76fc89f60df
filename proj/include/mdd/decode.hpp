// The end-to-end generation loop: per-block policy, inner refinement passes,
// commit selection, prophet early-commit, completion guarantee, and
// trace/metric emission. Plus the ablation suite and heatmap extraction.
#pragma once

#include "mdd/model.hpp"
#include "mdd/policy.hpp"

namespace mdd {

struct DecodeResult {
    Canvas canvas;
    std::vector<StepTrace> traces;
    RunMetrics metrics;

    std::vector<TokenId> generated() const {
        return std::vector<TokenId>(canvas.tokens.begin() + canvas.prompt_len,
                                    canvas.tokens.end());
    }
};

// Runs the full decode. Throws GenError (g < 1), BoundsError (bad config),
// or ModelError propagated from the denoiser.
DecodeResult generate(const Denoiser& model, const std::vector<TokenId>& prompt, int g,
                      const DecodeConfig& cfg);

// Aggregated outcome of one mode over a prompt set.
struct ModeResult {
    std::string mode;
    std::vector<RunMetrics> per_prompt;
    double mean_nfe = 0.0;
    double mean_cost = 0.0;
    double tokens_per_second = 0.0;  // suite throughput: total tokens / total cost
    double accuracy = -1.0;          // exact-match fraction; negative = undefined
    double token_match = -1.0;       // mean per-position match; negative = undefined
    long long max_bigram_run = 0;    // worst two-token repeat run over prompts
};

// Mode labels: ON NoV NoS NoB NoTau OFF select the ablation with
// rule=adaptive; threshold / factor select the static baselines.
DecodeConfig apply_mode(const DecodeConfig& base, const std::string& mode);

// Runs each mode over the same prompts. threads > 1 dispatches independent
// (mode, prompt) runs to an OpenMP pool; aggregation order is fixed, so the
// result is identical at any thread count.
std::vector<ModeResult> run_ablation_suite(const Denoiser& model,
                                           const std::vector<std::vector<TokenId>>& prompts,
                                           int g, const DecodeConfig& base,
                                           const std::vector<std::string>& modes, int threads);

// Length of the longest output segment repeating with period 2 (the canonical
// a,b,a,b,... loop); 0 when no token echoes the one two places back.
long long max_bigram_run(const std::vector<TokenId>& tokens);

// Per-(block, step) mean masked confidence, ragged by block length.
struct Heatmap {
    std::vector<std::vector<double>> rows;
    bool empty_input = false;
};
Heatmap record_heatmap(const std::vector<StepTrace>& traces);

std::string traces_to_csv(const std::vector<StepTrace>& traces, const std::string& cfg_hash_hex);
std::string heatmap_to_csv(const Heatmap& hm, const std::string& cfg_hash_hex);

}  // namespace mdd
