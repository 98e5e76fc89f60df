// Pluggable denoiser interface, three synthetic oracles, and the per-call
// position-cost accounting used to compare cache modes.
#pragma once

#include <memory>

#include "mdd/core.hpp"

namespace mdd {

// A deterministic stand-in for a masked-token predictor: given the canvas and
// the active window, emits one logit row per masked window position.
class Denoiser {
public:
    virtual ~Denoiser() = default;
    virtual int vocab_size() const = 0;
    virtual std::string name() const = 0;
    virtual LogitsMatrix logits(const Canvas& canvas, Window window, int step_in_block) const = 0;
    // Reference continuation for exact-match accuracy; empty when undefined.
    virtual std::vector<TokenId> reference_output(const std::vector<TokenId>& prompt, int g) const {
        (void)prompt;
        (void)g;
        return {};
    }
};

// Rise-then-plateau confidence schedule for one difficulty region.
struct ScriptedProfile {
    double c_start = 0.5;
    double c_plateau = 0.95;
    double kappa = 3.0;  // rise rate; larger = slower approach to the plateau
};

// Emits two-level logit rows whose full-vocabulary max softmax probability
// equals a scheduled confidence c(region, step). Difficulty profiles are tied
// to fixed position regions (span `region_span`), cycling through the list,
// so difficulty is a property of content location rather than of how the
// controller happens to block the run.
class ScriptedOracle : public Denoiser {
public:
    ScriptedOracle(int vocab, std::vector<ScriptedProfile> profiles, uint64_t seed,
                   int region_span = 24);

    // Profiles from the flat key=value format: block.<b>.c_start,
    // block.<b>.c_plateau, block.<b>.kappa for consecutive b starting at 0.
    static std::vector<ScriptedProfile> profiles_from_kv(const std::string& text);

    int vocab_size() const override { return vocab_; }
    std::string name() const override { return "scripted"; }
    LogitsMatrix logits(const Canvas& canvas, Window window, int step_in_block) const override;
    std::vector<TokenId> reference_output(const std::vector<TokenId>& prompt, int g) const override;

    // c(region, s) = plateau - (plateau - start) * exp(-s / kappa).
    // Throws ScheduleError if the value escapes (0,1).
    double scheduled_confidence(int region, int step_in_block) const;
    TokenId target_at(int pos, int prompt_len) const;
    int region_span() const { return region_span_; }

private:
    int vocab_;
    std::vector<ScriptedProfile> profiles_;
    uint64_t seed_;
    int region_span_;
};

// Seeded first-order chain with a recoverable greedy ground truth. A masked
// position is predicted by extrapolating the successor chain from the nearest
// committed token on its left; the target logit sits `gap` above the row's
// runner-up, so the argmax matches the ground-truth chain under any commit
// order — exact-match accuracy holds in every mode.
class MarkovToyModel : public Denoiser {
public:
    explicit MarkovToyModel(uint64_t seed, int vocab = 128, double gap = 5.0);

    int vocab_size() const override { return vocab_; }
    std::string name() const override { return "markov"; }
    LogitsMatrix logits(const Canvas& canvas, Window window, int step_in_block) const override;
    std::vector<TokenId> reference_output(const std::vector<TokenId>& prompt, int g) const override;

    TokenId successor(TokenId t) const;

private:
    int vocab_;
    double gap_;
    std::vector<double> table_;     // vocab x vocab scores in [0,1)
    std::vector<TokenId> succ_;     // argmax successor per token
    std::vector<double> runner_up_; // largest non-successor score per row
};

// Tuning knobs for DegenerateLoopOracle. Loop continuations ride a small
// ballast, so their confidence saturates near loop_confidence under any
// candidate subset; content predictions spread over a large ballast, so their
// subset confidence deflates as the candidate set widens — the lever that
// separates adaptive-subset runs from full-vocabulary runs.
struct LoopOracleParams {
    int vocab = 8192;
    TokenId token_a = 17;
    TokenId token_b = 23;
    double loop_confidence = 0.98;  // saturated commit confidence of loop continuations
    double echo_sub_base = 0.93;    // narrow-set confidence of the first echo after a seed
    double echo_sub_ramp = 0.01;    // confidence growth per already-committed loop token
    double seed_sub_conf = 0.97;    // narrow-set confidence of a fresh-block loop seed
    double content_full_unresolved = 0.12;  // full-vocab confidence before content firms up
    double content_full_resolved = 0.548;   // full-vocab confidence after resolution
    int resolve_step = 6;       // inner pass at which content predictions firm up
    int loop_ballast = 34;      // near-tie tokens under loop predictions
    int content_ballast = 350;  // near-tie tokens under content predictions
    double tail_logit = -3.0;   // everything outside target + ballast
    uint64_t seed = 2024;
};

// An oracle that tempts the decoder into a two-token loop: once a loop token
// is committed, the position to its right confidently predicts the partner
// token, and fresh blocks seed the loop. Content predictions start murky and
// resolve after a few passes. Absent intervention, greedy decoding emits
// a,b,a,b,... indefinitely.
class DegenerateLoopOracle : public Denoiser {
public:
    explicit DegenerateLoopOracle(LoopOracleParams params = {});

    int vocab_size() const override { return params_.vocab; }
    std::string name() const override { return "degenerate"; }
    LogitsMatrix logits(const Canvas& canvas, Window window, int step_in_block) const override;
    std::vector<TokenId> reference_output(const std::vector<TokenId>& prompt, int g) const override;

    const LoopOracleParams& params() const { return params_; }
    TokenId content_target(int pos) const;

private:
    void fill_row(double* row, TokenId target, double target_exp, int ballast) const;
    LoopOracleParams params_;
};

// Position cost of one denoiser call under a cache mode:
//   none   — the whole canvas is recomputed;
//   prefix — window plus everything right of it (the prefix is cached);
//   dual   — window only, plus a full-canvas refresh charged at block entry.
double call_cost(CacheMode mode, int canvas_len, Window window, bool block_entry);

}  // namespace mdd
