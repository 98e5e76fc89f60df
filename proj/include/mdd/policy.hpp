// Decoding policies: the sliding confidence signal, the four adaptive
// schedules (block size, step budget, candidate-set size, commit threshold),
// the repetition detector, both commit rules, and the prophet early-commit.
#pragma once

#include "mdd/confidence.hpp"
#include "mdd/core.hpp"

namespace mdd {

// The controller's evolving signals, owned by one decode run.
struct PolicyState {
    std::vector<double> conf_history;    // one entry per denoiser pass
    std::vector<TokenId> recent_tokens;  // ring of the last rep_window commits

    void push_commit(TokenId tok, int rep_window);
};

// Per-block policy decisions plus the signals they were computed from.
struct PolicyOutputs {
    int B_t = 0;
    int S_t = 0;
    int V_t = 0;  // clamped to the model vocabulary
    double tau_t = 0.0;
    double c_bar = 0.5;
    double r_t = 0.0;
    bool history_empty = true;
    bool sequential = false;  // single-commit mode: no step budget, no flooding
};

// Mean of the last min(delta, |C|) entries; 0.5 when C is empty.
double mean_conf_window(const std::vector<double>& C, int delta);

// Pre-rounding real forms of the schedules (exposed for exactness tests),
// and their rounded-and-clipped integer counterparts.
double adaptive_block_size_real(double c_bar, const DecodeConfig& cfg);
int adaptive_block_size(double c_bar, const DecodeConfig& cfg);
double adaptive_steps_real(double c_bar, const DecodeConfig& cfg);
int adaptive_steps(double c_bar, const DecodeConfig& cfg);

// Fraction of the recent-commit window covered by n-grams (n >= min_len)
// repeated at least twice in a row; 0 if fewer than 2*min_len tokens.
double repetition_score(const std::vector<TokenId>& recent, int w, int min_len);

// 1 + 2*r_t above the 0.5 trip point, else 1.
double rep_factor(double r_t);

// 1.0 with no history; else 1.5 / 1.2 / 0.8 by the configured bin edges.
double conf_factor(double c_bar, bool history_empty, const DecodeConfig& cfg);

// V_0 * (hi - (hi - lo) * g_t): widens early, narrows late.
double phase_vocab(double g_t, const DecodeConfig& cfg);

double adaptive_vocab_real(double g_t, double c_bar, double r_t, bool history_empty,
                           const DecodeConfig& cfg);
int adaptive_vocab(double g_t, double c_bar, double r_t, bool history_empty,
                   const DecodeConfig& cfg);

// tau_0 * (1 - g_t) + tau_min * g_t, exact.
double adaptive_threshold(double g_t, const DecodeConfig& cfg);

// Indices (into `confs`, which is position-ascending) of rows with
// score >= tau; falls back to the single best row so a pass always commits.
std::vector<int> threshold_commits(const std::vector<PositionConfidence>& confs, double tau);

// Indices of the top-r rows by score, r maximal with (r+1)*(1-c_(r)) < phi
// (c_(r) = r-th largest score); r = 1 when nothing qualifies. Ties by
// position. Returned ascending by row index.
std::vector<int> factor_commits(const std::vector<PositionConfidence>& confs, double phi);

// True when the aggregated top1-top2 probability gap over the still-masked
// rows reaches cfg.prophet_gap (aggregation per cfg.prophet_aggregate).
bool prophet_should_stop(const std::vector<PositionConfidence>& remaining,
                         const DecodeConfig& cfg);

// Per-block composition: signals from state, schedules subject to the
// ablation mode and rule, first-block pins, and the vocabulary clamp.
PolicyOutputs compute_policy(const PolicyState& state, double g_t, int block_index,
                             int vocab, const DecodeConfig& cfg);

}  // namespace mdd
