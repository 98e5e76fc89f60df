// Schedule formulas against hand-derived values, commit rules against
// brute-force oracles, the repetition detector, and policy composition.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "mdd/policy.hpp"

using namespace mdd;

namespace {

std::vector<PositionConfidence> rows_from_scores(const std::vector<double>& scores) {
    std::vector<PositionConfidence> out;
    for (size_t i = 0; i < scores.size(); ++i) {
        PositionConfidence pc;
        pc.position = static_cast<int>(i);
        pc.predicted = static_cast<TokenId>(100 + i);
        pc.score = scores[i];
        out.push_back(pc);
    }
    return out;
}

// Brute-force threshold rule: every index with score >= tau, else best index.
std::vector<int> threshold_oracle(const std::vector<double>& s, double tau) {
    std::vector<int> out;
    for (size_t i = 0; i < s.size(); ++i)
        if (s[i] >= tau) out.push_back(static_cast<int>(i));
    if (out.empty()) {
        int best = 0;
        for (size_t i = 1; i < s.size(); ++i)
            if (s[i] > s[static_cast<size_t>(best)]) best = static_cast<int>(i);
        out.push_back(best);
    }
    return out;
}

// Brute-force factor rule: sort scores descending, take the largest r with
// (r+1)(1 - c_(r)) < phi, at least 1; return those indices ascending.
std::vector<int> factor_oracle(const std::vector<double>& s, double phi) {
    std::vector<int> order(s.size());
    for (size_t i = 0; i < s.size(); ++i) order[i] = static_cast<int>(i);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return s[static_cast<size_t>(a)] > s[static_cast<size_t>(b)]; });
    int r = 1;
    for (int cand = static_cast<int>(s.size()); cand >= 1; --cand) {
        const double c_r = s[static_cast<size_t>(order[static_cast<size_t>(cand - 1)])];
        if ((cand + 1) * (1.0 - c_r) < phi) {
            r = cand;
            break;
        }
    }
    std::vector<int> out(order.begin(), order.begin() + r);
    std::sort(out.begin(), out.end());
    return out;
}

double unit(uint64_t seed, uint64_t v) {
    return static_cast<double>(hash_mix(seed, v) >> 11) * 0x1.0p-53;
}

}  // namespace

// ----------------------------------------------------------- mean window

TEST_CASE("sliding mean uses the last delta entries and defaults to 0.5") {
    CHECK(mean_conf_window({}, 5) == 0.5);
    CHECK(mean_conf_window({0.8}, 5) == doctest::Approx(0.8).epsilon(1e-15));
    // last 3 of (0.2, 0.9, 0.6, 0.77): mean(0.9, 0.6, 0.77) = 0.756666...
    CHECK(mean_conf_window({0.2, 0.9, 0.6, 0.77}, 3) ==
          doctest::Approx((0.9 + 0.6 + 0.77) / 3.0).epsilon(1e-15));
    // delta larger than the history: plain mean
    CHECK(mean_conf_window({0.5, 0.9}, 10) == doctest::Approx(0.7).epsilon(1e-15));
}

// -------------------------------------------------------------- schedules

TEST_CASE("block size interpolates B_min..B_max and clips after rounding") {
    const DecodeConfig cfg = default_config();
    CHECK(adaptive_block_size_real(0.0, cfg) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(adaptive_block_size_real(1.0, cfg) == doctest::Approx(64.0).epsilon(1e-12));
    CHECK(adaptive_block_size_real(0.5, cfg) == doctest::Approx(34.0).epsilon(1e-12));
    CHECK(adaptive_block_size(0.0, cfg) == 4);
    CHECK(adaptive_block_size(1.0, cfg) == 64);
    CHECK(adaptive_block_size(0.5, cfg) == 34);
    CHECK(adaptive_block_size(0.51, cfg) == 35);  // 34.6 rounds up

    // 20+ grid points against the closed form, 1e-12 before rounding.
    for (int i = 0; i <= 24; ++i) {
        const double c = i / 24.0;
        const double want = 4.0 + (64.0 - 4.0) * c;
        CHECK(adaptive_block_size_real(c, cfg) == doctest::Approx(want).epsilon(1e-12));
        CHECK(adaptive_block_size(c, cfg) ==
              std::clamp(static_cast<int>(std::lround(want)), 4, 64));
    }
}

TEST_CASE("step budget interpolates S_base..S_max against falling confidence") {
    const DecodeConfig cfg = default_config();
    CHECK(adaptive_steps_real(1.0, cfg) == doctest::Approx(24.0).epsilon(1e-12));
    CHECK(adaptive_steps_real(0.0, cfg) == doctest::Approx(90.0).epsilon(1e-12));
    CHECK(adaptive_steps_real(0.5, cfg) == doctest::Approx(57.0).epsilon(1e-12));
    CHECK(adaptive_steps(0.5, cfg) == 57);
    for (int i = 0; i <= 24; ++i) {
        const double c = i / 24.0;
        const double want = 24.0 + (90.0 - 24.0) * (1.0 - c);
        CHECK(adaptive_steps_real(c, cfg) == doctest::Approx(want).epsilon(1e-12));
        CHECK(adaptive_steps(c, cfg) ==
              std::clamp(static_cast<int>(std::lround(want)), 24, 90));
    }
}

TEST_CASE("threshold interpolates tau_0 down to tau_min") {
    const DecodeConfig cfg = default_config();
    CHECK(adaptive_threshold(0.0, cfg) == doctest::Approx(0.85).epsilon(1e-12));
    CHECK(adaptive_threshold(1.0, cfg) == doctest::Approx(0.40).epsilon(1e-12));
    CHECK(adaptive_threshold(0.5, cfg) == doctest::Approx(0.625).epsilon(1e-12));
    for (int i = 0; i <= 24; ++i) {
        const double g = i / 24.0;
        CHECK(adaptive_threshold(g, cfg) ==
              doctest::Approx(0.85 * (1.0 - g) + 0.40 * g).epsilon(1e-12));
    }
}

TEST_CASE("schedules are monotone over a dense grid") {
    const DecodeConfig cfg = default_config();
    double prev_b = -1e9, prev_s = 1e9, prev_tau = 1e9;
    for (int i = 0; i <= 1000; ++i) {
        const double x = i / 1000.0;
        const double b = adaptive_block_size_real(x, cfg);
        const double s = adaptive_steps_real(x, cfg);
        const double tau = adaptive_threshold(x, cfg);
        CHECK(b >= prev_b);
        CHECK(s <= prev_s);
        CHECK(tau <= prev_tau);
        prev_b = b;
        prev_s = s;
        prev_tau = tau;
    }
}

TEST_CASE("integer schedules stay inside their configured ranges") {
    DecodeConfig cfg = default_config();
    cfg.B_min = 3;
    cfg.B_max = 17;
    cfg.S_base = 10;
    cfg.S_max = 11;
    for (int i = 0; i <= 200; ++i) {
        const double c = i / 200.0;
        const int b = adaptive_block_size(c, cfg);
        const int s = adaptive_steps(c, cfg);
        CHECK(b >= 3);
        CHECK(b <= 17);
        CHECK(s >= 10);
        CHECK(s <= 11);
    }
}

// ----------------------------------------------------- candidate-set size

TEST_CASE("phase vocabulary shrinks from 2x to 0.5x across progress") {
    const DecodeConfig cfg = default_config();
    CHECK(phase_vocab(0.0, cfg) == doctest::Approx(200.0).epsilon(1e-12));
    CHECK(phase_vocab(1.0, cfg) == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(phase_vocab(2.0 / 3.0, cfg) == doctest::Approx(100.0).epsilon(1e-12));
    for (int i = 0; i <= 20; ++i) {
        const double g = i / 20.0;
        CHECK(phase_vocab(g, cfg) ==
              doctest::Approx(100.0 * (2.0 - 1.5 * g)).epsilon(1e-12));
    }
}

TEST_CASE("confidence factor follows the three bins with empty-history neutral") {
    const DecodeConfig cfg = default_config();
    CHECK(conf_factor(0.2, true, cfg) == 1.0);   // no history yet
    CHECK(conf_factor(0.49, false, cfg) == 1.5);
    CHECK(conf_factor(0.5, false, cfg) == 1.2);  // at the lower edge
    CHECK(conf_factor(0.74, false, cfg) == 1.2);
    CHECK(conf_factor(0.75, false, cfg) == 0.8);  // at the upper edge
    CHECK(conf_factor(0.99, false, cfg) == 0.8);
}

TEST_CASE("repetition factor trips above 0.5") {
    CHECK(rep_factor(0.0) == 1.0);
    CHECK(rep_factor(0.4) == 1.0);
    CHECK(rep_factor(0.5) == 1.0);  // strictly-above trip point
    CHECK(rep_factor(0.75) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(rep_factor(1.0) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("vocabulary size composes phase, confidence, and repetition factors") {
    const DecodeConfig cfg = default_config();
    // Empty history at progress 0: 200 * 1.0 * 1.0 = 200.
    CHECK(adaptive_vocab_real(0.0, 0.5, 0.0, true, cfg) ==
          doctest::Approx(200.0).epsilon(1e-12));
    CHECK(adaptive_vocab(0.0, 0.5, 0.0, true, cfg) == 200);
    // Late, confident, no repetition: 50 * 0.8 = 40 -> clipped to V_min=35? no: 40 >= 35.
    CHECK(adaptive_vocab_real(1.0, 0.9, 0.0, false, cfg) ==
          doctest::Approx(40.0).epsilon(1e-12));
    CHECK(adaptive_vocab(1.0, 0.9, 0.0, false, cfg) == 40);
    // Very confident late run is floored at V_min: 50*0.8=40, with lower V_0 it clips.
    DecodeConfig tight = cfg;
    tight.V_0 = 80;  // 80*0.5*0.8 = 32 -> clip to 35
    CHECK(adaptive_vocab(1.0, 0.9, 0.0, false, tight) == 35);
    // Repetition widens: 100 * 1.2 * (1 + 2*0.75) = 300 at mid progress g=2/3.
    CHECK(adaptive_vocab_real(2.0 / 3.0, 0.6, 0.75, false, cfg) ==
          doctest::Approx(100.0 * 1.2 * 2.5).epsilon(1e-12));
    CHECK(adaptive_vocab(2.0 / 3.0, 0.6, 0.75, false, cfg) == 300);
    // Ceiling: factors cannot push past V_max.
    DecodeConfig wide = cfg;
    wide.V_0 = 900;
    CHECK(adaptive_vocab(0.0, 0.2, 0.9, false, wide) == 1000);
}

TEST_CASE("policy vocabulary never leaves [V_min, V_max]") {
    const DecodeConfig cfg = default_config();
    for (int i = 0; i <= 10; ++i) {
        for (int j = 0; j <= 10; ++j) {
            for (int k = 0; k <= 4; ++k) {
                const int v = adaptive_vocab(i / 10.0, j / 10.0, k / 4.0, false, cfg);
                CHECK(v >= cfg.V_min);
                CHECK(v <= cfg.V_max);
            }
        }
    }
}

// ------------------------------------------------------------ repetition

TEST_CASE("repetition score matches hand-counted windows") {
    // a b a b a b c d in a window of 8: the leading ababab section is covered
    // by a repeated bigram -> 6/8.
    CHECK(repetition_score({1, 2, 1, 2, 1, 2, 3, 4}, 8, 2) ==
          doctest::Approx(0.75).epsilon(1e-12));
    // All one bigram: full cover.
    CHECK(repetition_score({7, 9, 7, 9, 7, 9, 7, 9}, 8, 2) ==
          doctest::Approx(1.0).epsilon(1e-12));
    // No adjacent repeats at any n-gram length.
    CHECK(repetition_score({1, 2, 3, 4, 5, 6, 7, 8}, 8, 2) == 0.0);
    // Too short to contain a repeated bigram.
    CHECK(repetition_score({1, 2, 1}, 8, 2) == 0.0);
    CHECK(repetition_score({}, 8, 2) == 0.0);
}

TEST_CASE("repetition score sees trigram and longer cycles") {
    CHECK(repetition_score({4, 5, 6, 4, 5, 6, 4, 5}, 8, 2) > 0.5);
    // A repeated 4-gram fills the window.
    CHECK(repetition_score({1, 2, 3, 4, 1, 2, 3, 4}, 8, 2) ==
          doctest::Approx(1.0).epsilon(1e-12));
    // A period-2 window also has period 4, so min_len=3 still sees the loop
    // through its repeated 4-gram.
    CHECK(repetition_score({1, 2, 1, 2, 1, 2, 1, 2}, 8, 3) ==
          doctest::Approx(1.0).epsilon(1e-12));
    // But a window with no repeated n-gram of length >= 3 scores 0.
    CHECK(repetition_score({1, 2, 1, 2, 1, 2, 1, 3}, 8, 3) == 0.0);
}

TEST_CASE("repetition score is 0 for distinct tokens on random windows") {
    for (uint64_t s = 0; s < 20; ++s) {
        std::vector<TokenId> w;
        for (int i = 0; i < 8; ++i)
            w.push_back(static_cast<TokenId>(1000 * (i + 1) + static_cast<int>(s)));
        CHECK(repetition_score(w, 8, 2) == 0.0);
    }
}

// ------------------------------------------------------------ commit rules

TEST_CASE("threshold rule: spec examples") {
    // scores (0.95, 0.60, 0.90), tau 0.85 -> rows 0 and 2.
    CHECK(threshold_commits(rows_from_scores({0.95, 0.60, 0.90}), 0.85) ==
          std::vector<int>{0, 2});
    // nothing clears tau -> the single best row.
    CHECK(threshold_commits(rows_from_scores({0.2, 0.5, 0.4}), 0.85) ==
          std::vector<int>{1});
    // everything clears -> all rows.
    CHECK(threshold_commits(rows_from_scores({0.9, 0.9, 0.9}), 0.85) ==
          std::vector<int>{0, 1, 2});
    // forced-progress tie goes to the earliest row.
    CHECK(threshold_commits(rows_from_scores({0.5, 0.5}), 0.9) == std::vector<int>{0});
}

TEST_CASE("factor rule: spec example and edge cases") {
    // scores (0.95, 0.90, 0.60), phi = 1: r=2 -> rows 0, 1.
    CHECK(factor_commits(rows_from_scores({0.95, 0.90, 0.60}), 1.0) ==
          std::vector<int>{0, 1});
    // all certain: r = m.
    CHECK(factor_commits(rows_from_scores({1.0, 1.0, 1.0, 1.0}), 1.0) ==
          std::vector<int>{0, 1, 2, 3});
    // nothing qualifies: forced single commit of the best row.
    CHECK(factor_commits(rows_from_scores({0.1}), 0.5) == std::vector<int>{0});
    CHECK(factor_commits(rows_from_scores({0.3, 0.8, 0.2}), 0.2) == std::vector<int>{1});
}

TEST_CASE("commit rules agree with brute-force oracles on random instances") {
    int checked = 0;
    for (uint64_t inst = 0; inst < 1000; ++inst) {
        const int m = 1 + static_cast<int>(hash_mix(inst, 0) % 64);
        std::vector<double> scores;
        for (int i = 0; i < m; ++i) {
            // Quantized scores make ties common, exercising tie-break rules.
            scores.push_back(std::floor(unit(inst, static_cast<uint64_t>(i + 1)) * 16.0) / 16.0);
        }
        const double tau = unit(inst, 777);
        const double phi = 0.05 + 3.0 * unit(inst, 888);
        const auto rows = rows_from_scores(scores);
        CHECK(threshold_commits(rows, tau) == threshold_oracle(scores, tau));
        CHECK(factor_commits(rows, phi) == factor_oracle(scores, phi));
        ++checked;
    }
    CHECK(checked == 1000);
}

TEST_CASE("commit rules always commit at least one row") {
    for (uint64_t inst = 0; inst < 50; ++inst) {
        const int m = 1 + static_cast<int>(hash_mix(inst, 5) % 8);
        std::vector<double> scores;
        for (int i = 0; i < m; ++i) scores.push_back(unit(inst, static_cast<uint64_t>(i)));
        const auto rows = rows_from_scores(scores);
        CHECK(!threshold_commits(rows, 2.0).empty());  // unreachable tau
        CHECK(!factor_commits(rows, 1e-9).empty());    // unreachable phi
    }
}

// --------------------------------------------------------------- prophet

TEST_CASE("prophet triggers on the aggregated top1-top2 gap") {
    DecodeConfig cfg = default_config();
    cfg.prophet_enabled = true;
    auto mk = [](std::vector<std::pair<double, double>> tops) {
        std::vector<PositionConfidence> v;
        for (auto [a, b] : tops) {
            PositionConfidence pc;
            pc.top1 = a;
            pc.top2 = b;
            v.push_back(pc);
        }
        return v;
    };
    // gaps 0.85-0.25=0.6 and 0.5-0.1=0.4; mean 0.5 >= 0.5 -> stop.
    CHECK(prophet_should_stop(mk({{0.85, 0.25}, {0.5, 0.1}}), cfg));
    // mean 0.35 < 0.5 -> keep going.
    CHECK_FALSE(prophet_should_stop(mk({{0.6, 0.3}, {0.5, 0.1}}), cfg));
    // top1 == top2 everywhere: gap 0 < 0.5.
    CHECK_FALSE(prophet_should_stop(mk({{0.4, 0.4}}), cfg));
    // gap threshold 0 always stops.
    cfg.prophet_gap = 0.0;
    CHECK(prophet_should_stop(mk({{0.4, 0.4}}), cfg));

    // min-aggregation requires every row to clear the gap.
    cfg = default_config();
    cfg.prophet_aggregate = ProphetAggregate::min;
    CHECK_FALSE(prophet_should_stop(mk({{0.85, 0.25}, {0.5, 0.1}}), cfg));  // min 0.4
    CHECK(prophet_should_stop(mk({{0.85, 0.25}, {0.7, 0.1}}), cfg));        // min 0.6
    // No remaining rows: nothing to fast-commit.
    CHECK_FALSE(prophet_should_stop({}, cfg));
}

// ------------------------------------------------------------ composition

TEST_CASE("policy composition pins the first block and honors ablations") {
    const DecodeConfig cfg = default_config();
    PolicyState fresh;

    // Block 0, empty history: the configured starting point.
    PolicyOutputs p0 = compute_policy(fresh, 0.0, 0, 100000, cfg);
    CHECK(p0.B_t == 24);
    CHECK(p0.S_t == 24);
    CHECK(p0.V_t == 200);  // phase 200 * neutral factors
    CHECK(p0.tau_t == doctest::Approx(0.85).epsilon(1e-12));
    CHECK(p0.history_empty);
    CHECK_FALSE(p0.sequential);

    // Later block with confident history: bigger B, fewer steps, narrower V.
    PolicyState hot;
    hot.conf_history = {0.9, 0.92, 0.95, 0.9, 0.93};
    PolicyOutputs p1 = compute_policy(hot, 0.5, 3, 100000, cfg);
    CHECK(p1.B_t > 24);
    CHECK(p1.S_t < 30);
    CHECK(p1.tau_t == doctest::Approx(0.625).epsilon(1e-12));
    CHECK(p1.c_bar == doctest::Approx(0.92).epsilon(1e-12));

    // NoB pins the block size; NoS pins the step budget; NoV opens the vocab.
    DecodeConfig no_b = cfg;
    no_b.ablation = Ablation::no_b;
    CHECK(compute_policy(hot, 0.5, 3, 100000, no_b).B_t == 24);
    DecodeConfig no_s = cfg;
    no_s.ablation = Ablation::no_s;
    CHECK(compute_policy(hot, 0.5, 3, 100000, no_s).S_t == 24);
    DecodeConfig no_v = cfg;
    no_v.ablation = Ablation::no_v;
    CHECK(compute_policy(hot, 0.5, 3, 100000, no_v).V_t == 100000);

    // NoTau and OFF run sequentially (single commit per pass, no budget).
    DecodeConfig no_tau = cfg;
    no_tau.ablation = Ablation::no_tau;
    CHECK(compute_policy(hot, 0.5, 3, 100000, no_tau).sequential);
    DecodeConfig off = cfg;
    off.ablation = Ablation::off;
    PolicyOutputs poff = compute_policy(hot, 0.5, 3, 100000, off);
    CHECK(poff.sequential);
    CHECK(poff.B_t == 24);
    CHECK(poff.V_t == 100000);

    // Static rules ignore the adaptive machinery entirely.
    DecodeConfig thr = cfg;
    thr.rule = CommitRule::threshold;
    PolicyOutputs pt = compute_policy(hot, 0.5, 3, 100000, thr);
    CHECK(pt.B_t == 24);
    CHECK(pt.S_t == 24);
    CHECK(pt.V_t == 100000);
    CHECK(pt.tau_t == doctest::Approx(thr.static_tau).epsilon(1e-12));
}

TEST_CASE("policy vocabulary clamps to the model vocabulary") {
    const DecodeConfig cfg = default_config();
    PolicyState fresh;
    // Model vocab smaller than the adaptive choice (200 at block 0).
    CHECK(compute_policy(fresh, 0.0, 0, 128, cfg).V_t == 128);
    CHECK(compute_policy(fresh, 0.0, 0, 8192, cfg).V_t == 200);
}

TEST_CASE("recent-commit ring keeps the last rep_window tokens in order") {
    PolicyState st;
    for (TokenId t = 1; t <= 12; ++t) st.push_commit(t, 8);
    CHECK(st.recent_tokens == std::vector<TokenId>{5, 6, 7, 8, 9, 10, 11, 12});
}
