// Policy implementations.
#include "mdd/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mdd {

void PolicyState::push_commit(TokenId tok, int rep_window) {
    recent_tokens.push_back(tok);
    if (static_cast<int>(recent_tokens.size()) > rep_window)
        recent_tokens.erase(recent_tokens.begin(),
                            recent_tokens.end() - rep_window);
}

double mean_conf_window(const std::vector<double>& C, int delta) {
    if (C.empty()) return 0.5;  // neutral default before any signal exists
    const int n = std::min<int>(delta, static_cast<int>(C.size()));
    double sum = 0.0;
    for (int i = static_cast<int>(C.size()) - n; i < static_cast<int>(C.size()); ++i)
        sum += C[static_cast<size_t>(i)];
    return sum / n;
}

double adaptive_block_size_real(double c_bar, const DecodeConfig& cfg) {
    return cfg.B_min + (cfg.B_max - cfg.B_min) * c_bar;
}

int adaptive_block_size(double c_bar, const DecodeConfig& cfg) {
    const long v = std::lround(adaptive_block_size_real(c_bar, cfg));
    return static_cast<int>(std::clamp<long>(v, cfg.B_min, cfg.B_max));
}

double adaptive_steps_real(double c_bar, const DecodeConfig& cfg) {
    return cfg.S_base + (cfg.S_max - cfg.S_base) * (1.0 - c_bar);
}

int adaptive_steps(double c_bar, const DecodeConfig& cfg) {
    const long v = std::lround(adaptive_steps_real(c_bar, cfg));
    return static_cast<int>(std::clamp<long>(v, cfg.S_base, cfg.S_max));
}

double repetition_score(const std::vector<TokenId>& recent, int w, int min_len) {
    const int n = std::min<int>(w, static_cast<int>(recent.size()));
    if (n < 2 * min_len) return 0.0;
    const TokenId* win = recent.data() + (recent.size() - static_cast<size_t>(n));
    std::vector<char> covered(static_cast<size_t>(n), 0);
    for (int len = min_len; 2 * len <= n; ++len) {
        for (int i = 0; i + 2 * len <= n; ++i) {
            if (std::equal(win + i, win + i + len, win + i + len))
                std::fill(covered.begin() + i, covered.begin() + i + 2 * len, char(1));
        }
    }
    const int hit = static_cast<int>(std::count(covered.begin(), covered.end(), char(1)));
    return static_cast<double>(hit) / w;
}

double rep_factor(double r_t) { return r_t > 0.5 ? 1.0 + 2.0 * r_t : 1.0; }

double conf_factor(double c_bar, bool history_empty, const DecodeConfig& cfg) {
    if (history_empty) return 1.0;
    if (c_bar < cfg.fconf_edge_lo) return 1.5;
    if (c_bar < cfg.fconf_edge_hi) return 1.2;
    return 0.8;
}

double phase_vocab(double g_t, const DecodeConfig& cfg) {
    return cfg.V_0 * (cfg.vphase_hi - (cfg.vphase_hi - cfg.vphase_lo) * g_t);
}

double adaptive_vocab_real(double g_t, double c_bar, double r_t, bool history_empty,
                           const DecodeConfig& cfg) {
    return phase_vocab(g_t, cfg) * conf_factor(c_bar, history_empty, cfg) * rep_factor(r_t);
}

int adaptive_vocab(double g_t, double c_bar, double r_t, bool history_empty,
                   const DecodeConfig& cfg) {
    const long v = std::lround(adaptive_vocab_real(g_t, c_bar, r_t, history_empty, cfg));
    return static_cast<int>(std::clamp<long>(v, cfg.V_min, cfg.V_max));
}

double adaptive_threshold(double g_t, const DecodeConfig& cfg) {
    return cfg.tau_0 * (1.0 - g_t) + cfg.tau_min * g_t;
}

std::vector<int> threshold_commits(const std::vector<PositionConfidence>& confs, double tau) {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(confs.size()); ++i)
        if (confs[static_cast<size_t>(i)].score >= tau) out.push_back(i);
    if (out.empty() && !confs.empty()) {
        // Forced progress: the single best row (earliest position on ties).
        int best = 0;
        for (int i = 1; i < static_cast<int>(confs.size()); ++i)
            if (confs[static_cast<size_t>(i)].score > confs[static_cast<size_t>(best)].score)
                best = i;
        out.push_back(best);
    }
    return out;
}

std::vector<int> factor_commits(const std::vector<PositionConfidence>& confs, double phi) {
    const int m = static_cast<int>(confs.size());
    if (m == 0) return {};
    std::vector<int> order(static_cast<size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&confs](int a, int b) {
        return confs[static_cast<size_t>(a)].score > confs[static_cast<size_t>(b)].score;
    });
    int r = 1;  // forced progress when no count qualifies
    for (int cand = m; cand >= 1; --cand) {
        const double c_r = confs[static_cast<size_t>(order[static_cast<size_t>(cand - 1)])].score;
        if ((cand + 1) * (1.0 - c_r) < phi) {
            r = cand;
            break;
        }
    }
    std::vector<int> out(order.begin(), order.begin() + r);
    std::sort(out.begin(), out.end());
    return out;
}

bool prophet_should_stop(const std::vector<PositionConfidence>& remaining,
                         const DecodeConfig& cfg) {
    if (remaining.empty()) return false;
    double gap = 0.0;
    if (cfg.prophet_aggregate == ProphetAggregate::mean) {
        double t1 = 0.0, t2 = 0.0;
        for (const PositionConfidence& pc : remaining) {
            t1 += pc.top1;
            t2 += pc.top2;
        }
        gap = (t1 - t2) / static_cast<double>(remaining.size());
    } else {
        gap = 1.0;
        for (const PositionConfidence& pc : remaining)
            gap = std::min(gap, pc.top1 - pc.top2);
    }
    return gap >= cfg.prophet_gap;
}

PolicyOutputs compute_policy(const PolicyState& state, double g_t, int block_index,
                             int vocab, const DecodeConfig& cfg) {
    PolicyOutputs out;
    out.history_empty = state.conf_history.empty();
    out.c_bar = mean_conf_window(state.conf_history, cfg.window);
    out.r_t = repetition_score(state.recent_tokens, cfg.rep_window, cfg.rep_min_len);

    if (cfg.rule != CommitRule::adaptive) {
        // Static baselines: fixed block and budget, full vocabulary, their own
        // commit rule applied by the decode loop.
        out.B_t = cfg.B_0;
        out.S_t = cfg.S_base;
        out.V_t = vocab;
        out.tau_t = cfg.static_tau;
        return out;
    }

    const Ablation a = cfg.ablation;
    const bool all_off = a == Ablation::off;
    out.sequential = a == Ablation::no_tau || all_off;

    // The first block uses the configured starting point directly; afterwards
    // the schedules take over unless ablated away.
    if (block_index == 0 || a == Ablation::no_b || all_off)
        out.B_t = cfg.B_0;
    else
        out.B_t = adaptive_block_size(out.c_bar, cfg);

    if (block_index == 0 || a == Ablation::no_s || all_off)
        out.S_t = cfg.S_base;
    else
        out.S_t = adaptive_steps(out.c_bar, cfg);

    if (a == Ablation::no_v || all_off)
        out.V_t = vocab;
    else
        out.V_t = std::min(adaptive_vocab(g_t, out.c_bar, out.r_t, out.history_empty, cfg), vocab);

    // Sequential modes take the single best row per pass; tau is recorded for
    // the trace but no threshold commit happens.
    out.tau_t = adaptive_threshold(g_t, cfg);
    return out;
}

}  // namespace mdd
