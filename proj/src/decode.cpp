// Generation loop, ablation suite, and trace post-processing.
#include "mdd/decode.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mdd {

namespace {

double mean_score(const std::vector<PositionConfidence>& scores) {
    double s = 0.0;
    for (const PositionConfidence& pc : scores) s += pc.score;
    return s / static_cast<double>(scores.size());
}

}  // namespace

DecodeResult generate(const Denoiser& model, const std::vector<TokenId>& prompt, int g,
                      const DecodeConfig& cfg) {
    validate(cfg);
    if (g < 1) throw GenError("generation length must be >= 1");
    const auto t0 = std::chrono::steady_clock::now();

    DecodeResult res;
    res.canvas = Canvas::make(prompt, g);
    Canvas& canvas = res.canvas;
    PolicyState st;

    int pos = canvas.prompt_len;
    int remain = g;
    int block_index = 0;
    long long nfe = 0;
    double cost = 0.0;

    while (remain > 0) {
        const double g_t = static_cast<double>(g - remain) / g;
        const PolicyOutputs po =
            compute_policy(st, g_t, block_index, model.vocab_size(), cfg);
        const int B = std::min(po.B_t, remain);
        const Window w{pos, pos + B};

        std::vector<PositionConfidence> scores;
        int step = 0;
        while (canvas.masked_in(w.begin, w.end) > 0) {
            // Sequential modes drain the window one commit per pass and are
            // exempt from the step budget; budgeted modes stop at S_t and let
            // the completion step below finish the block.
            if (!po.sequential && step >= po.S_t) break;

            const LogitsMatrix lm = model.logits(canvas, w, step);
            ++nfe;
            const double c = call_cost(cfg.cache_mode, canvas.length(), w, step == 0);
            cost += c;
            scores = score_window(lm, po.V_t, cfg.confidence_method, cfg.threads);
            const double mean_conf = mean_score(scores);

            std::vector<int> sel;
            if (po.sequential)
                sel = threshold_commits(scores, std::numeric_limits<double>::infinity());
            else if (cfg.rule == CommitRule::factor)
                sel = factor_commits(scores, cfg.factor);
            else
                sel = threshold_commits(scores, po.tau_t);

            StepTrace tr;
            tr.block_index = block_index;
            tr.step_index = step;
            tr.B_t = B;
            tr.S_t = po.S_t;
            tr.V_t = po.V_t;
            tr.tau_t = po.tau_t;
            tr.r_t = po.r_t;
            tr.mean_masked_conf = mean_conf;
            tr.positions_processed = std::llround(c);
            tr.cumulative_nfe = nfe;

            std::vector<char> taken(scores.size(), 0);
            for (int i : sel) {
                const PositionConfidence& pc = scores[static_cast<size_t>(i)];
                canvas.commit(pc.position, pc.predicted);
                st.push_commit(pc.predicted, cfg.rep_window);
                tr.committed_positions.push_back(pc.position);
                taken[static_cast<size_t>(i)] = 1;
                --remain;
            }

            if (cfg.prophet_enabled) {
                std::vector<PositionConfidence> left;
                for (size_t i = 0; i < scores.size(); ++i)
                    if (!taken[i]) left.push_back(scores[i]);
                if (!left.empty() && prophet_should_stop(left, cfg)) {
                    // All-at-once finish: commit every remaining row to its
                    // argmax using this pass's predictions (no extra call).
                    for (const PositionConfidence& pc : left) {
                        canvas.commit(pc.position, pc.predicted);
                        st.push_commit(pc.predicted, cfg.rep_window);
                        tr.committed_positions.push_back(pc.position);
                        --remain;
                    }
                }
            }

            st.conf_history.push_back(mean_conf);
            res.traces.push_back(std::move(tr));
            ++step;
        }

        if (!po.sequential && canvas.masked_in(w.begin, w.end) > 0) {
            // Completion guarantee: the budget ran out with masks left, so
            // commit them to the final pass's argmax predictions.
            for (const PositionConfidence& pc : scores) {
                if (!canvas.is_masked(pc.position)) continue;
                canvas.commit(pc.position, pc.predicted);
                st.push_commit(pc.predicted, cfg.rep_window);
                res.traces.back().committed_positions.push_back(pc.position);
                --remain;
            }
        }

        pos += B;
        ++block_index;
    }

    res.metrics.nfe = nfe;
    res.metrics.tokens_committed = g;
    res.metrics.simulated_cost = cost;
    res.metrics.tokens_per_second = cost > 0.0 ? static_cast<double>(g) / cost : 0.0;
    res.metrics.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

DecodeConfig apply_mode(const DecodeConfig& base, const std::string& mode) {
    DecodeConfig cfg = base;
    try {
        cfg.ablation = parse_ablation(mode);
        cfg.rule = CommitRule::adaptive;
        return cfg;
    } catch (const ConfigError&) {
    }
    const CommitRule rule = parse_commit_rule(mode);
    if (rule == CommitRule::adaptive)
        throw ConfigError("mode 'adaptive' is spelled by its ablation name (ON, NoV, ...)");
    cfg.rule = rule;
    return cfg;
}

long long max_bigram_run(const std::vector<TokenId>& tokens) {
    long long best = 0;
    int seg_start = 0;
    for (int t = 2; t < static_cast<int>(tokens.size()); ++t) {
        if (tokens[static_cast<size_t>(t)] != tokens[static_cast<size_t>(t - 2)])
            seg_start = t - 1;
        else
            best = std::max<long long>(best, t - seg_start + 1);
    }
    return best;
}

std::vector<ModeResult> run_ablation_suite(const Denoiser& model,
                                           const std::vector<std::vector<TokenId>>& prompts,
                                           int g, const DecodeConfig& base,
                                           const std::vector<std::string>& modes, int threads) {
    if (prompts.empty()) throw GenError("ablation suite needs at least one prompt");
    const int n_modes = static_cast<int>(modes.size());
    const int n_prompts = static_cast<int>(prompts.size());

    std::vector<DecodeConfig> cfgs;
    cfgs.reserve(modes.size());
    for (const std::string& mode : modes) cfgs.push_back(apply_mode(base, mode));

    struct Cell {
        RunMetrics metrics;
        bool exact = false;
        double token_match = -1.0;
        long long bigram_run = 0;
    };
    std::vector<Cell> cells(static_cast<size_t>(n_modes) * n_prompts);
    std::vector<std::string> errors(cells.size());

    const int total = n_modes * n_prompts;
    #pragma omp parallel for schedule(dynamic) num_threads(std::max(1, threads)) if (threads > 1)
    for (int idx = 0; idx < total; ++idx) {
        const int mi = idx / n_prompts;
        const int pi = idx % n_prompts;
        try {
            const DecodeResult r =
                generate(model, prompts[static_cast<size_t>(pi)], g, cfgs[static_cast<size_t>(mi)]);
            Cell& cell = cells[static_cast<size_t>(idx)];
            cell.metrics = r.metrics;
            const std::vector<TokenId> out = r.generated();
            cell.bigram_run = max_bigram_run(out);
            const std::vector<TokenId> ref =
                model.reference_output(prompts[static_cast<size_t>(pi)], g);
            if (!ref.empty()) {
                cell.exact = out == ref;
                int same = 0;
                for (size_t i = 0; i < ref.size(); ++i)
                    if (out[i] == ref[i]) ++same;
                cell.token_match = static_cast<double>(same) / static_cast<double>(ref.size());
            }
        } catch (const std::exception& e) {
            errors[static_cast<size_t>(idx)] = e.what();
        }
    }
    for (const std::string& err : errors)
        if (!err.empty()) throw GenError("ablation run failed: " + err);

    std::vector<ModeResult> out;
    out.reserve(modes.size());
    for (int mi = 0; mi < n_modes; ++mi) {
        ModeResult mr;
        mr.mode = modes[static_cast<size_t>(mi)];
        double sum_nfe = 0.0, sum_cost = 0.0, sum_match = 0.0;
        int exact = 0, with_ref = 0;
        for (int pi = 0; pi < n_prompts; ++pi) {
            const Cell& cell = cells[static_cast<size_t>(mi) * n_prompts + pi];
            mr.per_prompt.push_back(cell.metrics);
            sum_nfe += static_cast<double>(cell.metrics.nfe);
            sum_cost += cell.metrics.simulated_cost;
            mr.max_bigram_run = std::max(mr.max_bigram_run, cell.bigram_run);
            if (cell.token_match >= 0.0) {
                ++with_ref;
                sum_match += cell.token_match;
                if (cell.exact) ++exact;
            }
        }
        mr.mean_nfe = sum_nfe / n_prompts;
        mr.mean_cost = sum_cost / n_prompts;
        mr.tokens_per_second =
            sum_cost > 0.0 ? static_cast<double>(n_prompts) * g / sum_cost : 0.0;
        if (with_ref > 0) {
            mr.accuracy = static_cast<double>(exact) / with_ref;
            mr.token_match = sum_match / with_ref;
        }
        out.push_back(std::move(mr));
    }
    return out;
}

Heatmap record_heatmap(const std::vector<StepTrace>& traces) {
    Heatmap hm;
    if (traces.empty()) {
        hm.empty_input = true;
        return hm;
    }
    for (const StepTrace& tr : traces) {
        if (static_cast<int>(hm.rows.size()) <= tr.block_index)
            hm.rows.resize(static_cast<size_t>(tr.block_index) + 1);
        std::vector<double>& row = hm.rows[static_cast<size_t>(tr.block_index)];
        if (static_cast<int>(row.size()) <= tr.step_index)
            row.resize(static_cast<size_t>(tr.step_index) + 1, 0.0);
        row[static_cast<size_t>(tr.step_index)] = tr.mean_masked_conf;
    }
    return hm;
}

std::string traces_to_csv(const std::vector<StepTrace>& traces, const std::string& cfg_hash_hex) {
    std::ostringstream out;
    out << "# config_hash=" << cfg_hash_hex << "\n";
    out << "block,step,B,S,V,tau,r,mean_conf,positions_processed,cumulative_nfe,committed\n";
    out.precision(12);
    for (const StepTrace& tr : traces) {
        out << tr.block_index << ',' << tr.step_index << ',' << tr.B_t << ',' << tr.S_t << ','
            << tr.V_t << ',' << tr.tau_t << ',' << tr.r_t << ',' << tr.mean_masked_conf << ','
            << tr.positions_processed << ',' << tr.cumulative_nfe << ',';
        for (size_t i = 0; i < tr.committed_positions.size(); ++i) {
            if (i) out << ';';
            out << tr.committed_positions[i];
        }
        out << '\n';
    }
    return out.str();
}

std::string heatmap_to_csv(const Heatmap& hm, const std::string& cfg_hash_hex) {
    std::ostringstream out;
    out << "# config_hash=" << cfg_hash_hex << "\n";
    out << "block,step,mean_conf\n";
    out.precision(12);
    for (size_t b = 0; b < hm.rows.size(); ++b)
        for (size_t s = 0; s < hm.rows[b].size(); ++s)
            out << b << ',' << s << ',' << hm.rows[b][s] << '\n';
    return out.str();
}

}  // namespace mdd
