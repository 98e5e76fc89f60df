// Synthetic oracle implementations and cache cost accounting.
#include "mdd/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace mdd {

namespace {

// Uniform double in [0,1) from a 64-bit hash.
double unit_double(uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

void check_window(const Canvas& canvas, Window w) {
    if (w.begin < canvas.prompt_len || w.end > canvas.length() || w.begin > w.end)
        throw ModelError("active window outside the generation region");
}

}  // namespace

// ---------------------------------------------------------------- scripted

ScriptedOracle::ScriptedOracle(int vocab, std::vector<ScriptedProfile> profiles, uint64_t seed,
                               int region_span)
    : vocab_(vocab), profiles_(std::move(profiles)), seed_(seed), region_span_(region_span) {
    if (vocab_ < 2) throw ModelError("scripted oracle needs vocab_size >= 2");
    if (profiles_.empty()) throw ModelError("scripted oracle needs at least one profile");
    if (region_span_ < 1) throw ModelError("scripted oracle needs region_span >= 1");
    for (const ScriptedProfile& p : profiles_) {
        if (!(p.c_start > 0.0 && p.c_start < 1.0 && p.c_plateau > 0.0 && p.c_plateau < 1.0))
            throw ScheduleError("scripted confidence endpoints must lie in (0,1)");
        if (!(p.kappa > 0.0)) throw ScheduleError("scripted kappa must be positive");
    }
}

std::vector<ScriptedProfile> ScriptedOracle::profiles_from_kv(const std::string& text) {
    std::vector<ScriptedProfile> profiles;
    std::vector<std::array<bool, 3>> seen;  // c_start, c_plateau, kappa per block
    auto at = [&profiles, &seen](size_t b) -> ScriptedProfile& {
        if (profiles.size() <= b) {
            profiles.resize(b + 1);
            seen.resize(b + 1, {false, false, false});
        }
        return profiles[b];
    };
    for (const auto& [key, value] : parse_kv_lines(text)) {
        if (key.rfind("block.", 0) != 0)
            throw ConfigError("profile key '" + key + "' must start with 'block.'");
        const size_t dot = key.find('.', 6);
        if (dot == std::string::npos)
            throw ConfigError("profile key '" + key + "' must look like block.<b>.<field>");
        size_t consumed = 0;
        int b = -1;
        try {
            b = std::stoi(key.substr(6, dot - 6), &consumed);
        } catch (const std::exception&) {
            throw ConfigError("profile key '" + key + "': bad block index");
        }
        if (b < 0 || consumed != dot - 6)
            throw ConfigError("profile key '" + key + "': bad block index");
        const std::string field = key.substr(dot + 1);
        double v = 0.0;
        try {
            size_t used = 0;
            v = std::stod(value, &used);
            if (used != value.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ConfigError("profile key '" + key + "': expected real, got '" + value + "'");
        }
        const size_t bi = static_cast<size_t>(b);
        if (field == "c_start") {
            at(bi).c_start = v;
            seen[bi][0] = true;
        } else if (field == "c_plateau") {
            at(bi).c_plateau = v;
            seen[bi][1] = true;
        } else if (field == "kappa") {
            at(bi).kappa = v;
            seen[bi][2] = true;
        } else {
            throw ConfigError("profile key '" + key + "': unknown field '" + field + "'");
        }
    }
    if (profiles.empty()) throw ConfigError("profile text defines no blocks");
    static const char* kFields[3] = {"c_start", "c_plateau", "kappa"};
    for (size_t b = 0; b < profiles.size(); ++b)
        for (int f = 0; f < 3; ++f)
            if (!seen[b][static_cast<size_t>(f)])
                throw ConfigError("profile block " + std::to_string(b) + " is missing " +
                                  kFields[f]);
    return profiles;
}

double ScriptedOracle::scheduled_confidence(int region, int step_in_block) const {
    const ScriptedProfile& p =
        profiles_[static_cast<size_t>(region) % profiles_.size()];
    const double c =
        p.c_plateau - (p.c_plateau - p.c_start) * std::exp(-static_cast<double>(step_in_block) / p.kappa);
    if (!(c > 0.0 && c < 1.0))
        throw ScheduleError("scheduled confidence " + std::to_string(c) + " outside (0,1)");
    return c;
}

TokenId ScriptedOracle::target_at(int pos, int prompt_len) const {
    (void)prompt_len;
    return static_cast<TokenId>(hash_mix(seed_, static_cast<uint64_t>(pos)) %
                                static_cast<uint64_t>(vocab_));
}

LogitsMatrix ScriptedOracle::logits(const Canvas& canvas, Window window, int step_in_block) const {
    check_window(canvas, window);
    LogitsMatrix m;
    m.vocab = vocab_;
    for (int pos = window.begin; pos < window.end; ++pos)
        if (canvas.is_masked(pos)) m.positions.push_back(pos);
    m.data.assign(static_cast<size_t>(m.rows()) * vocab_, 0.0);
    for (int r = 0; r < m.rows(); ++r) {
        const int pos = m.positions[static_cast<size_t>(r)];
        const int region = (pos - canvas.prompt_len) / region_span_;
        const double c = scheduled_confidence(region, step_in_block);
        // Two-level row: the target sits delta above a flat zero baseline so
        // the full-vocabulary softmax gives it probability exactly c.
        const double delta = std::log(c * (vocab_ - 1) / (1.0 - c));
        m.row(r)[target_at(pos, canvas.prompt_len)] = delta;
    }
    return m;
}

std::vector<TokenId> ScriptedOracle::reference_output(const std::vector<TokenId>& prompt,
                                                      int g) const {
    std::vector<TokenId> out(static_cast<size_t>(g));
    for (int j = 0; j < g; ++j)
        out[static_cast<size_t>(j)] = target_at(static_cast<int>(prompt.size()) + j,
                                                static_cast<int>(prompt.size()));
    return out;
}

// ------------------------------------------------------------------ markov

MarkovToyModel::MarkovToyModel(uint64_t seed, int vocab, double gap) : vocab_(vocab), gap_(gap) {
    if (vocab_ < 2) throw ModelError("markov oracle needs vocab_size >= 2");
    table_.resize(static_cast<size_t>(vocab_) * vocab_);
    succ_.resize(static_cast<size_t>(vocab_));
    runner_up_.resize(static_cast<size_t>(vocab_));
    for (int t = 0; t < vocab_; ++t) {
        double* row = table_.data() + static_cast<size_t>(t) * vocab_;
        for (int w = 0; w < vocab_; ++w)
            row[w] = unit_double(hash_mix(seed, static_cast<uint64_t>(t) * vocab_ + w));
        int best = 0;
        for (int w = 1; w < vocab_; ++w)
            if (row[w] > row[best]) best = w;
        succ_[static_cast<size_t>(t)] = best;
        double second = 0.0;
        for (int w = 0; w < vocab_; ++w)
            if (w != best) second = std::max(second, row[w]);
        runner_up_[static_cast<size_t>(t)] = second;
    }
}

TokenId MarkovToyModel::successor(TokenId t) const {
    if (t < 0 || t >= vocab_) throw ModelError("markov token outside vocabulary");
    return succ_[static_cast<size_t>(t)];
}

LogitsMatrix MarkovToyModel::logits(const Canvas& canvas, Window window, int step_in_block) const {
    (void)step_in_block;
    check_window(canvas, window);
    LogitsMatrix m;
    m.vocab = vocab_;
    for (int pos = window.begin; pos < window.end; ++pos)
        if (canvas.is_masked(pos)) m.positions.push_back(pos);
    m.data.resize(static_cast<size_t>(m.rows()) * vocab_);
    for (int r = 0; r < m.rows(); ++r) {
        const int pos = m.positions[static_cast<size_t>(r)];
        int j = pos - 1;
        while (j >= 0 && canvas.is_masked(j)) --j;
        if (j < 0) throw ModelError("markov oracle requires a non-empty prompt");
        // Extrapolate the greedy chain from the nearest committed token: the
        // emitted row is the chain predecessor's score row with the true
        // successor raised `gap` above the runner-up.
        TokenId v = canvas.tokens[static_cast<size_t>(j)];
        if (v < 0 || v >= vocab_) throw ModelError("markov canvas token outside vocabulary");
        for (int step = 0; step < pos - j - 1; ++step) v = succ_[static_cast<size_t>(v)];
        const double* src = table_.data() + static_cast<size_t>(v) * vocab_;
        double* dst = m.row(r);
        std::copy(src, src + vocab_, dst);
        dst[succ_[static_cast<size_t>(v)]] = runner_up_[static_cast<size_t>(v)] + gap_;
    }
    return m;
}

std::vector<TokenId> MarkovToyModel::reference_output(const std::vector<TokenId>& prompt,
                                                      int g) const {
    if (prompt.empty()) throw ModelError("markov oracle requires a non-empty prompt");
    std::vector<TokenId> out;
    out.reserve(static_cast<size_t>(g));
    TokenId t = prompt.back();
    for (int j = 0; j < g; ++j) {
        t = successor(t);
        out.push_back(t);
    }
    return out;
}

// -------------------------------------------------------------- degenerate

DegenerateLoopOracle::DegenerateLoopOracle(LoopOracleParams params) : params_(params) {
    const LoopOracleParams& p = params_;
    if (p.vocab < p.content_ballast + 16 || p.vocab < p.loop_ballast + 16)
        throw ModelError("loop oracle vocabulary too small for its ballast");
    if (p.token_a == p.token_b || p.token_a < 0 || p.token_b < 0 ||
        p.token_a >= p.vocab - p.content_ballast || p.token_b >= p.vocab - p.content_ballast)
        throw ModelError("loop tokens must be distinct and outside the ballast range");
    for (double c : {p.loop_confidence, p.echo_sub_base, p.seed_sub_conf,
                     p.content_full_unresolved, p.content_full_resolved})
        if (!(c > 0.0 && c < 1.0)) throw ModelError("loop oracle confidences must lie in (0,1)");
}

TokenId DegenerateLoopOracle::content_target(int pos) const {
    // Draw from the id range below the ballast block, skipping the loop pair.
    const int span = params_.vocab - params_.content_ballast - 2;
    TokenId id = static_cast<TokenId>(hash_mix(params_.seed, static_cast<uint64_t>(pos)) %
                                      static_cast<uint64_t>(span));
    const TokenId lo = std::min(params_.token_a, params_.token_b);
    const TokenId hi = std::max(params_.token_a, params_.token_b);
    if (id >= lo) ++id;
    if (id >= hi) ++id;
    return id;
}

// Three-level row: target at A, `ballast` near-ties at 0, everything else at
// tail_logit. target_exp = e^A is chosen by the caller to realize the wanted
// confidence exactly.
void DegenerateLoopOracle::fill_row(double* row, TokenId target, double target_exp,
                                    int ballast) const {
    const int vocab = params_.vocab;
    std::fill(row, row + vocab, params_.tail_logit);
    for (int id = vocab - ballast; id < vocab; ++id) row[id] = 0.0;
    row[target] = std::log(target_exp);
}

LogitsMatrix DegenerateLoopOracle::logits(const Canvas& canvas, Window window,
                                          int step_in_block) const {
    check_window(canvas, window);
    const LoopOracleParams& p = params_;
    LogitsMatrix m;
    m.vocab = p.vocab;
    for (int pos = window.begin; pos < window.end; ++pos)
        if (canvas.is_masked(pos)) m.positions.push_back(pos);
    m.data.resize(static_cast<size_t>(m.rows()) * p.vocab);

    const double tail = std::exp(p.tail_logit);
    const auto z_full = [&](int ballast) {
        return static_cast<double>(ballast) + (p.vocab - 1 - ballast) * tail;
    };
    // e^A realizing narrow-set confidence c over the loop ballast alone.
    const auto exp_for_sub = [&](double c_sub) {
        return c_sub / (1.0 - c_sub) * static_cast<double>(p.loop_ballast);
    };
    // e^A realizing full-vocabulary confidence c over the whole row.
    const auto exp_for_full = [&](double c_full, int ballast) {
        return c_full / (1.0 - c_full) * z_full(ballast);
    };

    for (int r = 0; r < m.rows(); ++r) {
        const int pos = m.positions[static_cast<size_t>(r)];
        double* row = m.row(r);
        const bool has_prev = pos > 0 && !canvas.is_masked(pos - 1);
        const TokenId prev = has_prev ? canvas.tokens[static_cast<size_t>(pos - 1)] : MASK_TOKEN;
        if (has_prev && (prev == p.token_a || prev == p.token_b)) {
            // Echo: continue the loop; certainty grows with the run it extends.
            const TokenId u = prev == p.token_a ? p.token_b : p.token_a;
            int run = 0;
            for (int q = pos - 1; q >= 0 && run < 64; --q) {
                const TokenId t = canvas.tokens[static_cast<size_t>(q)];
                if (t != p.token_a && t != p.token_b) break;
                ++run;
            }
            const double c_sub =
                std::min(p.echo_sub_base + p.echo_sub_ramp * run, p.loop_confidence);
            fill_row(row, u, exp_for_sub(c_sub), p.loop_ballast);
        } else if (has_prev && step_in_block == 0) {
            // Fresh block behind committed context: tempt a loop seed.
            fill_row(row, p.token_a, exp_for_sub(p.seed_sub_conf), p.loop_ballast);
        } else {
            const double c_full = step_in_block >= p.resolve_step ? p.content_full_resolved
                                                                  : p.content_full_unresolved;
            fill_row(row, content_target(pos), exp_for_full(c_full, p.content_ballast),
                     p.content_ballast);
        }
    }
    return m;
}

std::vector<TokenId> DegenerateLoopOracle::reference_output(const std::vector<TokenId>& prompt,
                                                            int g) const {
    std::vector<TokenId> out(static_cast<size_t>(g));
    for (int j = 0; j < g; ++j)
        out[static_cast<size_t>(j)] = content_target(static_cast<int>(prompt.size()) + j);
    return out;
}

// ------------------------------------------------------------------- cache

double call_cost(CacheMode mode, int canvas_len, Window window, bool block_entry) {
    switch (mode) {
        case CacheMode::none:
            return canvas_len;
        case CacheMode::prefix:
            return window.len() + (canvas_len - window.end);
        default:
            return window.len() + (block_entry ? canvas_len : 0);
    }
}

}  // namespace mdd
