// Shared domain types: token canvas, decode configuration, per-pass traces,
// run metrics, and the flat key=value config format used by files and flags.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mdd {

using TokenId = int32_t;

// Placeholder for not-yet-committed positions. Outside every vocabulary and
// never present in finished output.
constexpr TokenId MASK_TOKEN = -1;

// Configuration bound violations; the message lists every violated bound.
struct BoundsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Config file / key-value problems: unknown key, malformed value, bad file.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Denoiser-side failures (e.g. an oracle that needs a non-empty prompt).
struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Scripted confidence schedule escaping (0,1).
struct ScheduleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad generation arguments (g < 1).
struct GenError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Candidate-count out of [1, vocab_size].
struct RangeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ConfidenceMethod { softmax, entropy };
enum class CacheMode { none, prefix, dual };
enum class Ablation { on, no_v, no_s, no_b, no_tau, off };
enum class CommitRule { adaptive, threshold, factor };
enum class ProphetAggregate { mean, min };

std::string to_string(ConfidenceMethod m);
std::string to_string(CacheMode m);
std::string to_string(Ablation a);
std::string to_string(CommitRule r);
std::string to_string(ProphetAggregate a);

ConfidenceMethod parse_confidence_method(const std::string& s);
CacheMode parse_cache_mode(const std::string& s);
Ablation parse_ablation(const std::string& s);
CommitRule parse_commit_rule(const std::string& s);
ProphetAggregate parse_prophet_aggregate(const std::string& s);

// Every controller knob. Integer-valued quantities are counts; policy formulas
// produce reals that are rounded to nearest and clipped before use.
struct DecodeConfig {
    int B_0 = 24;  // first-block size and the static-mode block size
    int B_min = 4;
    int B_max = 64;
    int S_base = 24;  // first-block and minimum inner-step budget
    int S_max = 90;
    int V_0 = 100;  // anchor for the progress-phased candidate-set size
    int V_min = 35;
    int V_max = 1000;
    double tau_0 = 0.85;    // commit threshold at progress 0
    double tau_min = 0.40;  // commit threshold at progress 1
    int window = 5;         // sliding-mean width over per-pass confidences
    int rep_window = 8;     // ring of recent commits scanned for repetition
    int rep_min_len = 2;    // shortest n-gram the repetition detector counts
    double factor = 1.0;      // parallelism factor for rule=factor
    double static_tau = 0.9;  // fixed threshold for rule=threshold
    ConfidenceMethod confidence_method = ConfidenceMethod::softmax;
    CacheMode cache_mode = CacheMode::dual;
    bool prophet_enabled = false;
    double prophet_gap = 0.5;  // top1-top2 gap that triggers an all-at-once commit
    ProphetAggregate prophet_aggregate = ProphetAggregate::mean;
    Ablation ablation = Ablation::on;
    CommitRule rule = CommitRule::adaptive;
    double vphase_hi = 2.0;  // candidate-phase multiplier at progress 0
    double vphase_lo = 0.5;  // candidate-phase multiplier at progress 1
    double fconf_edge_lo = 0.5;   // below: confidence factor 1.5
    double fconf_edge_hi = 0.75;  // at or above: confidence factor 0.8
    int threads = 1;  // scoring-kernel row parallelism; 1 = serial reference

    bool operator==(const DecodeConfig&) const = default;
};

DecodeConfig default_config();

// Throws BoundsError listing every violated bound; returns normally otherwise.
void validate(const DecodeConfig& cfg);

// Flat config format: one `key = value` per line, `#` starts a comment,
// blank lines ignored. Unknown keys and unparsable values raise ConfigError.
std::vector<std::pair<std::string, std::string>> parse_kv_lines(const std::string& text);
void apply_config_kv(DecodeConfig& cfg, const std::string& key, const std::string& value);
DecodeConfig parse_config(const std::string& text, const DecodeConfig& base);
DecodeConfig load_config_file(const std::string& path, const DecodeConfig& base);
std::string serialize_config(const DecodeConfig& cfg);
std::vector<std::string> config_keys();

// FNV-1a over the canonical serialized form; stamped on every output file.
uint64_t config_hash(const DecodeConfig& cfg);
std::string config_hash_hex(const DecodeConfig& cfg);

// The working token sequence: immutable prompt prefix plus a generation
// region whose positions flip masked -> committed exactly once.
struct Canvas {
    std::vector<TokenId> tokens;
    int prompt_len = 0;

    static Canvas make(const std::vector<TokenId>& prompt, int gen_len);

    int length() const { return static_cast<int>(tokens.size()); }
    int gen_len() const { return length() - prompt_len; }
    bool is_masked(int pos) const { return tokens[static_cast<size_t>(pos)] == MASK_TOKEN; }
    int masked_in(int begin, int end) const;

    // Commits one position; rewriting a committed or prompt position is a
    // logic error (commit-monotone decoding).
    void commit(int pos, TokenId tok);
};

// Active block of generation positions [begin, end).
struct Window {
    int begin = 0;
    int end = 0;
    int len() const { return end - begin; }
};

// Dense logit rows for the masked positions of one denoiser call.
struct LogitsMatrix {
    int vocab = 0;
    std::vector<int> positions;  // canvas position of each row
    std::vector<double> data;    // row-major, rows() x vocab

    int rows() const { return static_cast<int>(positions.size()); }
    double* row(int r) { return data.data() + static_cast<size_t>(r) * vocab; }
    const double* row(int r) const { return data.data() + static_cast<size_t>(r) * vocab; }
};

// One record per denoiser forward pass.
struct StepTrace {
    int block_index = 0;
    int step_index = 0;  // inner pass within the block, 0-based
    int B_t = 0;
    int S_t = 0;
    int V_t = 0;  // effective candidate-set size used this block
    double tau_t = 0.0;
    double r_t = 0.0;  // repetition score at block entry
    double mean_masked_conf = 0.0;
    std::vector<int> committed_positions;
    long long positions_processed = 0;  // cache-dependent cost of this call
    long long cumulative_nfe = 0;
};

struct RunMetrics {
    long long nfe = 0;
    long long tokens_committed = 0;
    double simulated_cost = 0.0;  // position-weighted work units
    double wall_time = 0.0;       // seconds; measurement only, not decode state
    double tokens_per_second = 0.0;  // tokens_committed / simulated_cost
};

// Deterministic 64-bit mix used for seeded derivations (targets, prompts).
uint64_t hash_mix(uint64_t seed, uint64_t v);

}  // namespace mdd
