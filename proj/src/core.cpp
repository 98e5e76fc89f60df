// Core types: config defaults/validation, key=value (de)serialization,
// config hashing, and canvas commit bookkeeping.
#include "mdd/core.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mdd {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

int parse_int(const std::string& key, const std::string& value) {
    const std::string t = trim(value);
    size_t consumed = 0;
    int v = 0;
    try {
        v = std::stoi(t, &consumed);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected integer, got '" + value + "'");
    }
    if (consumed != t.size())
        throw ConfigError("config key '" + key + "': expected integer, got '" + value + "'");
    return v;
}

double parse_double(const std::string& key, const std::string& value) {
    const std::string t = trim(value);
    size_t consumed = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &consumed);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected real, got '" + value + "'");
    }
    if (consumed != t.size())
        throw ConfigError("config key '" + key + "': expected real, got '" + value + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    const std::string t = lower(trim(value));
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw ConfigError("config key '" + key + "': expected boolean, got '" + value + "'");
}

}  // namespace

std::string to_string(ConfidenceMethod m) {
    return m == ConfidenceMethod::softmax ? "softmax" : "entropy";
}

std::string to_string(CacheMode m) {
    switch (m) {
        case CacheMode::none: return "none";
        case CacheMode::prefix: return "prefix";
        default: return "dual";
    }
}

std::string to_string(Ablation a) {
    switch (a) {
        case Ablation::on: return "ON";
        case Ablation::no_v: return "NoV";
        case Ablation::no_s: return "NoS";
        case Ablation::no_b: return "NoB";
        case Ablation::no_tau: return "NoTau";
        default: return "OFF";
    }
}

std::string to_string(CommitRule r) {
    switch (r) {
        case CommitRule::adaptive: return "adaptive";
        case CommitRule::threshold: return "threshold";
        default: return "factor";
    }
}

std::string to_string(ProphetAggregate a) {
    return a == ProphetAggregate::mean ? "mean" : "min";
}

ConfidenceMethod parse_confidence_method(const std::string& s) {
    const std::string t = lower(trim(s));
    if (t == "softmax") return ConfidenceMethod::softmax;
    if (t == "entropy") return ConfidenceMethod::entropy;
    throw ConfigError("unknown confidence method '" + s + "' (softmax|entropy)");
}

CacheMode parse_cache_mode(const std::string& s) {
    const std::string t = lower(trim(s));
    if (t == "none") return CacheMode::none;
    if (t == "prefix") return CacheMode::prefix;
    if (t == "dual") return CacheMode::dual;
    throw ConfigError("unknown cache mode '" + s + "' (none|prefix|dual)");
}

Ablation parse_ablation(const std::string& s) {
    const std::string t = lower(trim(s));
    if (t == "on") return Ablation::on;
    if (t == "nov") return Ablation::no_v;
    if (t == "nos") return Ablation::no_s;
    if (t == "nob") return Ablation::no_b;
    if (t == "notau") return Ablation::no_tau;
    if (t == "off") return Ablation::off;
    throw ConfigError("unknown ablation mode '" + s + "' (ON|NoV|NoS|NoB|NoTau|OFF)");
}

CommitRule parse_commit_rule(const std::string& s) {
    const std::string t = lower(trim(s));
    if (t == "adaptive") return CommitRule::adaptive;
    if (t == "threshold") return CommitRule::threshold;
    if (t == "factor") return CommitRule::factor;
    throw ConfigError("unknown rule '" + s + "' (adaptive|threshold|factor)");
}

ProphetAggregate parse_prophet_aggregate(const std::string& s) {
    const std::string t = lower(trim(s));
    if (t == "mean") return ProphetAggregate::mean;
    if (t == "min") return ProphetAggregate::min;
    throw ConfigError("unknown prophet aggregate '" + s + "' (mean|min)");
}

DecodeConfig default_config() { return DecodeConfig{}; }

void validate(const DecodeConfig& cfg) {
    std::vector<std::string> bad;
    if (cfg.B_min < 1) bad.push_back("B_min >= 1");
    if (!(cfg.B_min <= cfg.B_0 && cfg.B_0 <= cfg.B_max)) bad.push_back("B_min <= B_0 <= B_max");
    if (cfg.S_base < 1) bad.push_back("S_base >= 1");
    if (!(cfg.S_base <= cfg.S_max)) bad.push_back("S_base <= S_max");
    if (cfg.V_min < 1) bad.push_back("V_min >= 1");
    if (!(cfg.V_min <= cfg.V_0 && cfg.V_0 <= cfg.V_max)) bad.push_back("V_min <= V_0 <= V_max");
    if (!(cfg.tau_min > 0.0)) bad.push_back("tau_min > 0");
    if (!(cfg.tau_min <= cfg.tau_0)) bad.push_back("tau_min <= tau_0");
    if (!(cfg.tau_0 <= 1.0)) bad.push_back("tau_0 <= 1");
    if (cfg.window < 1) bad.push_back("window >= 1");
    if (cfg.rep_window < 1) bad.push_back("rep_window >= 1");
    if (cfg.rep_min_len < 1) bad.push_back("rep_min_len >= 1");
    if (!(cfg.factor > 0.0)) bad.push_back("factor > 0");
    if (!(cfg.static_tau > 0.0 && cfg.static_tau <= 1.0)) bad.push_back("0 < static_tau <= 1");
    if (!(cfg.prophet_gap >= 0.0)) bad.push_back("prophet.gap >= 0");
    if (!(cfg.vphase_lo > 0.0)) bad.push_back("vphase.lo > 0");
    if (!(cfg.vphase_lo <= cfg.vphase_hi)) bad.push_back("vphase.lo <= vphase.hi");
    if (!(cfg.fconf_edge_lo >= 0.0 && cfg.fconf_edge_lo <= cfg.fconf_edge_hi &&
          cfg.fconf_edge_hi <= 1.0))
        bad.push_back("0 <= fconf edge lo <= hi <= 1");
    if (cfg.threads < 0) bad.push_back("threads >= 0");
    if (!bad.empty()) {
        std::string msg = "config bounds violated: ";
        for (size_t i = 0; i < bad.size(); ++i) {
            if (i) msg += "; ";
            msg += bad[i];
        }
        throw BoundsError(msg);
    }
}

std::vector<std::pair<std::string, std::string>> parse_kv_lines(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value', got '" + t + "'");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

std::vector<std::string> config_keys() {
    return {"B_0",       "B_min",          "B_max",         "S_base",
            "S_max",     "V_0",            "V_min",         "V_max",
            "tau_0",     "tau_min",        "window",        "rep_window",
            "rep_min_len", "factor",       "static_tau",    "confidence_method",
            "cache_mode", "prophet_enabled", "prophet.gap", "prophet.aggregate",
            "ablation",  "rule",           "vphase.hi",     "vphase.lo",
            "fconf.edges", "threads"};
}

void apply_config_kv(DecodeConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "B_0") cfg.B_0 = parse_int(key, value);
    else if (key == "B_min") cfg.B_min = parse_int(key, value);
    else if (key == "B_max") cfg.B_max = parse_int(key, value);
    else if (key == "S_base") cfg.S_base = parse_int(key, value);
    else if (key == "S_max") cfg.S_max = parse_int(key, value);
    else if (key == "V_0") cfg.V_0 = parse_int(key, value);
    else if (key == "V_min") cfg.V_min = parse_int(key, value);
    else if (key == "V_max") cfg.V_max = parse_int(key, value);
    else if (key == "tau_0") cfg.tau_0 = parse_double(key, value);
    else if (key == "tau_min") cfg.tau_min = parse_double(key, value);
    else if (key == "window") cfg.window = parse_int(key, value);
    else if (key == "rep_window") cfg.rep_window = parse_int(key, value);
    else if (key == "rep_min_len") cfg.rep_min_len = parse_int(key, value);
    else if (key == "factor") cfg.factor = parse_double(key, value);
    else if (key == "static_tau") cfg.static_tau = parse_double(key, value);
    else if (key == "confidence_method") cfg.confidence_method = parse_confidence_method(value);
    else if (key == "cache_mode") cfg.cache_mode = parse_cache_mode(value);
    else if (key == "prophet_enabled") cfg.prophet_enabled = parse_bool(key, value);
    else if (key == "prophet.gap") cfg.prophet_gap = parse_double(key, value);
    else if (key == "prophet.aggregate") cfg.prophet_aggregate = parse_prophet_aggregate(value);
    else if (key == "ablation") cfg.ablation = parse_ablation(value);
    else if (key == "rule") cfg.rule = parse_commit_rule(value);
    else if (key == "vphase.hi") cfg.vphase_hi = parse_double(key, value);
    else if (key == "vphase.lo") cfg.vphase_lo = parse_double(key, value);
    else if (key == "fconf.edges") {
        const size_t comma = value.find(',');
        if (comma == std::string::npos)
            throw ConfigError("config key 'fconf.edges': expected 'lo,hi', got '" + value + "'");
        cfg.fconf_edge_lo = parse_double(key, value.substr(0, comma));
        cfg.fconf_edge_hi = parse_double(key, value.substr(comma + 1));
    } else if (key == "threads") cfg.threads = parse_int(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
}

DecodeConfig parse_config(const std::string& text, const DecodeConfig& base) {
    DecodeConfig cfg = base;
    for (const auto& [key, value] : parse_kv_lines(text)) apply_config_kv(cfg, key, value);
    return cfg;
}

DecodeConfig load_config_file(const std::string& path, const DecodeConfig& base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), base);
}

std::string serialize_config(const DecodeConfig& cfg) {
    std::ostringstream out;
    out << "B_0 = " << cfg.B_0 << "\n";
    out << "B_min = " << cfg.B_min << "\n";
    out << "B_max = " << cfg.B_max << "\n";
    out << "S_base = " << cfg.S_base << "\n";
    out << "S_max = " << cfg.S_max << "\n";
    out << "V_0 = " << cfg.V_0 << "\n";
    out << "V_min = " << cfg.V_min << "\n";
    out << "V_max = " << cfg.V_max << "\n";
    out << "tau_0 = " << fmt_double(cfg.tau_0) << "\n";
    out << "tau_min = " << fmt_double(cfg.tau_min) << "\n";
    out << "window = " << cfg.window << "\n";
    out << "rep_window = " << cfg.rep_window << "\n";
    out << "rep_min_len = " << cfg.rep_min_len << "\n";
    out << "factor = " << fmt_double(cfg.factor) << "\n";
    out << "static_tau = " << fmt_double(cfg.static_tau) << "\n";
    out << "confidence_method = " << to_string(cfg.confidence_method) << "\n";
    out << "cache_mode = " << to_string(cfg.cache_mode) << "\n";
    out << "prophet_enabled = " << (cfg.prophet_enabled ? "true" : "false") << "\n";
    out << "prophet.gap = " << fmt_double(cfg.prophet_gap) << "\n";
    out << "prophet.aggregate = " << to_string(cfg.prophet_aggregate) << "\n";
    out << "ablation = " << to_string(cfg.ablation) << "\n";
    out << "rule = " << to_string(cfg.rule) << "\n";
    out << "vphase.hi = " << fmt_double(cfg.vphase_hi) << "\n";
    out << "vphase.lo = " << fmt_double(cfg.vphase_lo) << "\n";
    out << "fconf.edges = " << fmt_double(cfg.fconf_edge_lo) << "," << fmt_double(cfg.fconf_edge_hi) << "\n";
    out << "threads = " << cfg.threads << "\n";
    return out.str();
}

uint64_t config_hash(const DecodeConfig& cfg) {
    const std::string s = serialize_config(cfg);
    uint64_t h = 1469598103934665603ull;  // FNV-1a 64
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string config_hash_hex(const DecodeConfig& cfg) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "0x%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    return buf;
}

Canvas Canvas::make(const std::vector<TokenId>& prompt, int gen_len) {
    if (gen_len < 0) throw GenError("generation length must be non-negative");
    Canvas c;
    c.tokens = prompt;
    c.tokens.resize(prompt.size() + static_cast<size_t>(gen_len), MASK_TOKEN);
    c.prompt_len = static_cast<int>(prompt.size());
    return c;
}

int Canvas::masked_in(int begin, int end) const {
    int n = 0;
    for (int p = begin; p < end; ++p)
        if (is_masked(p)) ++n;
    return n;
}

void Canvas::commit(int pos, TokenId tok) {
    if (pos < prompt_len || pos >= length())
        throw std::logic_error("commit outside the generation region");
    if (!is_masked(pos))
        throw std::logic_error("position committed twice");
    if (tok == MASK_TOKEN)
        throw std::logic_error("cannot commit the mask placeholder");
    tokens[static_cast<size_t>(pos)] = tok;
}

uint64_t hash_mix(uint64_t seed, uint64_t v) {
    // splitmix64 finalizer over the combined input
    uint64_t z = seed + 0x9e3779b97f4a7c15ull + v * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace mdd
