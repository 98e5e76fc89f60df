// Workload registry, report construction/formatting, softmax latency bench,
// and the CLI front end.
#include "mdd/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif
#ifdef __unix__
#include <sys/utsname.h>
#endif

#include "CLI11.hpp"
#include "json.hpp"

using ordered_json = nlohmann::ordered_json;

namespace mdd {

namespace {

constexpr const char* kReportNote =
    "throughput is simulated (tokens per position-weighted work unit); tps_norm is "
    "relative to the OFF row at equal workload and g when present, otherwise raw; "
    "improvement is relative to the threshold baseline row; no wall-clock mapping is implied";

std::string fmt(double v, const char* spec = "%.10g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, ','))
        if (!cur.empty()) out.push_back(cur);
    return out;
}

std::string iso_timestamp() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string host_description() {
#ifdef __unix__
    utsname u{};
    if (uname(&u) == 0)
        return std::string(u.sysname) + " " + u.release + " " + u.machine;
#endif
    return "unknown";
}

int auto_threads(int requested) {
    if (requested > 0) return requested;
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace

// --------------------------------------------------------------- workloads

std::vector<std::string> registry_names() {
    return {"scripted:easy", "scripted:mixed", "markov:seed7", "degenerate:loop"};
}

Workload make_workload(const std::string& name, uint64_t seed, int n_prompts, int prompt_len) {
    if (n_prompts < 1 || prompt_len < 1)
        throw GenError("workload needs at least one prompt of length >= 1");
    const size_t colon = name.find(':');
    const std::string kind = name.substr(0, colon == std::string::npos ? name.size() : colon);
    const std::string arg = colon == std::string::npos ? "" : name.substr(colon + 1);

    Workload wl;
    wl.id = name;
    const int span = 24;
    if (kind == "scripted") {
        std::vector<ScriptedProfile> profiles;
        if (arg == "easy") {
            profiles = {{0.60, 0.99, 1.5}};
        } else if (arg == "mixed") {
            profiles = {{0.75, 0.99, 1.2}, {0.55, 0.93, 3.0}, {0.35, 0.88, 5.0}, {0.22, 0.80, 6.5}};
        } else if (!arg.empty()) {
            std::ifstream in(arg);
            if (!in) throw ConfigError("cannot open profile file '" + arg + "'");
            std::ostringstream ss;
            ss << in.rdbuf();
            profiles = ScriptedOracle::profiles_from_kv(ss.str());
        } else {
            throw ConfigError("scripted workload needs a variant: scripted:easy, scripted:mixed, "
                              "or scripted:<profile-file>");
        }
        wl.model = std::make_shared<ScriptedOracle>(256, std::move(profiles),
                                                    hash_mix(seed, 0xED1u), span);
    } else if (kind == "markov") {
        if (arg.rfind("seed", 0) != 0)
            throw ConfigError("markov workload is named markov:seed<N>");
        uint64_t model_seed = 0;
        try {
            model_seed = std::stoull(arg.substr(4));
        } catch (const std::exception&) {
            throw ConfigError("markov workload is named markov:seed<N>");
        }
        wl.model = std::make_shared<MarkovToyModel>(model_seed);
    } else if (kind == "degenerate") {
        if (arg != "loop")
            throw ConfigError("unknown degenerate workload '" + name + "' (degenerate:loop)");
        LoopOracleParams params;
        params.seed = hash_mix(seed, 0x100bu);
        wl.model = std::make_shared<DegenerateLoopOracle>(params);
    } else {
        throw ConfigError("unknown workload '" + name + "'");
    }

    const int vocab = wl.model->vocab_size();
    wl.prompts.resize(static_cast<size_t>(n_prompts));
    for (int pi = 0; pi < n_prompts; ++pi) {
        std::vector<TokenId>& p = wl.prompts[static_cast<size_t>(pi)];
        p.resize(static_cast<size_t>(prompt_len));
        for (int j = 0; j < prompt_len; ++j) {
            const uint64_t h =
                hash_mix(seed, (static_cast<uint64_t>(pi) << 32) ^ static_cast<uint64_t>(j));
            if (kind == "degenerate") {
                // Keep prompts in the content range so loops start only from
                // the oracle's own seeds.
                const auto* oracle = static_cast<const DegenerateLoopOracle*>(wl.model.get());
                const LoopOracleParams& lp = oracle->params();
                TokenId id = static_cast<TokenId>(
                    h % static_cast<uint64_t>(lp.vocab - lp.content_ballast - 2));
                const TokenId lo = std::min(lp.token_a, lp.token_b);
                const TokenId hi = std::max(lp.token_a, lp.token_b);
                if (id >= lo) ++id;
                if (id >= hi) ++id;
                p[static_cast<size_t>(j)] = id;
            } else {
                p[static_cast<size_t>(j)] = static_cast<TokenId>(h % static_cast<uint64_t>(vocab));
            }
        }
    }
    return wl;
}

// ----------------------------------------------------------------- reports

namespace {

void normalize_rows(std::vector<BenchRow>& rows) {
    for (BenchRow& row : rows) {
        row.tps_norm = row.tokens_per_second;
        row.improvement = -1.0;
        for (const BenchRow& base : rows) {
            if (base.workload != row.workload || base.g != row.g) continue;
            if (base.mode == "OFF" && base.tokens_per_second > 0.0)
                row.tps_norm = row.tokens_per_second / base.tokens_per_second;
            if (base.mode == "threshold" && base.tokens_per_second > 0.0)
                row.improvement = row.tokens_per_second / base.tokens_per_second;
        }
    }
}

BenchRow row_from_mode(const Workload& wl, const ModeResult& mr, const std::string& cache,
                       int g) {
    BenchRow row;
    row.workload = wl.id;
    row.mode = mr.mode;
    row.cache = cache;
    row.g = g;
    row.mean_nfe = mr.mean_nfe;
    row.mean_cost = mr.mean_cost;
    row.tokens_per_second = mr.tokens_per_second;
    row.accuracy = mr.accuracy;
    row.token_match = mr.token_match;
    row.max_bigram_run = mr.max_bigram_run;
    return row;
}

}  // namespace

BenchReport ablate_report(const Workload& wl, int g, const DecodeConfig& cfg,
                          const std::vector<std::string>& modes, int threads, uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    BenchReport rep;
    rep.report = "ablate";
    rep.cfg_hash_hex = config_hash_hex(cfg);
    rep.workload = wl.id;
    rep.g_list = {g};
    rep.prompts = static_cast<int>(wl.prompts.size());
    rep.seed = seed;
    rep.note = kReportNote;
    for (const ModeResult& mr : run_ablation_suite(*wl.model, wl.prompts, g, cfg, modes, threads))
        rep.rows.push_back(row_from_mode(wl, mr, to_string(cfg.cache_mode), g));
    normalize_rows(rep.rows);
    rep.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.timestamp = iso_timestamp();
    rep.host = host_description();
    return rep;
}

BenchReport cache_report(const Workload& wl, const std::vector<int>& g_list,
                         const DecodeConfig& cfg, int threads, uint64_t seed) {
    if (g_list.empty()) throw GenError("cache-bench needs at least one generation length");
    const auto t0 = std::chrono::steady_clock::now();
    BenchReport rep;
    rep.report = "cache-bench";
    rep.cfg_hash_hex = config_hash_hex(cfg);
    rep.workload = wl.id;
    rep.g_list = g_list;
    rep.prompts = static_cast<int>(wl.prompts.size());
    rep.seed = seed;
    rep.note = kReportNote;
    const std::string mode_label =
        cfg.rule == CommitRule::adaptive ? to_string(cfg.ablation) : to_string(cfg.rule);
    for (int g : g_list) {
        for (CacheMode cm : {CacheMode::none, CacheMode::prefix, CacheMode::dual}) {
            DecodeConfig c2 = cfg;
            c2.cache_mode = cm;
            const ModeResult mr =
                run_ablation_suite(*wl.model, wl.prompts, g, c2, {mode_label}, threads)[0];
            rep.rows.push_back(row_from_mode(wl, mr, to_string(cm), g));
        }
    }
    normalize_rows(rep.rows);
    rep.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.timestamp = iso_timestamp();
    rep.host = host_description();
    return rep;
}

namespace {

ordered_json row_json(const BenchRow& r) {
    ordered_json j;
    j["workload"] = r.workload;
    j["mode"] = r.mode;
    j["cache"] = r.cache;
    j["g"] = r.g;
    j["mean_nfe"] = r.mean_nfe;
    j["mean_cost"] = r.mean_cost;
    j["tokens_per_second"] = r.tokens_per_second;
    j["tps_norm"] = r.tps_norm;
    if (r.improvement >= 0.0) j["improvement"] = r.improvement;
    else j["improvement"] = nullptr;
    if (r.accuracy >= 0.0) j["accuracy"] = r.accuracy;
    else j["accuracy"] = nullptr;
    if (r.token_match >= 0.0) j["token_match"] = r.token_match;
    else j["token_match"] = nullptr;
    j["max_bigram_run"] = r.max_bigram_run;
    return j;
}

ordered_json report_body(const BenchReport& rep) {
    ordered_json j;
    j["tool"] = "mdd";
    j["report"] = rep.report;
    j["config_hash"] = rep.cfg_hash_hex;
    j["workload"] = rep.workload;
    j["g"] = rep.g_list;
    j["prompts"] = rep.prompts;
    j["seed"] = rep.seed;
    j["note"] = rep.note;
    j["rows"] = ordered_json::array();
    for (const BenchRow& r : rep.rows) j["rows"].push_back(row_json(r));
    return j;
}

}  // namespace

std::string BenchReport::body_json() const { return report_body(*this).dump(2) + "\n"; }

std::string BenchReport::to_json() const {
    ordered_json j = report_body(*this);
    j["environment"] = {{"timestamp", timestamp}, {"host", host}, {"wall_s", wall_s}};
    return j.dump(2) + "\n";
}

std::string BenchReport::to_csv() const {
    std::ostringstream out;
    out << "# config_hash=" << cfg_hash_hex << "\n";
    out << "# report=" << report << " workload=" << workload << " prompts=" << prompts
        << " seed=" << seed << "\n";
    out << "# note: " << note << "\n";
    out << "workload,mode,cache,g,mean_nfe,mean_cost,tokens_per_second,tps_norm,improvement,"
           "accuracy,token_match,max_bigram_run\n";
    for (const BenchRow& r : rows) {
        out << r.workload << ',' << r.mode << ',' << r.cache << ',' << r.g << ','
            << fmt(r.mean_nfe) << ',' << fmt(r.mean_cost) << ',' << fmt(r.tokens_per_second)
            << ',' << fmt(r.tps_norm) << ',' << (r.improvement >= 0.0 ? fmt(r.improvement) : "")
            << ',' << (r.accuracy >= 0.0 ? fmt(r.accuracy) : "") << ','
            << (r.token_match >= 0.0 ? fmt(r.token_match) : "") << ',' << r.max_bigram_run
            << '\n';
    }
    return out.str();
}

std::string BenchReport::to_table() const {
    std::ostringstream out;
    out << "# " << report << " workload=" << workload << " prompts=" << prompts
        << " seed=" << seed << " config_hash=" << cfg_hash_hex << "\n";
    out << "# " << note << "\n";
    char line[256];
    std::snprintf(line, sizeof(line), "%-10s %-7s %5s %10s %12s %10s %8s %8s %7s %7s %6s\n",
                  "mode", "cache", "g", "mean_nfe", "mean_cost", "tok/s", "norm", "improv",
                  "acc", "match", "run");
    out << line;
    for (const BenchRow& r : rows) {
        std::snprintf(line, sizeof(line),
                      "%-10s %-7s %5d %10.1f %12.1f %10.6f %8.3f %8s %7s %7s %6lld\n",
                      r.mode.c_str(), r.cache.c_str(), r.g, r.mean_nfe, r.mean_cost,
                      r.tokens_per_second, r.tps_norm,
                      r.improvement >= 0.0 ? fmt(r.improvement, "%.3f").c_str() : "-",
                      r.accuracy >= 0.0 ? fmt(r.accuracy, "%.3f").c_str() : "-",
                      r.token_match >= 0.0 ? fmt(r.token_match, "%.3f").c_str() : "-",
                      r.max_bigram_run);
        out << line;
    }
    return out.str();
}

// ----------------------------------------------------------- softmax bench

std::vector<SoftmaxBenchRow> softmax_bench(const std::vector<int>& sizes, int rows, int repeats,
                                           int width, uint64_t seed) {
    if (sizes.empty()) throw GenError("softmax-bench needs at least one size");
    if (rows < 1) throw GenError("softmax-bench needs rows >= 1");
    if (repeats < 3) throw GenError("softmax-bench needs repeats >= 3");
    if (width < 2) throw GenError("softmax-bench needs width >= 2");
    for (int k : sizes)
        if (k < 1 || k > width)
            throw RangeError("bench size " + std::to_string(k) + " outside [1, " +
                             std::to_string(width) + "]");

    std::vector<double> data(static_cast<size_t>(rows) * width);
    for (size_t i = 0; i < data.size(); ++i)
        data[i] = 8.0 * static_cast<double>(hash_mix(seed, i) >> 11) * 0x1.0p-53;

    volatile double sink = 0.0;
    const auto run_once = [&](int k) {
        const auto t0 = std::chrono::steady_clock::now();
        for (int r = 0; r < rows; ++r) {
            const double* row = data.data() + static_cast<size_t>(r) * width;
            const std::vector<TokenId> cand = top_k_candidates(row, width, k);
            const std::vector<double> probs = subset_softmax(row, cand);
            sink = sink + probs[0];
        }
        const auto t1 = std::chrono::steady_clock::now();
        return std::chrono::duration<double, std::micro>(t1 - t0).count() / rows;
    };

    for (int k : sizes) run_once(k);  // warmup, untimed

    std::vector<std::vector<double>> samples(sizes.size());
    for (int rep = 0; rep < repeats; ++rep)  // sizes round-robin inside each
        for (size_t si = 0; si < sizes.size(); ++si)
            samples[si].push_back(run_once(sizes[si]));

    std::vector<SoftmaxBenchRow> out;
    for (size_t si = 0; si < sizes.size(); ++si) {
        std::vector<double>& s = samples[si];
        std::sort(s.begin(), s.end());
        const size_t n = s.size();
        const double median = n % 2 ? s[n / 2] : 0.5 * (s[n / 2 - 1] + s[n / 2]);
        out.push_back({sizes[si], median});
    }
    return out;
}

// --------------------------------------------------------------------- CLI

namespace {

uint64_t resolve_seed(long long flag_seed) {
    if (flag_seed >= 0) return static_cast<uint64_t>(flag_seed);
    if (const char* env = std::getenv("DLDECODE_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw ConfigError("DLDECODE_SEED is not a non-negative integer");
        }
    }
    return 0;
}

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
    std::filesystem::create_directories(dir);
    const std::string path = dir + "/" + name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw GenError("cannot write '" + path + "'");
    out << content;
}

std::vector<int> parse_int_csv(const std::string& s, const char* what) {
    std::vector<int> out;
    for (const std::string& tok : split_csv(s)) {
        try {
            size_t used = 0;
            out.push_back(std::stoi(tok, &used));
            if (used != tok.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw ConfigError(std::string(what) + ": bad integer '" + tok + "'");
        }
    }
    return out;
}

struct CliOptions {
    std::string config_path;
    std::string oracle = "scripted:mixed";
    std::string out_dir = ".";
    std::string format = "table";
    std::string modes_csv = "ON,NoV,NoS,NoB,NoTau,OFF,threshold";
    std::string g_csv = "256,512";
    std::string sizes_csv = "35,100,1000,10000,50000";
    int g = 256;
    long long seed = -1;
    int prompts = 8;
    int prompt_len = 16;
    int threads = 0;  // 0 = all available for suite dispatch
    int bench_rows = 64;
    int bench_repeats = 15;
    int bench_width = 50000;
    std::vector<std::pair<std::string, std::string>> overrides;  // applied in order
    std::vector<std::string> sets;
};

void add_common_flags(CLI::App* sub, CliOptions& o) {
    sub->add_option("--config", o.config_path, "config file: one key = value per line");
    sub->add_option("--seed", o.seed, "run seed (default: DLDECODE_SEED env, else 0)");
    sub->add_option("--out", o.out_dir, "directory for report files")->capture_default_str();
    sub->add_option("--format", o.format, "stdout format")
        ->check(CLI::IsMember({"table", "json", "csv"}))
        ->capture_default_str();
    sub->add_option_function<std::string>(
        "--set",
        [&o](const std::string& kv) {
            const size_t eq = kv.find('=');
            if (eq == std::string::npos)
                throw CLI::ValidationError("--set expects key=value, got '" + kv + "'");
            o.sets.push_back(kv);
        },
        "config override key=value (repeatable, applied last)");
    for (const std::string& key : config_keys()) {
        if (sub->get_option_no_throw("--" + key) != nullptr)
            continue;  // a subcommand flag (e.g. ablate's --threads) takes the name
        sub->add_option_function<std::string>(
            "--" + key,
            [&o, key](const std::string& v) { o.overrides.emplace_back(key, v); },
            "config key override");
    }
    // Contract-mandated aliases for the most common knobs.
    sub->add_option_function<std::string>(
        "--cache", [&o](const std::string& v) { o.overrides.emplace_back("cache_mode", v); },
        "cache mode: none|prefix|dual");
    sub->add_option_function<std::string>(
        "--prophet",
        [&o](const std::string& v) { o.overrides.emplace_back("prophet_enabled", v); },
        "enable the early all-at-once commit: true|false");
    sub->add_option_function<std::string>(
        "--conf-method",
        [&o](const std::string& v) { o.overrides.emplace_back("confidence_method", v); },
        "confidence method: softmax|entropy");
}

DecodeConfig build_config(const CliOptions& o) {
    DecodeConfig cfg = default_config();
    if (!o.config_path.empty()) cfg = load_config_file(o.config_path, cfg);
    for (const auto& [key, value] : o.overrides) apply_config_kv(cfg, key, value);
    for (const std::string& kv : o.sets) {
        const size_t eq = kv.find('=');
        apply_config_kv(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    validate(cfg);
    return cfg;
}

void emit_report(const BenchReport& rep, const CliOptions& o, const std::string& stem) {
    if (o.format == "json") std::fputs(rep.to_json().c_str(), stdout);
    else if (o.format == "csv") std::fputs(rep.to_csv().c_str(), stdout);
    else std::fputs(rep.to_table().c_str(), stdout);
    if (!o.out_dir.empty()) {
        write_file(o.out_dir, stem + ".json", rep.to_json());
        write_file(o.out_dir, stem + ".csv", rep.to_csv());
    }
}

int run_decode(const CliOptions& o, const DecodeConfig& cfg, uint64_t seed) {
    const Workload wl = make_workload(o.oracle, seed, 1, o.prompt_len);
    const DecodeResult r = generate(*wl.model, wl.prompts[0], o.g, cfg);
    const std::string hash = config_hash_hex(cfg);

    ordered_json j;
    j["tool"] = "mdd";
    j["report"] = "decode";
    j["config_hash"] = hash;
    j["workload"] = wl.id;
    j["g"] = o.g;
    j["seed"] = seed;
    j["prompt"] = wl.prompts[0];
    j["output"] = r.generated();
    j["metrics"] = {{"nfe", r.metrics.nfe},
                    {"tokens_committed", r.metrics.tokens_committed},
                    {"simulated_cost", r.metrics.simulated_cost},
                    {"tokens_per_second", r.metrics.tokens_per_second}};
    const std::string body = j.dump(2) + "\n";
    j["environment"] = {{"timestamp", iso_timestamp()},
                        {"host", host_description()},
                        {"wall_s", r.metrics.wall_time}};

    if (o.format == "json") std::fputs(body.c_str(), stdout);
    else
        std::printf("# decode workload=%s g=%d seed=%llu config_hash=%s\n"
                    "nfe=%lld cost=%.1f tok/s(simulated)=%.6f traces=%zu\n",
                    wl.id.c_str(), o.g, static_cast<unsigned long long>(seed), hash.c_str(),
                    r.metrics.nfe, r.metrics.simulated_cost, r.metrics.tokens_per_second,
                    r.traces.size());
    if (!o.out_dir.empty()) {
        write_file(o.out_dir, "result.json", j.dump(2) + "\n");
        write_file(o.out_dir, "trace.csv", traces_to_csv(r.traces, hash));
    }
    return 0;
}

int run_heatmap(const CliOptions& o, DecodeConfig cfg, uint64_t seed) {
    // Fixed-width blocks keep every heatmap row on one position range, so the
    // row shape reflects the schedule rather than window drift.
    cfg.ablation = Ablation::no_b;
    const Workload wl = make_workload(o.oracle, seed, 1, o.prompt_len);
    const DecodeResult r = generate(*wl.model, wl.prompts[0], o.g, cfg);
    const Heatmap hm = record_heatmap(r.traces);
    const std::string hash = config_hash_hex(cfg);
    const std::string csv = heatmap_to_csv(hm, hash);

    size_t cells = 0;
    bool monotone = true;
    for (const std::vector<double>& row : hm.rows) {
        cells += row.size();
        for (size_t s = 1; s < row.size(); ++s)
            if (row[s] + 1e-9 < row[s - 1]) monotone = false;
    }
    if (o.format == "csv") std::fputs(csv.c_str(), stdout);
    else
        std::printf("# heatmap workload=%s g=%d config_hash=%s\n"
                    "blocks=%zu cells=%zu rows_monotone=%s\n",
                    wl.id.c_str(), o.g, hash.c_str(), hm.rows.size(), cells,
                    monotone ? "yes" : "no");
    if (!o.out_dir.empty()) write_file(o.out_dir, "heatmap.csv", csv);
    return 0;
}

int run_softmax_bench(const CliOptions& o, const DecodeConfig& cfg) {
    const std::vector<int> sizes = parse_int_csv(o.sizes_csv, "--sizes");
    const uint64_t seed = resolve_seed(o.seed);
    const auto rows = softmax_bench(sizes, o.bench_rows, o.bench_repeats, o.bench_width, seed);

    ordered_json j;
    j["tool"] = "mdd";
    j["report"] = "softmax-bench";
    j["config_hash"] = config_hash_hex(cfg);
    j["width"] = o.bench_width;
    j["rows"] = o.bench_rows;
    j["repeats"] = o.bench_repeats;
    j["note"] = "median wall-clock per row of top-k selection + subset softmax; single-threaded";
    j["sizes"] = ordered_json::array();
    for (const SoftmaxBenchRow& r : rows)
        j["sizes"].push_back({{"size", r.size}, {"median_us_per_row", r.median_us_per_row}});
    j["environment"] = {{"timestamp", iso_timestamp()}, {"host", host_description()}};

    std::ostringstream csv;
    csv << "# config_hash=" << config_hash_hex(cfg) << "\n";
    csv << "size,median_us_per_row\n";
    for (const SoftmaxBenchRow& r : rows)
        csv << r.size << ',' << fmt(r.median_us_per_row) << '\n';

    if (o.format == "json") std::fputs((j.dump(2) + "\n").c_str(), stdout);
    else if (o.format == "csv") std::fputs(csv.str().c_str(), stdout);
    else {
        std::printf("# softmax-bench width=%d rows=%d repeats=%d\n%10s %20s\n", o.bench_width,
                    o.bench_rows, o.bench_repeats, "size", "median_us_per_row");
        for (const SoftmaxBenchRow& r : rows)
            std::printf("%10d %20.3f\n", r.size, r.median_us_per_row);
    }
    if (!o.out_dir.empty()) {
        write_file(o.out_dir, "softmax_bench.json", j.dump(2) + "\n");
        write_file(o.out_dir, "softmax_bench.csv", csv.str());
    }
    return 0;
}

}  // namespace

int cli_run(int argc, const char* const* argv) {
    CLI::App app{"adaptive masked-diffusion decoding controller: simulator and bench harness"};
    app.require_subcommand(1);
    CliOptions o;

    CLI::App* dec = app.add_subcommand("decode", "run one generation, dump result + trace");
    dec->add_option("--g", o.g, "generation length")->capture_default_str();
    dec->add_option("--oracle", o.oracle, "workload name")->capture_default_str();
    dec->add_option("--prompt-len", o.prompt_len, "prompt length")->capture_default_str();
    add_common_flags(dec, o);

    CLI::App* abl = app.add_subcommand("ablate", "run the mode suite over a prompt set");
    abl->add_option("--g", o.g, "generation length")->capture_default_str();
    abl->add_option("--oracle", o.oracle, "workload name")->capture_default_str();
    abl->add_option("--modes", o.modes_csv, "comma list of modes")->capture_default_str();
    abl->add_option("--prompts", o.prompts, "prompt count")->capture_default_str();
    abl->add_option("--prompt-len", o.prompt_len, "prompt length")->capture_default_str();
    abl->add_option("--threads", o.threads, "suite worker threads (0 = all)")
        ->capture_default_str();
    add_common_flags(abl, o);

    CLI::App* cb = app.add_subcommand("cache-bench", "same runs under each cache mode");
    cb->add_option("--g", o.g_csv, "comma list of generation lengths")->capture_default_str();
    cb->add_option("--oracle", o.oracle, "workload name")->capture_default_str();
    cb->add_option("--prompts", o.prompts, "prompt count")->capture_default_str();
    cb->add_option("--prompt-len", o.prompt_len, "prompt length")->capture_default_str();
    cb->add_option("--threads", o.threads, "suite worker threads (0 = all)")
        ->capture_default_str();
    add_common_flags(cb, o);

    CLI::App* smb = app.add_subcommand("softmax-bench", "latency of top-k + subset softmax");
    smb->add_option("--sizes", o.sizes_csv, "comma list of candidate-set sizes")
        ->capture_default_str();
    smb->add_option("--rows", o.bench_rows, "logit rows per measurement")->capture_default_str();
    smb->add_option("--repeats", o.bench_repeats, "timed repeats (median)")
        ->capture_default_str();
    smb->add_option("--width", o.bench_width, "full logit row width")->capture_default_str();
    add_common_flags(smb, o);

    CLI::App* hm = app.add_subcommand("heatmap", "per-(block, step) mean confidence");
    hm->add_option("--g", o.g, "generation length")->capture_default_str();
    hm->add_option("--oracle", o.oracle, "workload name")->capture_default_str();
    hm->add_option("--prompt-len", o.prompt_len, "prompt length")->capture_default_str();
    add_common_flags(hm, o);

    try {
        app.parse(argc, const_cast<char**>(argv));
    } catch (const CLI::CallForHelp& e) {
        app.exit(e);
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e);
        return 0;
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const uint64_t seed = resolve_seed(o.seed);
        const DecodeConfig cfg = build_config(o);
        if (dec->parsed()) return run_decode(o, cfg, seed);
        if (hm->parsed()) return run_heatmap(o, cfg, seed);
        if (smb->parsed()) return run_softmax_bench(o, cfg);
        if (abl->parsed()) {
            const Workload wl = make_workload(o.oracle, seed, o.prompts, o.prompt_len);
            const BenchReport rep = ablate_report(wl, o.g, cfg, split_csv(o.modes_csv),
                                                  auto_threads(o.threads), seed);
            emit_report(rep, o, "ablate");
            return 0;
        }
        if (cb->parsed()) {
            const Workload wl = make_workload(o.oracle, seed, o.prompts, o.prompt_len);
            const BenchReport rep = cache_report(wl, parse_int_csv(o.g_csv, "--g"), cfg,
                                                 auto_threads(o.threads), seed);
            emit_report(rep, o, "cache_bench");
            return 0;
        }
        std::fprintf(stderr, "error: no subcommand\n");
        return 2;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const BoundsError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const RangeError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace mdd
