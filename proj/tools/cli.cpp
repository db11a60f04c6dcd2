#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "ggnn/build.hpp"
#include "ggnn/eval.hpp"
#include "ggnn/index_io.hpp"
#include "ggnn/parallel.hpp"
#include "ggnn/search.hpp"
#include "ggnn/shard.hpp"
#include "ggnn/vecs_io.hpp"

namespace ggnn::cli {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Options {
    std::string data, queries, gt, format = "fvecs", out, index, report = "both";
    std::string tau_sweep, refine_sweep;
    BuildConfig build;
    std::optional<std::uint32_t> k_sym;
    double tau = 0.6;
    bool tau_set = false;
    std::size_t kout = 10;
    std::size_t k_gt = 100;
    std::size_t shard_size = 0;
    unsigned threads = 0;
    std::size_t prioq = CacheGeometry{}.prioq_size;
    std::size_t visited = CacheGeometry{}.visited_size;
    std::size_t max_iterations = 4096;
    bool consensus = false;
};

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

BuildConfig effective_build(const Options& o) {
    BuildConfig c = o.build;
    c.threads = o.threads;
    c.k_sym = o.k_sym ? *o.k_sym : (c.k >= c.k_nn ? c.k - c.k_nn : 0);
    if (!o.k_sym && c.k < c.k_nn) throw ConfigError("k_nn cannot exceed k");
    c.cache = {o.prioq, o.visited};
    c.validate();
    return c;
}

QueryConfig effective_query(const Options& o, double tau) {
    QueryConfig q;
    q.k_out = o.kout;
    q.tau = tau;
    q.max_iterations = o.max_iterations;
    q.cache = {o.prioq, o.visited};
    q.validate();
    return q;
}

json build_config_json(const BuildConfig& c, std::size_t shard_size) {
    return {{"k", c.k},
            {"k_nn", c.k_nn},
            {"k_sym", c.k_sym},
            {"s", c.s},
            {"g", c.g},
            {"refinements", c.refinements},
            {"tau_build", c.tau_build},
            {"seed", c.seed},
            {"threads", resolve_threads(c.threads)},
            {"path_check_budget", c.path_check_budget},
            {"stats_sample", c.stats_sample},
            {"max_iterations", c.max_iterations},
            {"prioq_size", c.cache.prioq_size},
            {"visited_size", c.cache.visited_size},
            {"shard_size", shard_size}};
}

json query_config_json(const QueryConfig& q) {
    return {{"k_out", q.k_out},
            {"tau", q.tau},
            {"max_iterations", q.max_iterations},
            {"prioq_size", q.cache.prioq_size},
            {"visited_size", q.cache.visited_size}};
}

json environment_json(unsigned threads) {
    return {{"hardware_concurrency", std::thread::hardware_concurrency()}, {"threads", resolve_threads(threads)}};
}

json dataset_json(const std::string& path, const std::string& format, const Dataset& d) {
    return {{"path", path}, {"format", format}, {"n", d.size()}, {"d", d.dim()}, {"crc32", dataset_crc32(d)}};
}

Dataset load_input(const std::string& path, const std::string& format, const char* what) {
    if (path.empty()) throw ConfigError(std::string("--") + what + " is required");
    return load_vectors(path, parse_vecs_format(format));
}

json build_stats_json(const BuildStats& st) {
    json passes = json::array();
    for (const auto& p : st.passes) {
        json row = {{"level", p.level},           {"layer", p.layer},          {"iteration", p.iteration},
                    {"seconds", p.seconds},       {"mean_sym", p.mean_sym},    {"sym_checked", p.sym.checked},
                    {"sym_added", p.sym.added},   {"sym_overflowed", p.sym.overflowed},
                    {"sym_dropped", p.sym.dropped}};
        if (p.c_at_k >= 0.0) row["c_at_k_nn_sampled"] = p.c_at_k;
        passes.push_back(row);
    }
    json traj = json::array();
    for (const auto& g : st.d_nn1_trajectory) traj.push_back({{"mean", g.d_nn1_mean}, {"max", g.d_nn1_max}});
    return {{"seconds", st.seconds},
            {"mean_sym_per_layer", st.mean_sym_per_layer},
            {"reduced_knn_batches", st.reduced_knn_batches},
            {"uniform_selection_fallbacks", st.uniform_selection_fallbacks},
            {"d_nn1_trajectory", traj},
            {"passes", passes}};
}

json hierarchy_json(const Hierarchy& h) {
    json sizes = json::array();
    for (const auto& l : h.layers) sizes.push_back(l.node_count());
    return {{"layers", h.layer_count()},
            {"layer_sizes", sizes},
            {"bottom_batches", h.geometry.bottom_batches},
            {"d_nn1_mean", h.stats.d_nn1_mean},
            {"d_nn1_max", h.stats.d_nn1_max},
            {"mean_sym", mean_sym_usage(h.bottom())}};
}

// A loaded or freshly built index, plain or sharded.
struct Index {
    std::optional<Hierarchy> plain;
    std::optional<ShardedIndex> sharded;
    const Dataset* data = nullptr;

    QueryResult run(std::span<const float> q, const QueryConfig& cfg, SearchCache& cache) const {
        if (plain) return query(*plain, *data, q, cfg, cache);
        return query_sharded(*sharded, q, cfg);
    }
};

struct Built {
    Index index;
    json stats;
    double seconds = 0.0;
};

Built build_index(const Dataset& data, const BuildConfig& cfg, std::size_t shard_size) {
    Built b;
    b.index.data = &data;
    const auto t0 = Clock::now();
    if (shard_size > 0) {
        b.index.sharded = build_sharded(data, shard_size, cfg);
        b.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        json shards = json::array();
        for (std::size_t i = 0; i < b.index.sharded->shards.size(); ++i) {
            shards.push_back({{"offset", b.index.sharded->plan.offsets[i]},
                              {"size", b.index.sharded->plan.sizes[i]},
                              {"index", hierarchy_json(b.index.sharded->shards[i].index)},
                              {"stats", build_stats_json(b.index.sharded->stats[i])}});
        }
        b.stats = {{"seconds", b.seconds}, {"shards", shards}};
    } else {
        auto [h, st] = build(data, cfg);
        b.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        b.stats = {{"seconds", b.seconds}, {"index", hierarchy_json(h)}, {"stats", build_stats_json(st)}};
        b.index.plain = std::move(h);
    }
    return b;
}

Index load_any_index(const std::string& path, const Dataset& data) {
    Index idx;
    idx.data = &data;
    if (is_sharded_index(path)) {
        idx.sharded = load_sharded(path, data);
    } else {
        idx.plain = load_index(path);
        if (idx.plain->bottom().node_count() != data.size() || idx.plain->dim != data.dim()) {
            throw ConfigError("index does not match dataset shape");
        }
    }
    return idx;
}

struct Timed {
    std::vector<QueryResult> results;
    std::vector<double> micros;
    double wall_seconds = 0.0;
};

Timed timed_queries(const Index& idx, const QuerySet& queries, const QueryConfig& cfg, unsigned threads) {
    check_compatible(*idx.data, queries);
    threads = resolve_threads(threads);
    Timed t;
    t.results.resize(queries.size());
    t.micros.resize(queries.size());
    std::vector<SearchCache> caches(threads, SearchCache(cfg.cache));
    const auto t0 = Clock::now();
    parallel_for(0, queries.size(), threads, [&](std::size_t i, unsigned w) {
        const auto s = Clock::now();
        t.results[i] = idx.run(queries.row(i), cfg, caches[w]);
        t.micros[i] = std::chrono::duration<double, std::micro>(Clock::now() - s).count();
    }, 1);
    t.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return t;
}

double percentile(std::vector<double> v, double p) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size())));
    return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

json timing_json(const Timed& t) {
    double visited = 0, steps = 0;
    for (const auto& r : t.results) {
        visited += static_cast<double>(r.visited_count);
        steps += static_cast<double>(r.steps);
    }
    const double m = std::max<double>(1.0, static_cast<double>(t.results.size()));
    return {{"mean_query_us", t.wall_seconds * 1e6 / m},
            {"p50_query_us", percentile(t.micros, 0.50)},
            {"p99_query_us", percentile(t.micros, 0.99)},
            {"mean_visited", visited / m},
            {"mean_steps", steps / m}};
}

IdTable results_table(const std::vector<QueryResult>& results, std::size_t k) {
    IdTable t;
    t.rows = results.size();
    t.cols = k;
    for (const auto& r : results) {
        if (r.hits.size() < k) throw std::runtime_error("query returned fewer than k_out hits");
        for (std::size_t j = 0; j < k; ++j) t.ids.push_back(r.hits[j].id);
    }
    return t;
}

void emit(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

// ---- commands ----

int cmd_build(const Options& o, std::ostream& out) {
    const BuildConfig cfg = effective_build(o);
    if (o.out.empty()) throw ConfigError("--out is required");
    const Dataset data = load_input(o.data, o.format, "data");
    auto b = build_index(data, cfg, o.shard_size);
    if (b.index.plain) save_index(*b.index.plain, o.out);
    else save_sharded(*b.index.sharded, o.out);
    emit(out, {{"command", "build"},
               {"timestamp", utc_now()},
               {"config", build_config_json(cfg, o.shard_size)},
               {"dataset", dataset_json(o.data, o.format, data)},
               {"environment", environment_json(o.threads)},
               {"build", b.stats},
               {"output", o.out}});
    return 0;
}

int cmd_query(const Options& o, std::ostream& out) {
    const QueryConfig qcfg = effective_query(o, o.tau);
    if (o.index.empty()) throw ConfigError("--index is required");
    if (o.out.empty()) throw ConfigError("--out is required");
    const Dataset data = load_input(o.data, o.format, "data");
    const Dataset queries = load_input(o.queries, o.format, "queries");
    check_compatible(data, queries);
    if (o.kout > data.size()) throw ConfigError("--kout exceeds the dataset size");
    const Index idx = load_any_index(o.index, data);
    auto t = timed_queries(idx, queries, qcfg, o.threads);
    write_ids(o.out, results_table(t.results, o.kout));
    json report = {{"command", "query"},
                   {"timestamp", utc_now()},
                   {"config", query_config_json(qcfg)},
                   {"index", o.index},
                   {"dataset", dataset_json(o.data, o.format, data)},
                   {"queries", dataset_json(o.queries, o.format, queries)},
                   {"environment", environment_json(o.threads)},
                   {"timing", timing_json(t)},
                   {"output", o.out}};
    if (!o.gt.empty()) {
        const auto gt = load_ground_truth(o.gt);
        report["recall_at_1"] = recall_at(t.results, gt, 1);
        if (o.kout >= 10) report["recall_at_10"] = recall_at(t.results, gt, 10);
    }
    emit(out, report);
    return 0;
}

int cmd_gt(const Options& o, std::ostream& out) {
    if (o.out.empty()) throw ConfigError("--out is required");
    if (o.k_gt == 0) throw ConfigError("--kout must be >= 1");
    const Dataset data = load_input(o.data, o.format, "data");
    const Dataset queries = load_input(o.queries, o.format, "queries");
    const auto gt = brute_force_oracle(data, queries, o.k_gt, o.threads);
    write_ground_truth(o.out, gt);
    emit(out, {{"command", "gt"},
               {"timestamp", utc_now()},
               {"k_gt", o.k_gt},
               {"dataset", dataset_json(o.data, o.format, data)},
               {"queries", dataset_json(o.queries, o.format, queries)},
               {"environment", environment_json(o.threads)},
               {"output", o.out}});
    return 0;
}

std::vector<std::uint32_t> parse_refine_sweep(const std::string& spec) {
    std::vector<std::uint32_t> out;
    std::string full = spec;
    if (spec.find(':') == std::string::npos) full = spec + ":" + spec + ":1";
    else if (spec.find(':') == spec.rfind(':')) full = spec + ":1";
    for (double v : parse_sweep(full)) {
        if (v < 0 || v != std::floor(v)) throw ConfigError("refinement sweep needs non-negative integers");
        out.push_back(static_cast<std::uint32_t>(v));
    }
    return out;
}

// Shared numeric formatting for JSON and CSV so both carry identical values.
std::string num(const json& v) { return v.is_null() ? "" : v.dump(); }

int cmd_bench(const Options& o, std::ostream& out) {
    BuildConfig base_cfg = effective_build(o);
    std::vector<double> taus = !o.tau_sweep.empty() ? parse_sweep(o.tau_sweep)
                               : o.tau_set          ? std::vector<double>{o.tau}
                                                    : parse_sweep("0.3:0.8:0.1");
    std::vector<std::uint32_t> refines =
        o.refine_sweep.empty() ? std::vector<std::uint32_t>{base_cfg.refinements} : parse_refine_sweep(o.refine_sweep);
    for (double t : taus) effective_query(o, t);
    if (o.report != "json" && o.report != "csv" && o.report != "both") {
        throw ConfigError("--report must be json, csv or both");
    }
    if (!o.index.empty() && !o.refine_sweep.empty()) throw ConfigError("--index cannot be combined with --refine-sweep");

    const Dataset data = load_input(o.data, o.format, "data");
    const Dataset queries = load_input(o.queries, o.format, "queries");
    check_compatible(data, queries);
    const std::size_t recall_k = std::min<std::size_t>(10, o.kout);

    const bool auto_gt = o.gt.empty() || o.gt == "auto";
    const GroundTruth gt = auto_gt ? brute_force_oracle(data, queries, std::min(data.size(), std::max<std::size_t>(o.kout, 10)), o.threads)
                                   : load_ground_truth(o.gt);
    if (gt.size() != queries.size()) throw ConfigError("ground truth rows do not match query count");

    const bool want_consensus = o.consensus || !o.refine_sweep.empty();
    std::vector<std::vector<Neighbor>> knn_oracle;
    const std::size_t c_k = std::min<std::size_t>(10, base_cfg.k_nn);
    if (want_consensus && o.shard_size == 0 && data.size() > c_k) knn_oracle = knn_graph_oracle(data, c_k, o.threads);

    json rows = json::array();
    json builds = json::array();
    for (std::uint32_t r : refines) {
        BuildConfig cfg = base_cfg;
        cfg.refinements = r;
        Built b;
        if (!o.index.empty()) {
            b.index = load_any_index(o.index, data);
            b.stats = {{"loaded", o.index}};
        } else {
            b = build_index(data, cfg, o.shard_size);
        }
        json c_at = nullptr;
        if (!knn_oracle.empty() && b.index.plain) c_at = consensus_at_k(b.index.plain->bottom(), knn_oracle, c_k);
        builds.push_back({{"refinements", r}, {"build", b.stats}, {"c_at_10", c_at}});

        timed_queries(b.index, queries, effective_query(o, taus.front()), o.threads);  // warm-up
        for (double tau : taus) {
            const QueryConfig qcfg = effective_query(o, tau);
            auto t = timed_queries(b.index, queries, qcfg, o.threads);
            const auto ids = result_ids(t.results);
            json row = {{"tau", tau},
                        {"refinements", r},
                        {"recall_at_1", recall_at(t.results, gt, 1)},
                        {"recall_at_10", recall_at(t.results, gt, recall_k)},
                        {"k_recall_at_10", k_recall_at_k(ids, gt, recall_k)},
                        {"build_seconds", b.seconds},
                        {"c_at_10", c_at}};
            row.update(timing_json(t));
            rows.push_back(row);
        }
    }

    json cfg_echo = build_config_json(base_cfg, o.shard_size);
    cfg_echo["k_out"] = o.kout;
    cfg_echo["taus"] = taus;
    cfg_echo["refinement_sweep"] = refines;
    cfg_echo["max_query_iterations"] = o.max_iterations;
    json report = {{"command", "bench"},
                   {"timestamp", utc_now()},
                   {"config", cfg_echo},
                   {"dataset", dataset_json(o.data, o.format, data)},
                   {"queries", dataset_json(o.queries, o.format, queries)},
                   {"ground_truth", auto_gt ? "auto" : o.gt},
                   {"index", o.index.empty() ? json(nullptr) : json(o.index)},
                   {"environment", environment_json(o.threads)},
                   {"builds", builds},
                   {"rows", rows}};

    const std::string prefix = o.out.empty() ? "bench" : o.out;
    if (o.report == "json" || o.report == "both") {
        std::ofstream f(prefix + ".json");
        if (!f) throw IoError("cannot write " + prefix + ".json");
        f << report.dump(2) << '\n';
    }
    if (o.report == "csv" || o.report == "both") {
        static const char* cols[] = {"tau",          "refinements",   "recall_at_1",   "recall_at_10",
                                     "k_recall_at_10", "mean_visited", "mean_steps",    "mean_query_us",
                                     "p50_query_us", "p99_query_us",  "build_seconds", "c_at_10"};
        std::ofstream f(prefix + ".csv");
        std::ofstream plot(prefix + "_plot.csv");
        if (!f || !plot) throw IoError("cannot write " + prefix + ".csv");
        for (std::size_t i = 0; i < std::size(cols); ++i) f << (i ? "," : "") << cols[i];
        f << '\n';
        plot << "mean_query_us,recall_at_1\n";
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < std::size(cols); ++i) f << (i ? "," : "") << num(row[cols[i]]);
            f << '\n';
            plot << num(row["mean_query_us"]) << ',' << num(row["recall_at_1"]) << '\n';
        }
    }
    emit(out, report);
    return 0;
}

void add_data_flags(CLI::App* c, Options& o) {
    c->add_option("--data", o.data, "Base vectors");
    c->add_option("--format", o.format, "fvecs or bvecs")->check(CLI::IsMember({"fvecs", "bvecs"}));
    c->add_option("--threads", o.threads, "Worker count (0: GGNN_THREADS or all cores)");
    c->add_option("--out", o.out, "Output path");
}

void add_build_flags(CLI::App* c, Options& o) {
    c->add_option("--k", o.build.k, "Out-degree");
    c->add_option("--knn", o.build.k_nn, "Direct-neighbor slots");
    c->add_option("--ksym", o.k_sym, "Inverse-link slots (default k - knn)");
    c->add_option("--s", o.build.s, "Segment size");
    c->add_option("--g", o.build.g, "Branching factor");
    c->add_option("--refine", o.build.refinements, "Refinement iterations per layer");
    c->add_option("--tau-build", o.build.tau_build, "Slack of construction queries");
    c->add_option("--seed", o.build.seed, "Build seed");
    c->add_option("--shard-size", o.shard_size, "Maximum points per shard (0: no sharding)");
    c->add_option("--path-check-budget", o.build.path_check_budget, "Expansions of the inverse-link path check");
}

void add_query_flags(CLI::App* c, Options& o) {
    c->add_option("--queries", o.queries, "Query vectors");
    c->add_option("--kout", o.kout, "Results per query");
    c->add_option_function<double>("--tau", [&o](double v) { o.tau = v; o.tau_set = true; }, "Query slack");
    c->add_option("--prioq-size", o.prioq, "Priority queue capacity");
    c->add_option("--visited-size", o.visited, "Visited ring capacity");
    c->add_option("--max-iterations", o.max_iterations, "Expansion cap per query");
}

}  // namespace

std::vector<double> parse_sweep(const std::string& spec) {
    std::vector<double> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) {
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("bad sweep '" + spec + "': expected a:b:step");
        }
    }
    if (parts.size() != 3 || !(parts[2] > 0) || parts[1] < parts[0]) {
        throw ConfigError("bad sweep '" + spec + "': expected a:b:step with a <= b and step > 0");
    }
    const auto count = static_cast<std::size_t>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9)) + 1;
    std::vector<double> out;
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(std::round((parts[0] + static_cast<double>(i) * parts[2]) * 1e9) / 1e9);
    }
    return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Hierarchical kNN-graph index: build, query, ground truth and benchmarks"};
    app.require_subcommand(1);

    auto* b = app.add_subcommand("build", "Build an index and save it");
    add_data_flags(b, o);
    add_build_flags(b, o);

    auto* q = app.add_subcommand("query", "Query a saved index, write result ids as ivecs");
    add_data_flags(q, o);
    add_query_flags(q, o);
    q->add_option("--index", o.index, "Index file or sharded index directory");
    q->add_option("--gt", o.gt, "Ground truth ivecs, reports recall if given");

    auto* bench = app.add_subcommand("bench", "Build (or load) and sweep tau, writing JSON/CSV reports");
    add_data_flags(bench, o);
    add_build_flags(bench, o);
    add_query_flags(bench, o);
    bench->add_option("--gt", o.gt, "Ground truth ivecs or 'auto'");
    bench->add_option("--index", o.index, "Reuse a saved index instead of building");
    bench->add_option("--tau-sweep", o.tau_sweep, "a:b:step (default 0.3:0.8:0.1)");
    bench->add_option("--refine-sweep", o.refine_sweep, "a:b refinement counts to build and compare");
    bench->add_option("--report", o.report, "json, csv or both");
    bench->add_flag("--consensus", o.consensus, "Measure C@10 against the exact kNN graph");

    auto* gt = app.add_subcommand("gt", "Exact ground truth as ivecs");
    add_data_flags(gt, o);
    gt->add_option("--queries", o.queries, "Query vectors");
    gt->add_option("--kout", o.k_gt, "Neighbors per query");

    auto error_line = [&](const std::string& kind, const std::string& msg) {
        err << json{{"error", msg}, {"kind", kind}}.dump() << '\n';
    };

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        error_line("usage", e.what());
        return 2;
    }

    try {
        if (b->parsed()) return cmd_build(o, out);
        if (q->parsed()) return cmd_query(o, out);
        if (bench->parsed()) return cmd_bench(o, out);
        if (gt->parsed()) return cmd_gt(o, out);
        error_line("usage", "no command");
        return 2;
    } catch (const ConfigError& e) {
        error_line("config", e.what());
        return 2;
    } catch (const IoError& e) {
        error_line("io", e.what());
        return 2;
    } catch (const FormatError& e) {
        error_line("format", e.what());
        return 1;
    } catch (const std::exception& e) {
        error_line("runtime", e.what());
        return 1;
    }
}

}  // namespace ggnn::cli
