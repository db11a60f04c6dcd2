#include "ggnn/shard.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <string>

#include <json.hpp>

#include "ggnn/index_io.hpp"
#include "ggnn/parallel.hpp"
#include "ggnn/vecs_io.hpp"

namespace ggnn {
namespace {

constexpr std::uint64_t kShardSeedSalt = 0x5ba7d5eedull;
constexpr int kManifestVersion = 1;

std::filesystem::path shard_file(const std::filesystem::path& dir, std::size_t i) {
    return dir / ("shard_" + std::to_string(i) + ".ggnn");
}

int severity(Termination t) {
    switch (t) {
        case Termination::queue_empty: return 0;
        case Termination::stopping_rule: return 1;
        case Termination::iteration_cap: return 2;
    }
    return 0;
}

QueryResult merge_results(std::span<const QueryResult> parts, const ShardPlan& plan, std::size_t k) {
    std::vector<std::vector<Neighbor>> hits(parts.size());
    QueryResult out;
    for (std::size_t s = 0; s < parts.size(); ++s) {
        for (auto h : parts[s].hits) {
            h.id = plan.global_id(s, h.id);
            hits[s].push_back(h);
        }
        out.visited_count += parts[s].visited_count;
        out.steps += parts[s].steps;
        out.forgotten += parts[s].forgotten;
        if (s == 0 || severity(parts[s].terminated_by) > severity(out.terminated_by)) {
            out.terminated_by = parts[s].terminated_by;
        }
    }
    out.hits = merge_shard_hits(hits, k);
    return out;
}

struct Manifest {
    ShardPlan plan;
    std::size_t n = 0;
    std::size_t dim = 0;
    std::vector<std::uint32_t> crcs;  // dataset_crc32 of each shard's rows
};

Manifest read_manifest(const std::filesystem::path& dir) {
    const auto path = dir / "manifest.json";
    std::ifstream in(path);
    if (!in) throw IoError("sharded index not found: " + dir.string());
    nlohmann::json j;
    try {
        in >> j;
        Manifest m;
        if (j.at("version").get<int>() != kManifestVersion) throw FormatError("manifest version mismatch");
        m.n = j.at("n").get<std::size_t>();
        m.dim = j.at("dim").get<std::size_t>();
        m.plan.shard_size = j.at("shard_size").get<std::size_t>();
        m.plan.offsets = j.at("offsets").get<std::vector<std::size_t>>();
        m.plan.sizes = j.at("sizes").get<std::vector<std::size_t>>();
        m.crcs = j.at("shard_crc32").get<std::vector<std::uint32_t>>();
        if (m.plan.offsets.size() != m.plan.sizes.size() || m.plan.offsets.empty() ||
            m.crcs.size() != m.plan.sizes.size()) {
            throw FormatError("manifest offsets and sizes disagree");
        }
        const auto order = load_ids(dir / "order.ivecs");
        if (order.rows != 1 || order.cols != m.n) throw FormatError("order.ivecs does not match manifest");
        m.plan.order = order.ids;
        std::size_t expect = 0;
        for (std::size_t i = 0; i < m.plan.offsets.size(); ++i) {
            if (m.plan.offsets[i] != expect) throw FormatError("manifest offsets are not contiguous");
            expect += m.plan.sizes[i];
        }
        if (expect != m.n) throw FormatError("manifest shards do not cover the dataset");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("malformed manifest: " + std::string(e.what()));
    }
}

Shard load_shard(const std::filesystem::path& dir, const Dataset& data, const Manifest& m, std::size_t i) {
    const ShardPlan& plan = m.plan;
    Shard s{data.subset(plan.members(i)), load_index(shard_file(dir, i))};
    if (dataset_crc32(s.data) != m.crcs[i]) {
        throw ConfigError("shard " + std::to_string(i) + ": dataset rows do not match the ones the index was built on");
    }
    if (s.index.bottom().node_count() != plan.sizes[i]) {
        throw FormatError("shard " + std::to_string(i) + ": index size does not match manifest");
    }
    return s;
}

void check_dataset(const Manifest& m, const Dataset& data) {
    if (data.size() != m.n || data.dim() != m.dim) {
        throw ConfigError("dataset shape " + std::to_string(data.size()) + "x" + std::to_string(data.dim()) +
                          " does not match sharded index " + std::to_string(m.n) + "x" + std::to_string(m.dim));
    }
}

}  // namespace

ShardPlan plan_shards(std::size_t n, std::size_t shard_size, std::uint64_t seed) {
    if (n == 0 || shard_size == 0) throw ConfigError("plan_shards needs n >= 1 and shard_size >= 1");
    ShardPlan plan;
    plan.shard_size = shard_size;
    if (shard_size >= n) {
        plan.order.resize(n);
        std::iota(plan.order.begin(), plan.order.end(), NodeId{0});
        plan.offsets = {0};
        plan.sizes = {n};
        return plan;
    }
    for (auto& part : partition_batches(n, shard_size, seed ^ kShardSeedSalt)) {
        plan.offsets.push_back(plan.order.size());
        plan.sizes.push_back(part.size());
        plan.order.insert(plan.order.end(), part.begin(), part.end());
    }
    return plan;
}

Shard build_shard(const Dataset& data, const ShardPlan& plan, std::size_t shard, const BuildConfig& cfg,
                  BuildStats* stats) {
    try {
        Shard s;
        s.data = data.subset(plan.members(shard));
        auto [h, st] = build(s.data, cfg);
        s.index = std::move(h);
        if (stats) *stats = std::move(st);
        return s;
    } catch (const ConfigError& e) {
        throw ConfigError("shard " + std::to_string(shard) + ": " + e.what());
    } catch (const std::exception& e) {
        throw std::runtime_error("shard " + std::to_string(shard) + ": " + e.what());
    }
}

ShardedIndex build_sharded(const Dataset& data, std::size_t shard_size, const BuildConfig& cfg) {
    cfg.validate();
    if (shard_size < cfg.s) {
        throw ConfigError("shard size " + std::to_string(shard_size) + " is smaller than segment size " +
                          std::to_string(cfg.s));
    }
    ShardedIndex si;
    si.plan = plan_shards(data.size(), shard_size, cfg.seed);
    const std::size_t count = si.plan.shard_count();
    si.shards.resize(count);
    si.stats.resize(count);
    const unsigned threads = resolve_threads(cfg.threads);
    const unsigned outer = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    BuildConfig inner = cfg;
    inner.threads = std::max(1u, threads / std::max(1u, outer));
    parallel_for(0, count, outer, [&](std::size_t i, unsigned) {
        si.shards[i] = build_shard(data, si.plan, i, inner, &si.stats[i]);
    }, 1);
    return si;
}

std::vector<Neighbor> merge_shard_hits(std::span<const std::vector<Neighbor>> per_shard, std::size_t k) {
    std::vector<Neighbor> all;
    for (const auto& hits : per_shard) all.insert(all.end(), hits.begin(), hits.end());
    std::stable_sort(all.begin(), all.end(), closer);
    std::vector<Neighbor> out;
    for (const auto& h : all) {
        if (out.size() == k) break;
        if (std::none_of(out.begin(), out.end(), [&](const Neighbor& o) { return o.id == h.id; })) out.push_back(h);
    }
    return out;
}

QueryResult query_sharded(const ShardedIndex& si, std::span<const float> q, const QueryConfig& cfg) {
    std::vector<QueryResult> parts(si.shards.size());
    for (std::size_t s = 0; s < si.shards.size(); ++s) {
        parts[s] = query(si.shards[s].index, si.shards[s].data, q, cfg);
    }
    return merge_results(parts, si.plan, cfg.k_out);
}

std::vector<QueryResult> query_sharded_batch(const ShardedIndex& si, const QuerySet& queries, const QueryConfig& cfg,
                                             unsigned threads) {
    cfg.validate();
    std::vector<std::vector<QueryResult>> per_shard;
    for (const auto& shard : si.shards) {
        check_compatible(shard.data, queries);
        per_shard.push_back(query_batch(shard.index, shard.data, queries, cfg, threads));
    }
    std::vector<QueryResult> out(queries.size());
    std::vector<QueryResult> parts(si.shards.size());
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        for (std::size_t s = 0; s < parts.size(); ++s) parts[s] = std::move(per_shard[s][qi]);
        out[qi] = merge_results(parts, si.plan, cfg.k_out);
    }
    return out;
}

void save_sharded(const ShardedIndex& si, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    if (si.shards.empty()) throw std::invalid_argument("save_sharded: no shards");

    nlohmann::json j;
    j["version"] = kManifestVersion;
    j["n"] = si.plan.order.size();
    j["dim"] = si.shards.front().index.dim;
    j["shard_size"] = si.plan.shard_size;
    j["shard_count"] = si.plan.shard_count();
    j["offsets"] = si.plan.offsets;
    j["sizes"] = si.plan.sizes;
    const BuildConfig& c = si.shards.front().index.config;
    j["config"] = {{"k", c.k}, {"k_nn", c.k_nn}, {"k_sym", c.k_sym}, {"s", c.s}, {"g", c.g},
                   {"refinements", c.refinements}, {"tau_build", c.tau_build}, {"seed", c.seed}};
    std::vector<std::string> files;
    for (std::size_t i = 0; i < si.shards.size(); ++i) files.push_back(shard_file(dir, i).filename().string());
    j["files"] = files;
    std::vector<std::uint32_t> crcs;
    for (const auto& sh : si.shards) crcs.push_back(dataset_crc32(sh.data));
    j["shard_crc32"] = crcs;

    IdTable order{1, si.plan.order.size(), si.plan.order};
    write_ids(dir / "order.ivecs", order);
    for (std::size_t i = 0; i < si.shards.size(); ++i) save_index(si.shards[i].index, shard_file(dir, i));
    std::ofstream out(dir / "manifest.json");
    if (!out) throw IoError("cannot write manifest in " + dir.string());
    out << j.dump(2) << '\n';
}

ShardedIndex load_sharded(const std::filesystem::path& dir, const Dataset& data) {
    const auto m = read_manifest(dir);
    check_dataset(m, data);
    ShardedIndex si;
    si.plan = m.plan;
    for (std::size_t i = 0; i < si.plan.shard_count(); ++i) si.shards.push_back(load_shard(dir, data, m, i));
    return si;
}

ShardStream::ShardStream(const std::filesystem::path& dir, const Dataset& data) : dir_(dir), data_(&data) {
    const auto m = read_manifest(dir);
    check_dataset(m, data);
    plan_ = m.plan;
    crcs_ = m.crcs;
}

std::optional<Shard> ShardStream::next() {
    if (next_ >= plan_.shard_count()) return std::nullopt;
    Manifest m{plan_, data_->size(), data_->dim(), crcs_};
    return load_shard(dir_, *data_, m, next_++);
}

std::vector<QueryResult> query_sharded_sequential(const std::filesystem::path& dir, const Dataset& data,
                                                  const QuerySet& queries, const QueryConfig& cfg, unsigned threads) {
    cfg.validate();
    ShardStream stream(dir, data);
    const std::size_t count = stream.plan().shard_count();
    std::vector<std::vector<QueryResult>> per_query(queries.size(), std::vector<QueryResult>(count));
    while (auto shard = stream.next()) {
        const std::size_t s = stream.position() - 1;
        auto results = query_batch(shard->index, shard->data, queries, cfg, threads);
        for (std::size_t qi = 0; qi < queries.size(); ++qi) per_query[qi][s] = std::move(results[qi]);
    }
    std::vector<QueryResult> out(queries.size());
    for (std::size_t qi = 0; qi < queries.size(); ++qi) out[qi] = merge_results(per_query[qi], stream.plan(), cfg.k_out);
    return out;
}

bool is_sharded_index(const std::filesystem::path& path) {
    return std::filesystem::is_directory(path) && std::filesystem::exists(path / "manifest.json");
}

}  // namespace ggnn
