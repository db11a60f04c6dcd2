#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "ggnn/build.hpp"
#include "ggnn/config.hpp"
#include "ggnn/dataset.hpp"
#include "ggnn/hierarchy.hpp"
#include "ggnn/search.hpp"

namespace ggnn {

/// How the dataset is cut into shards. Dataset ids are first permuted by a
/// seeded shuffle (identity when there is a single shard); shard i then owns
/// positions [offsets[i], offsets[i] + sizes[i]) of `order`.
struct ShardPlan {
    std::vector<NodeId> order;
    std::vector<std::size_t> offsets;
    std::vector<std::size_t> sizes;
    std::size_t shard_size = 0;

    std::size_t shard_count() const { return offsets.size(); }
    /// Dataset id of shard-local node `local` in shard `shard`.
    NodeId global_id(std::size_t shard, NodeId local) const { return order[offsets[shard] + local]; }
    std::span<const NodeId> members(std::size_t shard) const {
        return std::span<const NodeId>(order).subspan(offsets[shard], sizes[shard]);
    }
};

/// ceil(n / shard_size) shards whose sizes differ by at most one.
/// Throws ConfigError if shard_size == 0 or n == 0.
ShardPlan plan_shards(std::size_t n, std::size_t shard_size, std::uint64_t seed);

struct Shard {
    Dataset data;     // the shard's rows, in local id order
    Hierarchy index;
};

struct ShardedIndex {
    ShardPlan plan;
    std::vector<Shard> shards;
    std::vector<BuildStats> stats;
};

/// Builds shard `shard` of `plan` on its own. Errors are rethrown prefixed with "shard <i>: ".
Shard build_shard(const Dataset& data, const ShardPlan& plan, std::size_t shard, const BuildConfig& cfg,
                  BuildStats* stats = nullptr);

/// Independent builds for every shard, run in parallel across shards.
/// Throws ConfigError if shard_size < cfg.s.
ShardedIndex build_sharded(const Dataset& data, std::size_t shard_size, const BuildConfig& cfg);

/// Merges per-shard hit lists (already carrying dataset ids) into the global
/// top-k by (dist, id). Duplicate ids keep their first occurrence.
std::vector<Neighbor> merge_shard_hits(std::span<const std::vector<Neighbor>> per_shard, std::size_t k);

/// Queries every shard and merges. Counters are summed over shards; the
/// termination reason is the most severe one reported by any shard.
QueryResult query_sharded(const ShardedIndex& si, std::span<const float> q, const QueryConfig& cfg);

std::vector<QueryResult> query_sharded_batch(const ShardedIndex& si, const QuerySet& queries, const QueryConfig& cfg,
                                             unsigned threads);

/// Directory layout: manifest.json, order.ivecs (one record holding the id
/// permutation) and shard_<i>.ggnn per shard.
void save_sharded(const ShardedIndex& si, const std::filesystem::path& dir);

/// Loads every shard at once. `data` must be the dataset the index was built
/// on; each shard's rows are checked against a CRC stored in the manifest.
ShardedIndex load_sharded(const std::filesystem::path& dir, const Dataset& data);

/// Loads one shard at a time from a saved directory, so at most one shard's
/// graph and rows are resident.
class ShardStream {
public:
    ShardStream(const std::filesystem::path& dir, const Dataset& data);

    const ShardPlan& plan() const { return plan_; }
    /// Next shard, or nullopt after the last one.
    std::optional<Shard> next();
    std::size_t position() const { return next_; }

private:
    std::filesystem::path dir_;
    const Dataset* data_;
    ShardPlan plan_;
    std::vector<std::uint32_t> crcs_;
    std::size_t next_ = 0;
};

/// Batch query over a saved directory, loading shards sequentially.
std::vector<QueryResult> query_sharded_sequential(const std::filesystem::path& dir, const Dataset& data,
                                                  const QuerySet& queries, const QueryConfig& cfg, unsigned threads);

/// True if `path` is a directory holding a sharded index manifest.
bool is_sharded_index(const std::filesystem::path& path);

}  // namespace ggnn
