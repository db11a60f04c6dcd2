#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ggnn/config.hpp"
#include "ggnn/types.hpp"

namespace ggnn {

/// Per-query working set of the greedy search, in three parts:
///
///  1. best: the k_out closest points found so far, sorted by (dist, id);
///  2. prioq: a distance-sorted ring buffer of known but unexpanded candidates
///     that did not make it into best;
///  3. visited: a ring buffer of ids that were expanded or discarded.
///
/// is_known() answers in constant time whether an id is currently held by any
/// of the parts. Ids that fall out of every part (visited-ring wraparound) are
/// forgotten and counted; they may be rediscovered later.
///
/// The membership table is sized to the layer and reused across queries, so a
/// cache is meant to live for many queries on one worker.
class SearchCache {
public:
    SearchCache() = default;
    explicit SearchCache(CacheGeometry geometry) : geometry_(geometry) {}

    /// Starts a new query over node ids [0, node_count).
    void reset(std::size_t k_out, std::size_t node_count);

    bool is_known(NodeId id) const { return epoch_[id] == epoch_now_ && flags_[id] != 0; }

    /// Inserts an id that is not known yet.
    void insert(NodeId id, Dist dist);

    /// Records a computed-but-rejected id in the visited ring so it is not recomputed.
    void mark_discarded(NodeId id);

    /// Removes the closest unexpanded candidate, marks it expanded and returns it.
    std::optional<Neighbor> pop_best();

    bool has_candidate() const;
    bool was_expanded(NodeId id) const { return epoch_[id] == epoch_now_ && (flags_[id] & kExpanded); }

    std::span<const Neighbor> best() const { return best_; }
    bool best_full() const { return best_.size() >= k_out_; }
    /// Distance of the k_out-th best point; +inf until best is full.
    Dist best_k() const { return best_full() && !best_.empty() ? best_.back().dist : kInfDist; }
    /// Distance of the best point; +inf while best is empty.
    Dist best_1() const { return best_.empty() ? kInfDist : best_.front().dist; }

    std::size_t prioq_size() const { return pq_size_; }
    std::uint64_t forgotten() const { return forgotten_; }
    const CacheGeometry& geometry() const { return geometry_; }

private:
    enum : std::uint8_t { kInBest = 1, kInPrioq = 2, kInRing = 4, kExpanded = 8 };

    std::uint8_t& flags(NodeId id);
    void prioq_push(Neighbor n);
    const Neighbor& prioq_at(std::size_t i) const { return pq_[(pq_head_ + i) % pq_.size()]; }
    Neighbor& prioq_at(std::size_t i) { return pq_[(pq_head_ + i) % pq_.size()]; }
    void ring_push(NodeId id);

    CacheGeometry geometry_;
    std::size_t k_out_ = 1;

    std::vector<std::uint32_t> epoch_;
    std::vector<std::uint8_t> flags_;
    std::uint32_t epoch_now_ = 0;

    std::vector<Neighbor> best_;

    std::vector<Neighbor> pq_;
    std::size_t pq_head_ = 0;
    std::size_t pq_size_ = 0;

    std::vector<NodeId> ring_;
    std::size_t ring_pos_ = 0;
    std::size_t ring_size_ = 0;

    std::uint64_t forgotten_ = 0;
};

}  // namespace ggnn
