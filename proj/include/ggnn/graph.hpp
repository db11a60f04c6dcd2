#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <vector>

#include "ggnn/types.hpp"

namespace ggnn {

/// Result of offering a candidate to a node's direct-neighbor slots.
struct InsertResult {
    bool improved = false;
    /// Entry pushed out of the last direct slot, if the list was full.
    std::optional<Neighbor> evicted;
};

enum class SymReservation { accepted, already_linked, full };

/// Fixed out-degree adjacency for one hierarchy layer.
///
/// Every node owns k id slots. Slots [0, k_nn) hold direct links sorted by
/// (distance, id) with empties (kEmptySlot) at the end; slots [k_nn, k_nn + sym_count)
/// hold inverse links in insertion order. A node never lists itself and never
/// lists the same id twice across its slots.
///
/// Writes to a node's direct slots must be partitioned by node across workers.
/// reserve_sym_slot() may be called concurrently for any nodes.
class AdjacencyLayer {
public:
    AdjacencyLayer() = default;
    AdjacencyLayer(std::size_t node_count, std::uint32_t k, std::uint32_t k_nn);

    AdjacencyLayer(const AdjacencyLayer& other);
    AdjacencyLayer& operator=(const AdjacencyLayer& other);
    AdjacencyLayer(AdjacencyLayer&&) noexcept = default;
    AdjacencyLayer& operator=(AdjacencyLayer&&) noexcept = default;

    std::size_t node_count() const { return node_count_; }
    std::uint32_t k() const { return k_; }
    std::uint32_t k_nn() const { return k_nn_; }
    std::uint32_t k_sym() const { return k_ - k_nn_; }

    /// All k slots of `node`, including empties.
    std::span<const NodeId> slots(NodeId node) const { return {adjacency_.data() + offset(node), k_}; }
    /// The filled prefix of the direct slots.
    std::span<const NodeId> direct(NodeId node) const { return {adjacency_.data() + offset(node), direct_count(node)}; }
    std::span<const Dist> nn_dists(NodeId node) const {
        return {nn_dists_.data() + static_cast<std::size_t>(node) * k_nn_, k_nn_};
    }
    /// The used inverse slots.
    std::span<const NodeId> inverse(NodeId node) const {
        return {adjacency_.data() + offset(node) + k_nn_, sym_count(node)};
    }
    std::uint32_t direct_count(NodeId node) const;
    std::uint32_t sym_count(NodeId node) const;
    Dist d_nn1(NodeId node) const { return d_nn1_[node]; }

    /// Direct links followed by inverse links. Throws std::out_of_range for a bad node.
    std::vector<NodeId> neighbors(NodeId node) const;

    bool contains(NodeId node, NodeId candidate) const;
    bool contains_direct(NodeId node, NodeId candidate) const;

    /// Sorted insertion of (candidate, dist) into the direct slots of `node`.
    /// A candidate already among the direct slots is rejected. If the candidate
    /// currently occupies an inverse slot it is moved to the direct list.
    /// Throws std::out_of_range for bad ids and std::invalid_argument for self links.
    InsertResult insert_nn(NodeId node, NodeId candidate, Dist dist);

    /// Replaces the direct list of `node` with `sorted` (ascending, at most k_nn,
    /// no duplicates, no self). Inverse slots are left untouched except for ids
    /// that now appear in the direct list, which are removed.
    void set_direct(NodeId node, std::span<const Neighbor> sorted);

    /// Atomically claims the next inverse slot of `node` for `candidate`.
    /// Returns false if the slots are exhausted, if candidate == node, or if
    /// `candidate` already appears anywhere in the node's slots.
    bool reserve_sym_slot(NodeId node, NodeId candidate) {
        return try_reserve_sym_slot(node, candidate) == SymReservation::accepted;
    }
    /// Same as reserve_sym_slot() but tells an existing link apart from a full list.
    /// A self link reports already_linked.
    SymReservation try_reserve_sym_slot(NodeId node, NodeId candidate);

    void clear_inverse(NodeId node);

    /// Squared distance to the first direct neighbor, maximum over nodes with a filled slot 0.
    Dist d_nn1_max() const;

    /// Segment membership of each node. The bottom layer uses batch indices;
    /// upper layers use the group index of the segment the node was selected into.
    std::vector<std::uint32_t> segment;
    std::uint32_t segment_count = 0;

    // Raw storage access for persistence.
    const std::vector<NodeId>& raw_adjacency() const { return adjacency_; }
    const std::vector<Dist>& raw_nn_dists() const { return nn_dists_; }
    const std::vector<std::uint32_t>& raw_sym_count() const { return sym_count_; }
    const std::vector<Dist>& raw_d_nn1() const { return d_nn1_; }
    static AdjacencyLayer from_raw(std::size_t node_count, std::uint32_t k, std::uint32_t k_nn,
                                   std::vector<NodeId> adjacency, std::vector<Dist> nn_dists,
                                   std::vector<std::uint32_t> sym_count, std::vector<Dist> d_nn1);

private:
    std::size_t offset(NodeId node) const { return static_cast<std::size_t>(node) * k_; }
    void check_node(NodeId node) const;
    void remove_inverse_locked(NodeId node, NodeId candidate);
    std::mutex& stripe(NodeId node) const { return (*locks_)[node % kStripes]; }

    static constexpr std::size_t kStripes = 256;

    std::size_t node_count_ = 0;
    std::uint32_t k_ = 0;
    std::uint32_t k_nn_ = 0;
    std::vector<NodeId> adjacency_;
    std::vector<Dist> nn_dists_;
    std::vector<std::uint32_t> sym_count_;
    std::vector<Dist> d_nn1_;
    std::unique_ptr<std::array<std::mutex, kStripes>> locks_ = std::make_unique<std::array<std::mutex, kStripes>>();
};

}  // namespace ggnn
