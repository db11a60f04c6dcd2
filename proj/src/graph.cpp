#include "ggnn/graph.hpp"

#include <algorithm>
#include <atomic>
#include <string>

namespace ggnn {

AdjacencyLayer::AdjacencyLayer(std::size_t node_count, std::uint32_t k, std::uint32_t k_nn)
    : node_count_(node_count),
      k_(k),
      k_nn_(k_nn),
      adjacency_(node_count * k, kEmptySlot),
      nn_dists_(node_count * k_nn, kInfDist),
      sym_count_(node_count, 0),
      d_nn1_(node_count, kInfDist) {
    if (k_nn > k) throw ConfigError("k_nn must not exceed k");
    segment.assign(node_count, 0);
    segment_count = node_count > 0 ? 1 : 0;
}

AdjacencyLayer::AdjacencyLayer(const AdjacencyLayer& other)
    : segment(other.segment),
      segment_count(other.segment_count),
      node_count_(other.node_count_),
      k_(other.k_),
      k_nn_(other.k_nn_),
      adjacency_(other.adjacency_),
      nn_dists_(other.nn_dists_),
      sym_count_(other.sym_count_),
      d_nn1_(other.d_nn1_) {}

AdjacencyLayer& AdjacencyLayer::operator=(const AdjacencyLayer& other) {
    if (this != &other) {
        AdjacencyLayer copy(other);
        *this = std::move(copy);
    }
    return *this;
}

AdjacencyLayer AdjacencyLayer::from_raw(std::size_t node_count, std::uint32_t k, std::uint32_t k_nn,
                                        std::vector<NodeId> adjacency, std::vector<Dist> nn_dists,
                                        std::vector<std::uint32_t> sym_count, std::vector<Dist> d_nn1) {
    if (k_nn > k || adjacency.size() != node_count * k || nn_dists.size() != node_count * k_nn ||
        sym_count.size() != node_count || d_nn1.size() != node_count) {
        throw FormatError("adjacency layer arrays have inconsistent sizes");
    }
    AdjacencyLayer layer;
    layer.node_count_ = node_count;
    layer.k_ = k;
    layer.k_nn_ = k_nn;
    layer.adjacency_ = std::move(adjacency);
    layer.nn_dists_ = std::move(nn_dists);
    layer.sym_count_ = std::move(sym_count);
    layer.d_nn1_ = std::move(d_nn1);
    layer.segment.assign(node_count, 0);
    layer.segment_count = node_count > 0 ? 1 : 0;
    for (std::size_t i = 0; i < node_count; ++i) {
        if (layer.sym_count_[i] > layer.k_sym()) throw FormatError("sym_count exceeds k_sym");
    }
    return layer;
}

void AdjacencyLayer::check_node(NodeId node) const {
    if (node >= node_count_) {
        throw std::out_of_range("node id " + std::to_string(node) + " out of range (node_count " +
                                std::to_string(node_count_) + ")");
    }
}

std::uint32_t AdjacencyLayer::direct_count(NodeId node) const {
    const NodeId* s = adjacency_.data() + offset(node);
    std::uint32_t c = 0;
    while (c < k_nn_ && s[c] != kEmptySlot) ++c;
    return c;
}

std::uint32_t AdjacencyLayer::sym_count(NodeId node) const {
    return std::atomic_ref<std::uint32_t>(const_cast<std::uint32_t&>(sym_count_[node])).load(std::memory_order_acquire);
}

std::vector<NodeId> AdjacencyLayer::neighbors(NodeId node) const {
    check_node(node);
    auto d = direct(node);
    auto inv = inverse(node);
    std::vector<NodeId> out(d.begin(), d.end());
    out.insert(out.end(), inv.begin(), inv.end());
    return out;
}

bool AdjacencyLayer::contains_direct(NodeId node, NodeId candidate) const {
    auto d = direct(node);
    return std::find(d.begin(), d.end(), candidate) != d.end();
}

bool AdjacencyLayer::contains(NodeId node, NodeId candidate) const {
    if (contains_direct(node, candidate)) return true;
    auto inv = inverse(node);
    return std::find(inv.begin(), inv.end(), candidate) != inv.end();
}

void AdjacencyLayer::remove_inverse_locked(NodeId node, NodeId candidate) {
    NodeId* s = adjacency_.data() + offset(node) + k_nn_;
    std::uint32_t& count = sym_count_[node];
    auto* end = s + count;
    auto* it = std::find(s, end, candidate);
    if (it == end) return;
    std::move(it + 1, end, it);
    *(end - 1) = kEmptySlot;
    std::atomic_ref<std::uint32_t>(count).fetch_sub(1, std::memory_order_acq_rel);
}

InsertResult AdjacencyLayer::insert_nn(NodeId node, NodeId candidate, Dist dist) {
    check_node(node);
    check_node(candidate);
    if (node == candidate) throw std::invalid_argument("insert_nn: self link");

    NodeId* ids = adjacency_.data() + offset(node);
    Dist* dists = nn_dists_.data() + static_cast<std::size_t>(node) * k_nn_;
    const std::uint32_t filled = direct_count(node);
    if (std::find(ids, ids + filled, candidate) != ids + filled) return {};

    const Neighbor cand{candidate, dist};
    InsertResult result;
    if (filled == k_nn_) {
        if (k_nn_ == 0 || !closer(cand, Neighbor{ids[k_nn_ - 1], dists[k_nn_ - 1]})) return {};
        result.evicted = Neighbor{ids[k_nn_ - 1], dists[k_nn_ - 1]};
    }
    // Shift the worse tail right by one, dropping the last entry when full.
    std::uint32_t pos = std::min(filled, k_nn_ - 1);
    while (pos > 0 && closer(cand, Neighbor{ids[pos - 1], dists[pos - 1]})) {
        ids[pos] = ids[pos - 1];
        dists[pos] = dists[pos - 1];
        --pos;
    }
    ids[pos] = candidate;
    dists[pos] = dist;
    d_nn1_[node] = dists[0];
    result.improved = true;

    std::lock_guard lock(stripe(node));
    remove_inverse_locked(node, candidate);
    return result;
}

void AdjacencyLayer::set_direct(NodeId node, std::span<const Neighbor> sorted) {
    check_node(node);
    if (sorted.size() > k_nn_) throw std::invalid_argument("set_direct: more than k_nn entries");
    NodeId* ids = adjacency_.data() + offset(node);
    Dist* dists = nn_dists_.data() + static_cast<std::size_t>(node) * k_nn_;
    std::lock_guard lock(stripe(node));
    for (std::uint32_t i = 0; i < k_nn_; ++i) {
        if (i < sorted.size()) {
            if (sorted[i].id == node) throw std::invalid_argument("set_direct: self link");
            check_node(sorted[i].id);
            ids[i] = sorted[i].id;
            dists[i] = sorted[i].dist;
            remove_inverse_locked(node, sorted[i].id);
        } else {
            ids[i] = kEmptySlot;
            dists[i] = kInfDist;
        }
    }
    d_nn1_[node] = k_nn_ > 0 ? dists[0] : kInfDist;
}

SymReservation AdjacencyLayer::try_reserve_sym_slot(NodeId node, NodeId candidate) {
    check_node(node);
    check_node(candidate);
    if (node == candidate) return SymReservation::already_linked;
    std::lock_guard lock(stripe(node));
    if (contains(node, candidate)) return SymReservation::already_linked;
    std::atomic_ref<std::uint32_t> count(sym_count_[node]);
    const std::uint32_t slot = count.load(std::memory_order_relaxed);
    if (slot >= k_sym()) return SymReservation::full;
    adjacency_[offset(node) + k_nn_ + slot] = candidate;
    count.fetch_add(1, std::memory_order_release);
    return SymReservation::accepted;
}

void AdjacencyLayer::clear_inverse(NodeId node) {
    check_node(node);
    std::lock_guard lock(stripe(node));
    std::fill_n(adjacency_.begin() + static_cast<std::ptrdiff_t>(offset(node) + k_nn_), k_sym(), kEmptySlot);
    sym_count_[node] = 0;
}

Dist AdjacencyLayer::d_nn1_max() const {
    Dist m = 0;
    for (Dist v : d_nn1_) {
        if (v != kInfDist) m = std::max(m, v);
    }
    return m;
}

}  // namespace ggnn
