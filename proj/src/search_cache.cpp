#include "ggnn/search_cache.hpp"

#include <algorithm>

namespace ggnn {

void SearchCache::reset(std::size_t k_out, std::size_t node_count) {
    k_out_ = std::max<std::size_t>(k_out, 1);
    if (epoch_.size() < node_count) {
        epoch_.resize(node_count, 0);
        flags_.resize(node_count, 0);
    }
    if (++epoch_now_ == 0) {
        std::fill(epoch_.begin(), epoch_.end(), 0);
        epoch_now_ = 1;
    }
    best_.clear();
    best_.reserve(k_out_ + 1);
    pq_.assign(std::max<std::size_t>(geometry_.prioq_size, 1), Neighbor{});
    pq_head_ = 0;
    pq_size_ = 0;
    ring_.assign(std::max<std::size_t>(geometry_.visited_size, 1), kEmptySlot);
    ring_pos_ = 0;
    ring_size_ = 0;
    forgotten_ = 0;
}

std::uint8_t& SearchCache::flags(NodeId id) {
    if (epoch_[id] != epoch_now_) {
        epoch_[id] = epoch_now_;
        flags_[id] = 0;
    }
    return flags_[id];
}

void SearchCache::ring_push(NodeId id) {
    std::uint8_t& f = flags(id);
    if (f & kInRing) return;
    if (ring_size_ == ring_.size()) {
        const NodeId old = ring_[ring_pos_];
        std::uint8_t& of = flags(old);
        of &= static_cast<std::uint8_t>(~kInRing);
        if ((of & (kInBest | kInPrioq)) == 0) {
            of = 0;
            ++forgotten_;
        }
    } else {
        ++ring_size_;
    }
    ring_[ring_pos_] = id;
    ring_pos_ = (ring_pos_ + 1) % ring_.size();
    f |= kInRing;
}

void SearchCache::prioq_push(Neighbor n) {
    const std::size_t cap = pq_.size();
    if (pq_size_ == cap) {
        Neighbor& worst = prioq_at(pq_size_ - 1);
        if (!closer(n, worst)) {
            ring_push(n.id);
            return;
        }
        flags(worst.id) &= static_cast<std::uint8_t>(~kInPrioq);
        ring_push(worst.id);
        --pq_size_;
    }
    // Binary search over the logical (head-relative) positions, then shift the tail.
    std::size_t lo = 0, hi = pq_size_;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (closer(prioq_at(mid), n)) lo = mid + 1;
        else hi = mid;
    }
    for (std::size_t i = pq_size_; i > lo; --i) prioq_at(i) = prioq_at(i - 1);
    prioq_at(lo) = n;
    ++pq_size_;
    flags(n.id) |= kInPrioq;
}

void SearchCache::insert(NodeId id, Dist dist) {
    const Neighbor n{id, dist};
    if (best_.size() < k_out_ || closer(n, best_.back())) {
        best_.insert(std::upper_bound(best_.begin(), best_.end(), n, closer), n);
        flags(id) |= kInBest;
        if (best_.size() > k_out_) {
            const Neighbor displaced = best_.back();
            best_.pop_back();
            std::uint8_t& f = flags(displaced.id);
            f &= static_cast<std::uint8_t>(~kInBest);
            if (f & kExpanded) ring_push(displaced.id);
            else prioq_push(displaced);
        }
        return;
    }
    prioq_push(n);
}

void SearchCache::mark_discarded(NodeId id) { ring_push(id); }

bool SearchCache::has_candidate() const {
    if (pq_size_ > 0) return true;
    return std::any_of(best_.begin(), best_.end(), [&](const Neighbor& b) { return !was_expanded(b.id); });
}

std::optional<Neighbor> SearchCache::pop_best() {
    const Neighbor* from_best = nullptr;
    for (const auto& b : best_) {
        if (!was_expanded(b.id)) {
            from_best = &b;
            break;
        }
    }
    std::optional<Neighbor> out;
    if (pq_size_ > 0 && (from_best == nullptr || closer(prioq_at(0), *from_best))) {
        out = prioq_at(0);
        pq_head_ = (pq_head_ + 1) % pq_.size();
        --pq_size_;
        flags(out->id) &= static_cast<std::uint8_t>(~kInPrioq);
    } else if (from_best != nullptr) {
        out = *from_best;
    } else {
        return std::nullopt;
    }
    flags(out->id) |= kExpanded;
    ring_push(out->id);
    return out;
}

}  // namespace ggnn
