#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ggnn/config.hpp"
#include "ggnn/dataset.hpp"
#include "ggnn/graph.hpp"

namespace ggnn {

/// Squared nearest-neighbor distance statistics of the bottom layer.
struct GraphStats {
    double d_nn1_mean = 0.0;
    /// Dataset-wide maximum; bounds the stopping-rule slack.
    double d_nn1_max = 0.0;
};

struct HierarchyGeometry {
    std::uint32_t s = 0;
    std::uint32_t g = 0;
    std::uint32_t layers = 0;
    std::uint32_t bottom_batches = 0;
};

/// Number of layers for `bottom_batches` batches merged `g` at a time: 1 + ceil(log_g(b)).
std::uint32_t layer_count(std::size_t bottom_batches, std::uint32_t g);

/// Stack of adjacency layers; index 0 is the full dataset, the last index is the top.
///
/// Upper-layer nodes are replicas of bottom points. to_lower[l][i] is the id of
/// layer-l node i inside layer l-1; to_bottom[l][i] is its dataset id.
struct Hierarchy {
    std::vector<AdjacencyLayer> layers;
    std::vector<std::vector<NodeId>> to_lower;
    std::vector<std::vector<NodeId>> to_bottom;
    HierarchyGeometry geometry;
    /// Dimensionality of the dataset the index was built on.
    std::size_t dim = 0;
    GraphStats stats;
    BuildConfig config;
    /// Per-layer maximum of d_nn1, used as the slack cap when searching upper layers.
    std::vector<double> layer_d_nn1_max;

    std::size_t layer_count() const { return layers.size(); }
    const AdjacencyLayer& bottom() const { return layers.front(); }
    const AdjacencyLayer& top() const { return layers.back(); }

    /// Dataset id of node `local` in layer `layer`.
    NodeId bottom_id(std::size_t layer, NodeId local) const {
        return layer == 0 ? local : to_bottom[layer][local];
    }

    /// Slack cap for searches on `layer`: the dataset statistic on the bottom,
    /// the layer's own d_nn1 maximum above it.
    double slack_cap(std::size_t layer) const {
        if (layer == 0 || layer >= layer_d_nn1_max.size()) return stats.d_nn1_max;
        return layer_d_nn1_max[layer];
    }
    void refresh_layer_d_nn1_max();

    /// Appends a layer whose node i is node `lower_ids[i]` of the current top layer.
    void push_layer(AdjacencyLayer layer, std::vector<NodeId> lower_ids);

    /// Rebuilds to_bottom from to_lower. Throws FormatError if a translation is
    /// out of range or not injective.
    void rebuild_translations();
};

/// Reads layer-local nodes as dataset vectors.
class LayerPoints {
public:
    LayerPoints(const Dataset& data, const Hierarchy& h, std::size_t layer)
        : data_(&data), map_(layer == 0 ? std::span<const NodeId>{} : std::span<const NodeId>(h.to_bottom[layer])) {}

    std::span<const float> operator()(NodeId local) const {
        return data_->row(map_.empty() ? local : map_[local]);
    }

private:
    const Dataset* data_;
    std::span<const NodeId> map_;
};

}  // namespace ggnn
