#include "ggnn/hierarchy.hpp"

#include <string>

namespace ggnn {

std::uint32_t layer_count(std::size_t bottom_batches, std::uint32_t g) {
    std::uint32_t layers = 1;
    std::size_t segments = bottom_batches;
    while (segments > 1) {
        segments = (segments + g - 1) / g;
        ++layers;
    }
    return layers;
}

void Hierarchy::push_layer(AdjacencyLayer layer, std::vector<NodeId> lower_ids) {
    if (layers.empty()) throw std::logic_error("push_layer: hierarchy has no bottom layer");
    if (layer.node_count() != lower_ids.size()) throw std::invalid_argument("push_layer: translation size mismatch");
    const std::size_t below = layers.size() - 1;
    std::vector<NodeId> bottom_ids(lower_ids.size());
    for (std::size_t i = 0; i < lower_ids.size(); ++i) {
        if (lower_ids[i] >= layers[below].node_count()) throw std::out_of_range("push_layer: translation out of range");
        bottom_ids[i] = bottom_id(below, lower_ids[i]);
    }
    if (to_lower.empty()) {
        to_lower.emplace_back();
        to_bottom.emplace_back();
    }
    layers.push_back(std::move(layer));
    to_lower.push_back(std::move(lower_ids));
    to_bottom.push_back(std::move(bottom_ids));
}

void Hierarchy::refresh_layer_d_nn1_max() {
    layer_d_nn1_max.resize(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) layer_d_nn1_max[l] = layers[l].d_nn1_max();
}

void Hierarchy::rebuild_translations() {
    to_lower.resize(layers.size());
    to_bottom.assign(layers.size(), {});
    for (std::size_t l = 1; l < layers.size(); ++l) {
        const auto& map = to_lower[l];
        if (map.size() != layers[l].node_count()) {
            throw FormatError("translation of layer " + std::to_string(l) + " has wrong length");
        }
        std::vector<char> seen(layers[l - 1].node_count(), 0);
        to_bottom[l].resize(map.size());
        for (std::size_t i = 0; i < map.size(); ++i) {
            if (map[i] >= seen.size()) throw FormatError("translation of layer " + std::to_string(l) + " out of range");
            if (seen[map[i]]) throw FormatError("translation of layer " + std::to_string(l) + " is not injective");
            seen[map[i]] = 1;
            to_bottom[l][i] = bottom_id(l - 1, map[i]);
        }
    }
}

}  // namespace ggnn
