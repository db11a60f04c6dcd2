#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "ggnn/dataset.hpp"
#include "ggnn/types.hpp"

namespace oracle {

/// Plain left-to-right double accumulation, one coordinate at a time.
double naive_distance(std::span<const float> a, std::span<const float> b);

/// Exhaustive top-k with naive distances, scanning points from the last id down.
std::vector<ggnn::Neighbor> naive_top_k(const ggnn::Dataset& data, std::span<const float> q, std::size_t k,
                                        std::optional<ggnn::NodeId> exclude = std::nullopt);

/// k nearest other points of every node, from naive_top_k.
std::vector<std::vector<ggnn::Neighbor>> naive_knn_graph(const ggnn::Dataset& data, std::size_t k);

/// Benchmark base/query pair with the rough statistics of SIFT descriptors:
/// a low-dimensional Gaussian-mixture latent mapped linearly to 128 dimensions,
/// clipped to be non-negative and quantized to integers in [0, 255].
struct SiftLike {
    ggnn::Dataset base;
    ggnn::Dataset queries;
};
SiftLike sift_like(std::size_t n, std::size_t m, std::uint64_t seed, std::size_t d = 128);

/// The benchmark files found under $GGNN_SIFTSMALL_DIR or <source>/data/siftsmall, if present.
struct SiftSmallFiles {
    std::filesystem::path base, queries, groundtruth;
};
std::optional<SiftSmallFiles> find_siftsmall();

}  // namespace oracle
