#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "ggnn/dataset.hpp"
#include "ggnn/graph.hpp"
#include "ggnn/search.hpp"
#include "ggnn/vecs_io.hpp"

namespace ggnn {

/// Exhaustive top-k per query, ascending by (dist, id).
struct GroundTruth {
    std::size_t k = 0;
    std::vector<std::vector<Neighbor>> rows;

    std::size_t size() const { return rows.size(); }
    IdTable ids() const;
};

/// Exact scan of `data` for every query. Throws ConfigError if k_gt > n or k_gt == 0.
GroundTruth brute_force_oracle(const Dataset& data, const QuerySet& queries, std::size_t k_gt, unsigned threads = 1);

/// Exact kNN graph of `data` (self excluded): row i holds the k nearest other points.
std::vector<std::vector<Neighbor>> knn_graph_oracle(const Dataset& data, std::size_t k, unsigned threads = 1);

/// Wraps an id table (e.g. a published ivecs file) without distances.
GroundTruth ground_truth_from_ids(const IdTable& table);

/// R@k: fraction of queries whose true nearest neighbor (first gt id) appears
/// among the first k result ids. Throws std::invalid_argument on a length mismatch.
double recall_at(std::span<const std::vector<NodeId>> results, const GroundTruth& gt, std::size_t k);
double recall_at(std::span<const QueryResult> results, const GroundTruth& gt, std::size_t k);

/// k-recall@k: mean |first k results ∩ first k gt ids| / k.
double k_recall_at_k(std::span<const std::vector<NodeId>> results, const GroundTruth& gt, std::size_t k);

/// C@k: mean over nodes of the overlap of the first k direct links with the
/// oracle's k nearest, divided by k. Throws ConfigError if k > layer.k_nn() or
/// if the oracle rows are shorter than k, std::invalid_argument on a size mismatch.
double consensus_at_k(const AdjacencyLayer& layer, const std::vector<std::vector<Neighbor>>& oracle, std::size_t k);

/// Same, restricted to the listed nodes (oracle rows aligned with `nodes`).
double consensus_at_k(const AdjacencyLayer& layer, std::span<const NodeId> nodes,
                      const std::vector<std::vector<Neighbor>>& oracle, std::size_t k);

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& gt);
GroundTruth load_ground_truth(const std::filesystem::path& path);

/// Result ids per query, in rank order.
std::vector<std::vector<NodeId>> result_ids(std::span<const QueryResult> results);

}  // namespace ggnn
