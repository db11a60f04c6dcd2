#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "ggnn/config.hpp"
#include "ggnn/dataset.hpp"
#include "ggnn/graph.hpp"
#include "ggnn/hierarchy.hpp"
#include "ggnn/search_cache.hpp"

namespace ggnn {

enum class Termination { stopping_rule, queue_empty, iteration_cap };
std::string_view to_string(Termination t);

struct QueryResult {
    /// Ascending by (dist, id), ids unique, at most k_out entries.
    std::vector<Neighbor> hits;
    /// Distance computations performed.
    std::size_t visited_count = 0;
    /// Pop-and-expand iterations.
    std::size_t steps = 0;
    Termination terminated_by = Termination::queue_empty;
    /// Ids that aged out of the cache and could have been recomputed.
    std::uint64_t forgotten = 0;
};

/// Stopping rule in squared-distance space:
///   d_next > d_best_k + tau * min(d_nn1_max, d_best_1)
/// The comparison is strict; equality continues the search.
bool stopping_check(double d_next, double d_best_k, double d_best_1, double d_nn1_max, double tau);

/// Greedy downhill search with backtracking on one layer.
///
/// `seeds` hold layer-local ids with precomputed distances; they become known
/// candidates and are expanded in distance order like any other. Each step pops
/// the best unexpanded candidate, stops if it violates the stopping rule, and
/// otherwise computes distances to its unknown neighbors, inserting those within
/// the current threshold. `dist_of(id)` returns the squared distance of a
/// layer-local node to the query. Expanded ids are appended to `path` if given.
template <typename DistFn>
QueryResult search_layer(const AdjacencyLayer& layer, std::span<const Neighbor> seeds, DistFn&& dist_of,
                         const QueryConfig& cfg, double d_nn1_max, SearchCache& cache,
                         std::vector<NodeId>* path = nullptr) {
    QueryResult result;
    cache.reset(cfg.k_out, layer.node_count());
    for (const auto& s : seeds) {
        if (s.id >= layer.node_count()) throw std::out_of_range("search seed id out of range");
        if (!cache.is_known(s.id)) cache.insert(s.id, s.dist);
    }

    auto threshold_exceeded = [&](double d) {
        return cache.best_full() && stopping_check(d, cache.best_k(), cache.best_1(), d_nn1_max, cfg.tau);
    };

    for (;;) {
        if (result.steps >= cfg.max_iterations) {
            result.terminated_by = cache.has_candidate() ? Termination::iteration_cap : Termination::queue_empty;
            break;
        }
        auto next = cache.pop_best();
        if (!next) {
            result.terminated_by = Termination::queue_empty;
            break;
        }
        if (threshold_exceeded(next->dist)) {
            result.terminated_by = Termination::stopping_rule;
            break;
        }
        ++result.steps;
        if (path) path->push_back(next->id);

        auto expand = [&](NodeId nb) {
            if (cache.is_known(nb)) return;
            const Dist d = dist_of(nb);
            ++result.visited_count;
            if (threshold_exceeded(d)) cache.mark_discarded(nb);
            else cache.insert(nb, d);
        };
        for (NodeId nb : layer.direct(next->id)) expand(nb);
        for (NodeId nb : layer.inverse(next->id)) expand(nb);
    }

    auto best = cache.best();
    result.hits.assign(best.begin(), best.end());
    result.forgotten = cache.forgotten();
    return result;
}

/// search_layer against a query vector; layer-local ids map to dataset rows via `points`.
QueryResult greedy_search(const AdjacencyLayer& layer, const LayerPoints& points, std::span<const Neighbor> seeds,
                          std::span<const float> q, const QueryConfig& cfg, double d_nn1_max, SearchCache& cache);

/// Brute force over every top-layer node; the k_out closest, translated to dataset ids.
std::vector<Neighbor> top_layer_seeds(const Hierarchy& h, const Dataset& data, std::span<const float> q,
                                      std::size_t k_out);

/// Final query mode: brute-force the top layer, then one greedy search on the bottom
/// layer seeded with those points. Hits carry dataset ids.
QueryResult query(const Hierarchy& h, const Dataset& data, std::span<const float> q, const QueryConfig& cfg,
                  SearchCache& cache);
QueryResult query(const Hierarchy& h, const Dataset& data, std::span<const float> q, const QueryConfig& cfg);

/// Brute force over `start_candidates` of `start_layer`, then greedy search on each
/// finer layer down to `end_layer`, seeded by the previous layer's best k_out.
/// Hits carry `end_layer`-local ids.
QueryResult descend(const Hierarchy& h, const Dataset& data, std::span<const float> q, const QueryConfig& cfg,
                    std::size_t start_layer, std::span<const NodeId> start_candidates, std::size_t end_layer,
                    SearchCache& cache);

/// Layer-by-layer query from `start_layer` (all of its nodes brute-forced) down to
/// the bottom. Hits carry dataset ids.
QueryResult hierarchical_query(const Hierarchy& h, const Dataset& data, std::span<const float> q,
                               const QueryConfig& cfg, std::size_t start_layer, SearchCache& cache);

/// Runs query() for every row of `queries` on `threads` workers. Per-query
/// results do not depend on the worker count.
std::vector<QueryResult> query_batch(const Hierarchy& h, const Dataset& data, const QuerySet& queries,
                                     const QueryConfig& cfg, unsigned threads);

/// Exhaustive top-k over `candidates` (ascending by (dist, id)).
std::vector<Neighbor> brute_force_top_k(std::span<const NodeId> candidates, const LayerPoints& points,
                                        std::span<const float> q, std::size_t k);

}  // namespace ggnn
