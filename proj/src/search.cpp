#include "ggnn/search.hpp"

#include <algorithm>
#include <numeric>

#include "ggnn/parallel.hpp"

namespace ggnn {

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::stopping_rule: return "stopping-rule";
        case Termination::queue_empty: return "queue-empty";
        case Termination::iteration_cap: return "iteration-cap";
    }
    return "unknown";
}

bool stopping_check(double d_next, double d_best_k, double d_best_1, double d_nn1_max, double tau) {
    // An empty best list leaves the slack undefined; keep searching.
    if (d_best_1 == static_cast<double>(kInfDist)) return false;
    return d_next > d_best_k + tau * std::min(d_nn1_max, d_best_1);
}

std::vector<Neighbor> brute_force_top_k(std::span<const NodeId> candidates, const LayerPoints& points,
                                        std::span<const float> q, std::size_t k) {
    std::vector<Neighbor> all;
    all.reserve(candidates.size());
    for (NodeId id : candidates) all.push_back({id, distance(q, points(id))});
    const std::size_t keep = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), closer);
    all.resize(keep);
    return all;
}

QueryResult greedy_search(const AdjacencyLayer& layer, const LayerPoints& points, std::span<const Neighbor> seeds,
                          std::span<const float> q, const QueryConfig& cfg, double d_nn1_max, SearchCache& cache) {
    return search_layer(
        layer, seeds, [&](NodeId id) { return distance(q, points(id)); }, cfg, d_nn1_max, cache);
}

std::vector<Neighbor> top_layer_seeds(const Hierarchy& h, const Dataset& data, std::span<const float> q,
                                      std::size_t k_out) {
    const std::size_t top = h.layer_count() - 1;
    std::vector<NodeId> all(h.top().node_count());
    std::iota(all.begin(), all.end(), NodeId{0});
    auto seeds = brute_force_top_k(all, LayerPoints(data, h, top), q, k_out);
    for (auto& s : seeds) s.id = h.bottom_id(top, s.id);
    return seeds;
}

QueryResult query(const Hierarchy& h, const Dataset& data, std::span<const float> q, const QueryConfig& cfg,
                  SearchCache& cache) {
    auto seeds = top_layer_seeds(h, data, q, cfg.k_out);
    auto result = greedy_search(h.bottom(), LayerPoints(data, h, 0), seeds, q, cfg, h.slack_cap(0), cache);
    result.visited_count += h.top().node_count();
    return result;
}

QueryResult query(const Hierarchy& h, const Dataset& data, std::span<const float> q, const QueryConfig& cfg) {
    SearchCache cache(cfg.cache);
    return query(h, data, q, cfg, cache);
}

QueryResult descend(const Hierarchy& h, const Dataset& data, std::span<const float> q, const QueryConfig& cfg,
                    std::size_t start_layer, std::span<const NodeId> start_candidates, std::size_t end_layer,
                    SearchCache& cache) {
    if (start_layer >= h.layer_count() || end_layer > start_layer) throw std::out_of_range("descend: bad layer range");
    QueryResult result;
    result.hits = brute_force_top_k(start_candidates, LayerPoints(data, h, start_layer), q, cfg.k_out);
    result.visited_count = start_candidates.size();
    result.terminated_by = Termination::queue_empty;
    for (std::size_t layer = start_layer; layer > end_layer; --layer) {
        // Replicated points keep their distances one level down.
        for (auto& hit : result.hits) hit.id = h.to_lower[layer][hit.id];
        auto step = greedy_search(h.layers[layer - 1], LayerPoints(data, h, layer - 1), result.hits, q, cfg,
                                  h.slack_cap(layer - 1), cache);
        result.hits = std::move(step.hits);
        result.visited_count += step.visited_count;
        result.steps += step.steps;
        result.forgotten += step.forgotten;
        result.terminated_by = step.terminated_by;
    }
    return result;
}

QueryResult hierarchical_query(const Hierarchy& h, const Dataset& data, std::span<const float> q,
                               const QueryConfig& cfg, std::size_t start_layer, SearchCache& cache) {
    if (start_layer >= h.layer_count()) throw std::out_of_range("hierarchical_query: start layer out of range");
    std::vector<NodeId> all(h.layers[start_layer].node_count());
    std::iota(all.begin(), all.end(), NodeId{0});
    auto result = descend(h, data, q, cfg, start_layer, all, 0, cache);
    return result;
}

std::vector<QueryResult> query_batch(const Hierarchy& h, const Dataset& data, const QuerySet& queries,
                                     const QueryConfig& cfg, unsigned threads) {
    check_compatible(data, queries);
    cfg.validate();
    threads = resolve_threads(threads);
    std::vector<QueryResult> results(queries.size());
    std::vector<SearchCache> caches(threads, SearchCache(cfg.cache));
    parallel_for(0, queries.size(), threads, [&](std::size_t i, unsigned worker) {
        results[i] = query(h, data, queries.row(i), cfg, caches[worker]);
    });
    return results;
}

}  // namespace ggnn
