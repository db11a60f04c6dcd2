#include "ggnn/eval.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "ggnn/parallel.hpp"

namespace ggnn {
namespace {

// Keeps the k smallest of `all` (by closer) in ascending order.
void keep_top(std::vector<Neighbor>& all, std::size_t k) {
    const std::size_t keep = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(), closer);
    all.resize(keep);
}

void check_rows(std::size_t results, const GroundTruth& gt) {
    if (results != gt.size()) {
        throw std::invalid_argument("result count " + std::to_string(results) + " does not match ground truth count " +
                                    std::to_string(gt.size()));
    }
}

}  // namespace

IdTable GroundTruth::ids() const {
    IdTable t;
    t.rows = rows.size();
    t.cols = k;
    t.ids.reserve(t.rows * t.cols);
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < k; ++j) t.ids.push_back(j < r.size() ? r[j].id : kEmptySlot);
    }
    return t;
}

GroundTruth brute_force_oracle(const Dataset& data, const QuerySet& queries, std::size_t k_gt, unsigned threads) {
    check_compatible(data, queries);
    if (k_gt == 0 || k_gt > data.size()) {
        throw ConfigError("k_gt must be in [1, n]; got " + std::to_string(k_gt));
    }
    GroundTruth gt;
    gt.k = k_gt;
    gt.rows.resize(queries.size());
    parallel_for(0, queries.size(), resolve_threads(threads), [&](std::size_t qi, unsigned) {
        const auto q = queries.row(qi);
        std::vector<Neighbor> all(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) all[i] = {static_cast<NodeId>(i), distance(q, data.row(i))};
        keep_top(all, k_gt);
        gt.rows[qi] = std::move(all);
    }, 1);
    return gt;
}

std::vector<std::vector<Neighbor>> knn_graph_oracle(const Dataset& data, std::size_t k, unsigned threads) {
    if (k == 0 || k >= data.size()) throw ConfigError("knn graph needs 1 <= k < n");
    std::vector<std::vector<Neighbor>> graph(data.size());
    parallel_for(0, data.size(), resolve_threads(threads), [&](std::size_t x, unsigned) {
        std::vector<Neighbor> all;
        all.reserve(data.size() - 1);
        const auto p = data.row(x);
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (i != x) all.push_back({static_cast<NodeId>(i), distance(p, data.row(i))});
        }
        keep_top(all, k);
        graph[x] = std::move(all);
    });
    return graph;
}

GroundTruth ground_truth_from_ids(const IdTable& table) {
    GroundTruth gt;
    gt.k = table.cols;
    gt.rows.resize(table.rows);
    for (std::size_t i = 0; i < table.rows; ++i) {
        for (NodeId id : table.row(i)) gt.rows[i].push_back({id, kInfDist});
    }
    return gt;
}

double recall_at(std::span<const std::vector<NodeId>> results, const GroundTruth& gt, std::size_t k) {
    check_rows(results.size(), gt);
    if (results.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (gt.rows[i].empty()) continue;
        const NodeId target = gt.rows[i].front().id;
        const auto& r = results[i];
        const auto end = r.begin() + static_cast<std::ptrdiff_t>(std::min(k, r.size()));
        if (std::find(r.begin(), end, target) != end) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(results.size());
}

double recall_at(std::span<const QueryResult> results, const GroundTruth& gt, std::size_t k) {
    const auto ids = result_ids(results);
    return recall_at(std::span<const std::vector<NodeId>>(ids), gt, k);
}

double k_recall_at_k(std::span<const std::vector<NodeId>> results, const GroundTruth& gt, std::size_t k) {
    check_rows(results.size(), gt);
    if (results.empty() || k == 0) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        const auto& g = gt.rows[i];
        const std::size_t gk = std::min(k, g.size());
        std::size_t found = 0;
        for (std::size_t j = 0; j < std::min(k, r.size()); ++j) {
            for (std::size_t t = 0; t < gk; ++t) {
                if (g[t].id == r[j]) {
                    ++found;
                    break;
                }
            }
        }
        total += static_cast<double>(found) / static_cast<double>(k);
    }
    return total / static_cast<double>(results.size());
}

double consensus_at_k(const AdjacencyLayer& layer, std::span<const NodeId> nodes,
                      const std::vector<std::vector<Neighbor>>& oracle, std::size_t k) {
    if (k == 0 || k > layer.k_nn()) {
        throw ConfigError("C@k needs 1 <= k <= k_nn (" + std::to_string(layer.k_nn()) + "); got " + std::to_string(k));
    }
    if (nodes.size() != oracle.size()) throw std::invalid_argument("oracle rows do not match node count");
    if (nodes.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (oracle[i].size() < k) throw ConfigError("oracle row shorter than k");
        const auto built = layer.direct(nodes[i]);
        const std::size_t bk = std::min<std::size_t>(k, built.size());
        std::size_t overlap = 0;
        for (std::size_t t = 0; t < k; ++t) {
            if (std::find(built.begin(), built.begin() + static_cast<std::ptrdiff_t>(bk), oracle[i][t].id) !=
                built.begin() + static_cast<std::ptrdiff_t>(bk)) {
                ++overlap;
            }
        }
        total += static_cast<double>(overlap) / static_cast<double>(k);
    }
    return total / static_cast<double>(nodes.size());
}

double consensus_at_k(const AdjacencyLayer& layer, const std::vector<std::vector<Neighbor>>& oracle, std::size_t k) {
    if (oracle.size() != layer.node_count()) throw std::invalid_argument("oracle graph size does not match layer");
    std::vector<NodeId> all(layer.node_count());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<NodeId>(i);
    return consensus_at_k(layer, all, oracle, k);
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruth& gt) { write_ids(path, gt.ids()); }

GroundTruth load_ground_truth(const std::filesystem::path& path) { return ground_truth_from_ids(load_ids(path)); }

std::vector<std::vector<NodeId>> result_ids(std::span<const QueryResult> results) {
    std::vector<std::vector<NodeId>> out(results.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
        for (const auto& h : results[i].hits) out[i].push_back(h.id);
    }
    return out;
}

}  // namespace ggnn
