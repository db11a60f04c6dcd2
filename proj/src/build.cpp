#include "ggnn/build.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ggnn/parallel.hpp"
#include "ggnn/search.hpp"
#include "ggnn/synthetic.hpp"

namespace ggnn {
namespace {

constexpr std::uint64_t kPartitionStream = 11;
constexpr std::uint64_t kSelectStream = 12;
constexpr std::uint64_t kSampleStream = 13;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t group_seed(std::uint64_t seed, std::uint32_t level, std::size_t group) {
    return seed + 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(level) * 1000003ull + group + 1);
}

struct SymRequest {
    NodeId owner;                   // node that should receive the inverse link
    std::vector<NodeId> fallback;   // checked path, closest to the target first
};

// Exact k_nn neighbors of sampled bottom nodes, for the C@k estimate in BuildStats.
struct ConsensusSample {
    std::vector<NodeId> nodes;
    std::vector<std::vector<NodeId>> exact;

    ConsensusSample(const Dataset& data, std::uint32_t k, std::uint32_t sample, std::uint64_t seed, unsigned threads) {
        const std::size_t n = data.size();
        if (sample == 0 || n < 2) return;
        std::vector<double> ones(n, 1.0);
        for (std::size_t i : select_points(ones, std::min<std::size_t>(sample, n), group_seed(seed, 0, kSampleStream))) {
            nodes.push_back(static_cast<NodeId>(i));
        }
        exact.resize(nodes.size());
        parallel_for(0, nodes.size(), threads, [&](std::size_t i, unsigned) {
            std::vector<Neighbor> all;
            all.reserve(n - 1);
            for (std::size_t j = 0; j < n; ++j) {
                if (j != nodes[i]) all.push_back({static_cast<NodeId>(j), distance(data.row(nodes[i]), data.row(j))});
            }
            const std::size_t kk = std::min<std::size_t>(k, all.size());
            std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(kk), all.end(), closer);
            for (std::size_t j = 0; j < kk; ++j) exact[i].push_back(all[j].id);
        });
    }

    double measure(const AdjacencyLayer& bottom) const {
        if (nodes.empty()) return -1.0;
        double total = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            const auto& gt = exact[i];
            auto built = bottom.direct(nodes[i]).first(std::min<std::size_t>(bottom.direct_count(nodes[i]), gt.size()));
            std::size_t hit = 0;
            for (NodeId id : gt) {
                if (std::find(built.begin(), built.end(), id) != built.end()) ++hit;
            }
            total += gt.empty() ? 1.0 : static_cast<double>(hit) / static_cast<double>(gt.size());
        }
        return total / static_cast<double>(nodes.size());
    }
};

}  // namespace

std::vector<std::vector<NodeId>> partition_batches(std::size_t n, std::size_t s, std::uint64_t seed) {
    if (n == 0 || s == 0) throw ConfigError("partition_batches needs n >= 1 and s >= 1");
    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), NodeId{0});
    auto rng = make_rng(seed, kPartitionStream);
    for (std::size_t i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(unit_double(rng) * static_cast<double>(i + 1));
        std::swap(order[i], order[std::min(j, i)]);
    }
    const std::size_t b = (n + s - 1) / s;
    const std::size_t base = n / b;
    const std::size_t extra = n % b;
    std::vector<std::vector<NodeId>> batches(b);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < b; ++i) {
        const std::size_t size = base + (i < extra ? 1 : 0);
        batches[i].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                          order.begin() + static_cast<std::ptrdiff_t>(pos + size));
        pos += size;
    }
    return batches;
}

bool build_base(AdjacencyLayer& layer, std::span<const NodeId> batch, const LayerPoints& points) {
    const std::size_t m = batch.size();
    const std::size_t k_eff = m == 0 ? 0 : std::min<std::size_t>(layer.k_nn(), m - 1);
    std::vector<Dist> table(m * m, 0);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const Dist d = distance(points(batch[i]), points(batch[j]));
            table[i * m + j] = d;
            table[j * m + i] = d;
        }
    }
    std::vector<Neighbor> row;
    for (std::size_t i = 0; i < m; ++i) {
        row.clear();
        for (std::size_t j = 0; j < m; ++j) {
            if (j != i) row.push_back({batch[j], table[i * m + j]});
        }
        std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k_eff), row.end(), closer);
        layer.set_direct(batch[i], std::span<const Neighbor>(row.data(), k_eff));
    }
    return k_eff < layer.k_nn();
}

std::vector<std::size_t> select_points(std::span<const double> weights, std::size_t count, std::uint64_t seed,
                                       bool* uniform_fallback) {
    if (count > weights.size()) throw std::invalid_argument("select_points: count exceeds candidate count");
    const bool all_zero = std::all_of(weights.begin(), weights.end(), [](double w) { return !(w > 0.0); });
    if (uniform_fallback) *uniform_fallback = all_zero && !weights.empty() && count < weights.size();

    struct Key {
        double key;
        double tie;
        std::size_t index;
    };
    auto rng = make_rng(seed, kSelectStream);
    std::vector<Key> keys(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] < 0.0) throw std::invalid_argument("select_points: negative weight");
        // log(u^(1/w)) = log(u)/w orders identically and does not underflow.
        const double u = 1.0 - unit_double(rng);
        double key;
        if (all_zero) key = std::log(u);
        else if (weights[i] > 0.0) key = std::log(u) / weights[i];
        else key = -std::numeric_limits<double>::infinity();
        keys[i] = {key, unit_double(rng), i};
    }
    auto better = [](const Key& a, const Key& b) {
        if (a.key != b.key) return a.key > b.key;
        if (a.tie != b.tie) return a.tie > b.tie;
        return a.index < b.index;
    };
    std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(count), keys.end(), better);
    std::vector<std::size_t> out(count);
    for (std::size_t i = 0; i < count; ++i) out[i] = keys[i].index;
    std::sort(out.begin(), out.end());
    return out;
}

GraphStats compute_stats(const Hierarchy& h) {
    GraphStats stats;
    if (h.layers.empty()) return stats;
    const auto& bottom = h.bottom();
    std::size_t filled = 0;
    double sum = 0.0;
    for (NodeId i = 0; i < bottom.node_count(); ++i) {
        const Dist d = bottom.d_nn1(i);
        if (d == kInfDist) continue;
        sum += d;
        stats.d_nn1_max = std::max(stats.d_nn1_max, static_cast<double>(d));
        ++filled;
    }
    stats.d_nn1_mean = filled > 0 ? sum / static_cast<double>(filled) : 0.0;
    return stats;
}

double mean_sym_usage(const AdjacencyLayer& layer) {
    if (layer.node_count() == 0) return 0.0;
    double total = 0.0;
    for (NodeId i = 0; i < layer.node_count(); ++i) total += layer.sym_count(i);
    return total / static_cast<double>(layer.node_count());
}

SymmetrizeStats symmetrize(Hierarchy& h, const Dataset& data, std::size_t layer_index, const BuildConfig& cfg) {
    AdjacencyLayer& layer = h.layers.at(layer_index);
    const std::size_t n = layer.node_count();
    const unsigned threads = resolve_threads(cfg.threads);
    const LayerPoints points(data, h, layer_index);
    const double slack = h.slack_cap(layer_index);

    QueryConfig path_cfg;
    path_cfg.k_out = 1;
    path_cfg.tau = cfg.tau_build;
    path_cfg.max_iterations = std::max<std::uint32_t>(cfg.path_check_budget, 1);
    path_cfg.cache = cfg.cache;

    struct Worker {
        SearchCache cache;
        std::vector<Dist> memo;
        std::vector<std::uint32_t> memo_epoch;
        std::uint32_t epoch = 0;
        std::vector<NodeId> path;
        SymmetrizeStats stats;
    };
    std::vector<Worker> workers(threads);
    for (auto& w : workers) {
        w.cache = SearchCache(cfg.cache);
        w.memo.assign(n, 0);
        w.memo_epoch.assign(n, 0);
    }

    // Phase 1 (read-only): decide which inverse links are needed.
    std::vector<std::vector<SymRequest>> requests(n);
    parallel_for(0, n, threads, [&](std::size_t xi, unsigned wi) {
        Worker& w = workers[wi];
        const auto x = static_cast<NodeId>(xi);
        const auto xv = points(x);
        // One distance memo per target: every check below shares the query x.
        if (++w.epoch == 0) {
            std::fill(w.memo_epoch.begin(), w.memo_epoch.end(), 0);
            w.epoch = 1;
        }
        auto dist_to_x = [&](NodeId id) {
            if (w.memo_epoch[id] != w.epoch) {
                w.memo_epoch[id] = w.epoch;
                w.memo[id] = distance(xv, points(id));
            }
            return w.memo[id];
        };
        for (NodeId z : layer.direct(x)) {
            if (layer.contains(z, x)) continue;
            ++w.stats.checked;
            const Neighbor seed{z, dist_to_x(z)};
            w.path.clear();
            auto res = search_layer(layer, std::span<const Neighbor>(&seed, 1), dist_to_x, path_cfg, slack, w.cache,
                                    &w.path);
            if (!res.hits.empty() && res.hits.front().id == x) {
                ++w.stats.reachable;
                continue;
            }
            SymRequest req{z, {}};
            for (NodeId p : w.path) {
                if (p != z && p != x) req.fallback.push_back(p);
            }
            std::stable_sort(req.fallback.begin(), req.fallback.end(), [&](NodeId a, NodeId b) {
                return closer(Neighbor{a, dist_to_x(a)}, Neighbor{b, dist_to_x(b)});
            });
            requests[x].push_back(std::move(req));
        }
    });

    // Phase 2: claim inverse slots. Sequential with one worker, so single-worker
    // builds are reproducible; concurrent claims rely on the atomic reservation.
    parallel_for(0, n, threads, [&](std::size_t xi, unsigned wi) {
        Worker& w = workers[wi];
        const auto x = static_cast<NodeId>(xi);
        for (const auto& req : requests[xi]) {
            const auto r = layer.try_reserve_sym_slot(req.owner, x);
            if (r == SymReservation::accepted) {
                ++w.stats.added;
                continue;
            }
            if (r == SymReservation::already_linked) continue;
            bool placed = false;
            for (NodeId alt : req.fallback) {
                const auto ra = layer.try_reserve_sym_slot(alt, x);
                if (ra == SymReservation::accepted) {
                    ++w.stats.overflowed;
                    placed = true;
                    break;
                }
                if (ra == SymReservation::already_linked) {
                    placed = true;
                    break;
                }
            }
            if (!placed) ++w.stats.dropped;
        }
    });

    SymmetrizeStats total;
    for (const auto& w : workers) {
        total.checked += w.stats.checked;
        total.reachable += w.stats.reachable;
        total.added += w.stats.added;
        total.overflowed += w.stats.overflowed;
        total.dropped += w.stats.dropped;
    }
    return total;
}

void merge_layer(Hierarchy& h, const Dataset& data, std::size_t layer_index, const BuildConfig& cfg) {
    const std::size_t top = h.layer_count() - 1;
    if (layer_index >= top) throw std::out_of_range("merge_layer: layer must lie below the top layer");
    AdjacencyLayer& layer = h.layers[layer_index];
    const AdjacencyLayer& top_layer = h.top();
    const unsigned threads = resolve_threads(cfg.threads);
    const QueryConfig qcfg = cfg.merge_query();
    const LayerPoints points(data, h, layer_index);

    std::vector<std::vector<NodeId>> members(std::max<std::uint32_t>(top_layer.segment_count, 1));
    for (NodeId i = 0; i < top_layer.node_count(); ++i) members.at(top_layer.segment[i]).push_back(i);
    std::uint64_t span = 1;
    for (std::size_t l = layer_index; l < top; ++l) span *= h.geometry.g;

    // Phase 1 (read-only): query every node from the top of its sub-tree.
    std::vector<std::vector<Neighbor>> found(layer.node_count());
    std::vector<SearchCache> caches(threads, SearchCache(cfg.cache));
    parallel_for(0, layer.node_count(), threads, [&](std::size_t pi, unsigned wi) {
        const auto p = static_cast<NodeId>(pi);
        const std::size_t segment = layer.segment[p] / span;
        const auto& start = members.at(std::min<std::size_t>(segment, members.size() - 1));
        auto res = descend(h, data, points(p), qcfg, top, start, layer_index, caches[wi]);
        for (const auto& hit : res.hits) {
            if (hit.id != p) found[pi].push_back(hit);
        }
    });

    // Phase 2: node-partitioned updates of the direct slots.
    parallel_for(0, layer.node_count(), threads, [&](std::size_t pi, unsigned) {
        for (const auto& hit : found[pi]) layer.insert_nn(static_cast<NodeId>(pi), hit.id, hit.dist);
    });
}

SymmetrizeStats refine_layer(Hierarchy& h, const Dataset& data, std::size_t layer_index, const BuildConfig& cfg) {
    merge_layer(h, data, layer_index, cfg);
    if (layer_index == 0) h.stats = compute_stats(h);
    h.refresh_layer_d_nn1_max();
    return symmetrize(h, data, layer_index, cfg);
}

Hierarchy init_bottom(const Dataset& data, const BuildConfig& cfg, const std::vector<std::vector<NodeId>>& batches,
                      BuildStats* stats) {
    Hierarchy h;
    h.config = cfg;
    h.geometry.s = cfg.s;
    h.geometry.g = cfg.g;
    h.geometry.bottom_batches = static_cast<std::uint32_t>(batches.size());
    h.geometry.layers = 1;
    h.dim = data.dim();
    AdjacencyLayer bottom(data.size(), cfg.k, cfg.k_nn);
    std::vector<char> seen(data.size(), 0);
    for (std::size_t b = 0; b < batches.size(); ++b) {
        for (NodeId id : batches[b]) {
            if (id >= data.size() || seen[id]) throw std::invalid_argument("init_bottom: batches must partition the dataset");
            seen[id] = 1;
            bottom.segment[id] = static_cast<std::uint32_t>(b);
        }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
        throw std::invalid_argument("init_bottom: batches must cover the dataset");
    }
    bottom.segment_count = static_cast<std::uint32_t>(batches.size());
    h.layers.push_back(std::move(bottom));
    h.to_lower.emplace_back();
    h.to_bottom.emplace_back();

    const LayerPoints points(data, h, 0);
    std::vector<char> reduced(batches.size(), 0);
    parallel_for(
        0, batches.size(), resolve_threads(cfg.threads),
        [&](std::size_t b, unsigned) { reduced[b] = build_base(h.layers[0], batches[b], points) ? 1 : 0; }, 1);
    if (stats) stats->reduced_knn_batches += static_cast<std::size_t>(std::count(reduced.begin(), reduced.end(), 1));

    h.stats = compute_stats(h);
    h.refresh_layer_d_nn1_max();
    symmetrize(h, data, 0, cfg);
    return h;
}

std::vector<std::vector<NodeId>> select_next_top(const Hierarchy& h, const BuildConfig& cfg, std::uint32_t level,
                                                 BuildStats* stats) {
    const std::size_t top = h.layer_count() - 1;
    const AdjacencyLayer& layer = h.top();
    const std::size_t groups = (layer.segment_count + h.geometry.g - 1) / h.geometry.g;
    std::vector<std::vector<NodeId>> candidates(groups);
    for (NodeId i = 0; i < layer.node_count(); ++i) candidates.at(layer.segment[i] / h.geometry.g).push_back(i);

    std::vector<std::vector<NodeId>> chosen(groups);
    for (std::size_t j = 0; j < groups; ++j) {
        const auto& cand = candidates[j];
        std::vector<double> weights(cand.size());
        for (std::size_t i = 0; i < cand.size(); ++i) {
            // Plain (not squared) nearest-neighbor distance as the sampling weight.
            const Dist d = h.bottom().d_nn1(h.bottom_id(top, cand[i]));
            weights[i] = d == kInfDist ? 0.0 : std::sqrt(static_cast<double>(d));
        }
        bool fallback = false;
        const std::size_t count = std::min<std::size_t>(cfg.s, cand.size());
        for (std::size_t idx : select_points(weights, count, group_seed(cfg.seed, level, j), &fallback)) {
            chosen[j].push_back(cand[idx]);
        }
        if (fallback && stats) ++stats->uniform_selection_fallbacks;
    }
    return chosen;
}

void add_top_layer(Hierarchy& h, const Dataset& data, const BuildConfig& cfg,
                   const std::vector<std::vector<NodeId>>& groups) {
    std::size_t total = 0;
    for (const auto& g : groups) total += g.size();
    AdjacencyLayer layer(total, cfg.k, cfg.k_nn);
    std::vector<NodeId> lower_ids;
    lower_ids.reserve(total);
    std::vector<std::vector<NodeId>> segments(groups.size());
    for (std::size_t j = 0; j < groups.size(); ++j) {
        for (NodeId lower : groups[j]) {
            segments[j].push_back(static_cast<NodeId>(lower_ids.size()));
            layer.segment[lower_ids.size()] = static_cast<std::uint32_t>(j);
            lower_ids.push_back(lower);
        }
    }
    layer.segment_count = static_cast<std::uint32_t>(groups.size());
    h.push_layer(std::move(layer), std::move(lower_ids));
    h.geometry.layers = static_cast<std::uint32_t>(h.layer_count());

    const std::size_t top = h.layer_count() - 1;
    const LayerPoints points(data, h, top);
    parallel_for(
        0, segments.size(), resolve_threads(cfg.threads),
        [&](std::size_t j, unsigned) { build_base(h.layers[top], segments[j], points); }, 1);
    h.refresh_layer_d_nn1_max();
    symmetrize(h, data, top, cfg);
}

std::pair<Hierarchy, BuildStats> build(const Dataset& data, const BuildConfig& config) {
    config.validate();
    if (data.size() < config.s) {
        throw ConfigError("dataset has " + std::to_string(data.size()) + " points, fewer than segment size s = " +
                          std::to_string(config.s));
    }
    BuildConfig cfg = config;
    cfg.threads = resolve_threads(config.threads);

    const auto t_start = Clock::now();
    BuildStats stats;
    const ConsensusSample sample(data, cfg.k_nn, cfg.stats_sample, cfg.seed, cfg.threads);

    auto batches = partition_batches(data.size(), cfg.s, cfg.seed);
    Hierarchy h = init_bottom(data, cfg, batches, &stats);
    stats.d_nn1_trajectory.push_back(h.stats);

    std::uint32_t level = 0;
    while (h.top().segment_count > 1) {
        ++level;
        add_top_layer(h, data, cfg, select_next_top(h, cfg, level, &stats));
        const std::size_t top = h.layer_count() - 1;
        for (std::size_t l = top; l-- > 0;) {
            for (std::uint32_t it = 0; it <= cfg.refinements; ++it) {
                const auto t0 = Clock::now();
                PassRecord rec;
                rec.level = level;
                rec.layer = static_cast<std::uint32_t>(l);
                rec.iteration = it;
                rec.sym = refine_layer(h, data, l, cfg);
                rec.seconds = seconds_since(t0);
                rec.mean_sym = mean_sym_usage(h.layers[l]);
                if (l == 0) rec.c_at_k = sample.measure(h.bottom());
                stats.passes.push_back(rec);
            }
        }
        stats.d_nn1_trajectory.push_back(h.stats);
    }

    h.stats = compute_stats(h);
    h.refresh_layer_d_nn1_max();
    h.config = config;
    for (const auto& layer : h.layers) stats.mean_sym_per_layer.push_back(mean_sym_usage(layer));
    stats.seconds = seconds_since(t_start);
    return {std::move(h), std::move(stats)};
}

}  // namespace ggnn
