#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "ggnn/config.hpp"
#include "ggnn/dataset.hpp"
#include "ggnn/hierarchy.hpp"

namespace ggnn {

/// Counters from one symmetrization pass.
struct SymmetrizeStats {
    std::size_t checked = 0;      // (node, neighbor) pairs that needed a reachability check
    std::size_t reachable = 0;    // check found an existing path
    std::size_t added = 0;        // inverse link stored at the intended node
    std::size_t overflowed = 0;   // stored at a later node on the checked path
    std::size_t dropped = 0;      // no node on the path had room
};

/// One merge or refinement pass over a layer.
struct PassRecord {
    std::uint32_t level = 0;      // hierarchy height when the pass ran
    std::uint32_t layer = 0;
    std::uint32_t iteration = 0;  // 0 = merge, 1.. = refinement
    double seconds = 0.0;
    double mean_sym = 0.0;        // mean used inverse slots after the pass
    /// C@k_nn of the bottom layer on the sampled nodes; negative when not measured.
    double c_at_k = -1.0;
    SymmetrizeStats sym;
};

struct BuildStats {
    std::vector<PassRecord> passes;
    /// Bottom-layer d_nn1 statistics after the base graphs and after every level.
    std::vector<GraphStats> d_nn1_trajectory;
    /// Mean used inverse slots per layer of the finished index.
    std::vector<double> mean_sym_per_layer;
    std::size_t reduced_knn_batches = 0;
    std::size_t uniform_selection_fallbacks = 0;
    double seconds = 0.0;
};

/// Seeded shuffle of 0..n-1 cut into ceil(n/s) contiguous batches whose sizes
/// differ by at most one (larger batches first).
std::vector<std::vector<NodeId>> partition_batches(std::size_t n, std::size_t s, std::uint64_t seed);

/// Exact kNN graph inside `batch` (layer-local ids): each member's direct slots
/// receive its min(k_nn, |batch|-1) nearest batch members. Returns true if the
/// batch was too small for k_nn.
bool build_base(AdjacencyLayer& layer, std::span<const NodeId> batch, const LayerPoints& points);

/// Weighted sampling without replacement (Efraimidis-Spirakis): each index gets
/// the key u^(1/w) and the `count` largest keys win. Returns ascending indices
/// into `weights`. Zero weights are only drawn once positive weights run out;
/// if every weight is zero the draw is uniform and `uniform_fallback` is set.
std::vector<std::size_t> select_points(std::span<const double> weights, std::size_t count, std::uint64_t seed,
                                       bool* uniform_fallback = nullptr);

/// Mean and maximum of the bottom-layer d_nn1 over nodes with a direct neighbor.
GraphStats compute_stats(const Hierarchy& h);

/// Adds inverse links so that each node is reachable from its direct neighbors.
/// For node x and direct neighbor z without a link z -> x, a budgeted greedy
/// search from z toward x decides whether a path already exists; if not, x is
/// reserved in z's inverse slots, or on the closest node of the checked path if
/// z is full.
SymmetrizeStats symmetrize(Hierarchy& h, const Dataset& data, std::size_t layer, const BuildConfig& cfg);

/// Queries every node of `layer` from its top-layer segment down to `layer` and
/// offers the results to its direct slots. Does not symmetrize.
void merge_layer(Hierarchy& h, const Dataset& data, std::size_t layer, const BuildConfig& cfg);

/// One refinement iteration: merge_layer followed by symmetrize.
SymmetrizeStats refine_layer(Hierarchy& h, const Dataset& data, std::size_t layer, const BuildConfig& cfg);

/// Bottom layer over `batches`, each turned into an exact base graph and symmetrized.
Hierarchy init_bottom(const Dataset& data, const BuildConfig& cfg, const std::vector<std::vector<NodeId>>& batches,
                      BuildStats* stats = nullptr);

/// Picks the next top layer: for every group of g top segments, s points chosen
/// by d_nn1-weighted sampling. Returns, per group, current-top-layer ids.
std::vector<std::vector<NodeId>> select_next_top(const Hierarchy& h, const BuildConfig& cfg, std::uint32_t level,
                                                 BuildStats* stats = nullptr);

/// Appends a top layer with one segment per entry of `groups` (ids in the current
/// top layer), builds each segment's exact graph and symmetrizes it.
void add_top_layer(Hierarchy& h, const Dataset& data, const BuildConfig& cfg,
                   const std::vector<std::vector<NodeId>>& groups);

/// Mean used inverse slots over the layer's nodes.
double mean_sym_usage(const AdjacencyLayer& layer);

/// Full bottom-up construction. Deterministic for a fixed (data, cfg) when cfg.threads == 1.
std::pair<Hierarchy, BuildStats> build(const Dataset& data, const BuildConfig& cfg);

}  // namespace ggnn
