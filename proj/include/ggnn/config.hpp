#pragma once

#include <cstddef>
#include <cstdint>

namespace ggnn {

/// Capacities of the per-query cache. The best-list capacity is the query's k_out.
struct CacheGeometry {
    std::size_t prioq_size = 256;
    std::size_t visited_size = 512;
};

struct QueryConfig {
    std::size_t k_out = 10;
    /// Slack factor of the stopping rule, applied in squared-distance space.
    double tau = 0.6;
    std::size_t max_iterations = 4096;
    CacheGeometry cache;

    /// Throws ConfigError unless k_out >= 1, tau >= 0, max_iterations >= 1,
    /// prioq_size >= 2 * k_out and visited_size >= 1.
    void validate() const;
};

struct BuildConfig {
    std::uint32_t k = 24;
    std::uint32_t k_nn = 12;
    std::uint32_t k_sym = 12;
    /// Segment / bottom batch size.
    std::uint32_t s = 32;
    /// Sub-trees merged per level.
    std::uint32_t g = 4;
    std::uint32_t refinements = 2;
    double tau_build = 0.5;
    std::uint64_t seed = 7;
    /// 0 resolves through GGNN_THREADS / hardware concurrency; 1 is the deterministic profile.
    unsigned threads = 1;
    /// Expansion budget of the reachability check run before adding an inverse link.
    std::uint32_t path_check_budget = 16;
    /// Bottom-layer nodes sampled for the C@k estimate recorded in BuildStats (0 disables).
    std::uint32_t stats_sample = 64;
    std::uint32_t max_iterations = 4096;
    CacheGeometry cache;

    /// Throws ConfigError unless k_nn >= ceil(k/2), k_nn + k_sym == k, k_nn >= 1,
    /// s >= k_nn + 1, g >= 2 and tau_build >= 0.
    void validate() const;

    /// Settings for the construction-time queries.
    QueryConfig merge_query() const;
};

}  // namespace ggnn
