#include "ggnn/config.hpp"

#include <cmath>
#include <string>

#include "ggnn/types.hpp"

namespace ggnn {

void QueryConfig::validate() const {
    if (k_out < 1) throw ConfigError("k_out must be >= 1");
    if (!(tau >= 0.0) || !std::isfinite(tau)) throw ConfigError("tau must be a finite value >= 0");
    if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
    if (cache.prioq_size < 2 * k_out) {
        throw ConfigError("prioq_size " + std::to_string(cache.prioq_size) + " must be >= 2*k_out = " +
                          std::to_string(2 * k_out));
    }
    if (cache.visited_size < 1) throw ConfigError("visited_size must be >= 1");
}

void BuildConfig::validate() const {
    if (k_nn < 1) throw ConfigError("k_nn must be >= 1");
    if (k_nn + k_sym != k) {
        throw ConfigError("k_nn + k_sym must equal k (" + std::to_string(k_nn) + " + " + std::to_string(k_sym) +
                          " != " + std::to_string(k) + ")");
    }
    if (k_nn < (k + 1) / 2) {
        throw ConfigError("k_nn must be >= ceil(k/2) (k_nn=" + std::to_string(k_nn) + ", k=" + std::to_string(k) + ")");
    }
    if (s < k_nn + 1) throw ConfigError("segment size s must be >= k_nn + 1");
    if (g < 2) throw ConfigError("branching factor g must be >= 2");
    if (!(tau_build >= 0.0) || !std::isfinite(tau_build)) throw ConfigError("tau_build must be a finite value >= 0");
    if (max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
    merge_query().validate();
}

QueryConfig BuildConfig::merge_query() const {
    QueryConfig q;
    // One extra slot: the point being merged always finds itself.
    q.k_out = k_nn + 1;
    q.tau = tau_build;
    q.max_iterations = max_iterations;
    q.cache = cache;
    return q;
}

}  // namespace ggnn
