#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ggnn/types.hpp"

namespace ggnn {

/// Dense row-major n x d matrix of float vectors. Row i is the point with id i.
///
/// Immutable after construction; any number of threads may read concurrently.
class Dataset {
public:
    Dataset() = default;

    /// Takes ownership of `elements` (size must be n*d, all entries finite).
    /// Throws ConfigError on a shape mismatch, FormatError on NaN/Inf.
    Dataset(std::size_t n, std::size_t d, std::vector<float> elements);

    std::size_t size() const { return n_; }
    std::size_t dim() const { return d_; }
    bool empty() const { return n_ == 0; }

    std::span<const float> row(std::size_t i) const {
        return {elements_.data() + i * d_, d_};
    }
    std::span<const float> elements() const { return elements_; }

    /// Copies the given rows, in order, into a new dataset.
    Dataset subset(std::span<const NodeId> rows) const;

private:
    std::size_t n_ = 0;
    std::size_t d_ = 0;
    std::vector<float> elements_;
};

/// Query vectors share the representation of base vectors.
using QuerySet = Dataset;

/// Squared Euclidean distance, accumulated in double precision.
///
/// Lane-split accumulation with a fixed reduction order, so the result is
/// deterministic for a given input and build.
Dist distance(std::span<const float> a, std::span<const float> b);

/// Throws ConfigError unless queries.dim() == base.dim().
void check_compatible(const Dataset& base, const QuerySet& queries);

}  // namespace ggnn
