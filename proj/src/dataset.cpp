#include "ggnn/dataset.hpp"

#include <array>
#include <cmath>
#include <string>

namespace ggnn {

Dataset::Dataset(std::size_t n, std::size_t d, std::vector<float> elements)
    : n_(n), d_(d), elements_(std::move(elements)) {
    if (n_ == 0 || d_ == 0) throw ConfigError("dataset needs n >= 1 and d >= 1");
    if (elements_.size() != n_ * d_) {
        throw ConfigError("dataset element count " + std::to_string(elements_.size()) +
                          " != n*d = " + std::to_string(n_ * d_));
    }
    for (std::size_t i = 0; i < elements_.size(); ++i) {
        if (!std::isfinite(elements_[i])) {
            throw FormatError("non-finite value in row " + std::to_string(i / d_) +
                              ", column " + std::to_string(i % d_));
        }
    }
}

Dataset Dataset::subset(std::span<const NodeId> rows) const {
    std::vector<float> out;
    out.reserve(rows.size() * d_);
    for (NodeId r : rows) {
        auto v = row(r);
        out.insert(out.end(), v.begin(), v.end());
    }
    return Dataset(rows.size(), d_, std::move(out));
}

Dist distance(std::span<const float> a, std::span<const float> b) {
    constexpr std::size_t kLanes = 8;
    const std::size_t d = a.size();
    const float* pa = a.data();
    const float* pb = b.data();

    std::array<double, kLanes> acc{};
    std::size_t i = 0;
    for (; i + kLanes <= d; i += kLanes) {
        for (std::size_t j = 0; j < kLanes; ++j) {
            const double diff = static_cast<double>(pa[i + j]) - static_cast<double>(pb[i + j]);
            acc[j] += diff * diff;
        }
    }
    double tail = 0.0;
    for (; i < d; ++i) {
        const double diff = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
        tail += diff * diff;
    }
    const double sum = ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
                       ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail;
    return static_cast<Dist>(sum);
}

void check_compatible(const Dataset& base, const QuerySet& queries) {
    if (base.dim() != queries.dim()) {
        throw ConfigError("query dimension " + std::to_string(queries.dim()) +
                          " does not match dataset dimension " + std::to_string(base.dim()));
    }
}

}  // namespace ggnn
