#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "ggnn/synthetic.hpp"

namespace oracle {

double naive_distance(std::span<const float> a, std::span<const float> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = static_cast<double>(a[i]) - static_cast<double>(b[i]);
        s += diff * diff;
    }
    return s;
}

std::vector<ggnn::Neighbor> naive_top_k(const ggnn::Dataset& data, std::span<const float> q, std::size_t k,
                                        std::optional<ggnn::NodeId> exclude) {
    std::vector<ggnn::Neighbor> all;
    for (std::size_t i = data.size(); i-- > 0;) {
        if (exclude && *exclude == i) continue;
        all.push_back({static_cast<ggnn::NodeId>(i), static_cast<float>(naive_distance(q, data.row(i)))});
    }
    std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        return a.dist < b.dist || (a.dist == b.dist && a.id < b.id);
    });
    all.resize(std::min(k, all.size()));
    return all;
}

std::vector<std::vector<ggnn::Neighbor>> naive_knn_graph(const ggnn::Dataset& data, std::size_t k) {
    std::vector<std::vector<ggnn::Neighbor>> g(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) g[i] = naive_top_k(data, data.row(i), k, static_cast<ggnn::NodeId>(i));
    return g;
}

SiftLike sift_like(std::size_t n, std::size_t m, std::uint64_t seed, std::size_t d) {
    constexpr std::size_t latent = 16;
    constexpr std::size_t clusters = 64;
    auto rng = ggnn::make_rng(seed, 0);

    std::vector<double> mix(d * latent);
    for (auto& w : mix) w = ggnn::normal_double(rng) * 6.0;
    std::vector<double> offset(d);
    for (auto& o : offset) o = 20.0 + 20.0 * ggnn::unit_double(rng);
    std::vector<double> centers(clusters * latent);
    for (auto& c : centers) c = ggnn::normal_double(rng) * 1.5;

    auto draw = [&](std::size_t count) {
        std::vector<float> out(count * d);
        std::vector<double> z(latent);
        for (std::size_t p = 0; p < count; ++p) {
            const auto c = static_cast<std::size_t>(ggnn::unit_double(rng) * clusters);
            for (std::size_t j = 0; j < latent; ++j) z[j] = centers[c * latent + j] + ggnn::normal_double(rng);
            for (std::size_t i = 0; i < d; ++i) {
                double v = offset[i] + 3.0 * ggnn::normal_double(rng);
                for (std::size_t j = 0; j < latent; ++j) v += mix[i * latent + j] * z[j];
                out[p * d + i] = static_cast<float>(std::clamp(std::round(v), 0.0, 255.0));
            }
        }
        return ggnn::Dataset(count, d, std::move(out));
    };
    SiftLike s{draw(n), draw(m)};
    return s;
}

std::optional<SiftSmallFiles> find_siftsmall() {
    std::vector<std::filesystem::path> roots;
    if (const char* env = std::getenv("GGNN_SIFTSMALL_DIR")) roots.emplace_back(env);
#ifdef GGNN_SOURCE_DIR
    roots.emplace_back(std::filesystem::path(GGNN_SOURCE_DIR) / "data" / "siftsmall");
#endif
    for (const auto& r : roots) {
        SiftSmallFiles f{r / "siftsmall_base.fvecs", r / "siftsmall_query.fvecs", r / "siftsmall_groundtruth.ivecs"};
        if (std::filesystem::exists(f.base) && std::filesystem::exists(f.queries) &&
            std::filesystem::exists(f.groundtruth)) {
            return f;
        }
    }
    return std::nullopt;
}

}  // namespace oracle
