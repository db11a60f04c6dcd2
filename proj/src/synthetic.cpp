#include "ggnn/synthetic.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <string>

namespace ggnn {

SyntheticLaw parse_synthetic_law(std::string_view spec) {
    if (spec == "uniform") return SyntheticLaw::uniform();
    if (spec == "gaussian") return SyntheticLaw::gaussian();
    constexpr std::string_view prefix = "clustered:";
    if (spec.starts_with(prefix)) {
        std::size_t c = 0;
        auto rest = spec.substr(prefix.size());
        auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), c);
        if (ec == std::errc() && ptr == rest.data() + rest.size() && c >= 1) return SyntheticLaw::clustered(c);
    }
    throw ConfigError("unknown synthetic law '" + std::string(spec) + "'");
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return std::mt19937_64(seq);
}

double unit_double(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double normal_double(std::mt19937_64& rng) {
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - unit_double(rng);
    const double u2 = unit_double(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Dataset gen_synthetic(std::size_t n, std::size_t d, std::uint64_t seed, SyntheticLaw law) {
    if (n == 0 || d == 0) throw ConfigError("gen_synthetic needs n >= 1 and d >= 1");
    std::vector<float> values(n * d);
    switch (law.kind) {
        case SyntheticLaw::Kind::uniform: {
            auto rng = make_rng(seed, 0);
            for (auto& v : values) v = static_cast<float>(unit_double(rng));
            break;
        }
        case SyntheticLaw::Kind::gaussian: {
            auto rng = make_rng(seed, 0);
            for (auto& v : values) v = static_cast<float>(normal_double(rng));
            break;
        }
        case SyntheticLaw::Kind::clustered: {
            if (law.clusters == 0) throw ConfigError("clustered law needs at least one cluster");
            auto center_rng = make_rng(seed, 1);
            std::vector<double> centers(law.clusters * d);
            for (auto& c : centers) c = 10.0 * normal_double(center_rng);
            auto point_rng = make_rng(seed, 2);
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t c = static_cast<std::size_t>(unit_double(point_rng) * law.clusters);
                for (std::size_t j = 0; j < d; ++j) {
                    values[i * d + j] = static_cast<float>(centers[c * d + j] + normal_double(point_rng));
                }
            }
            break;
        }
    }
    return Dataset(n, d, std::move(values));
}

}  // namespace ggnn
