#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "ggnn/dataset.hpp"

namespace ggnn {

/// Distribution for generated points.
struct SyntheticLaw {
    enum class Kind { uniform, gaussian, clustered };
    Kind kind = Kind::uniform;
    std::size_t clusters = 1;  // only used by Kind::clustered

    static SyntheticLaw uniform() { return {Kind::uniform, 1}; }
    static SyntheticLaw gaussian() { return {Kind::gaussian, 1}; }
    static SyntheticLaw clustered(std::size_t c) { return {Kind::clustered, c}; }
};

/// "uniform", "gaussian" or "clustered:<c>".
SyntheticLaw parse_synthetic_law(std::string_view spec);

/// Seeded 64-bit Mersenne Twister for stream `stream` of `seed`. Streams with
/// different indices are statistically independent, which lets callers split
/// one user-visible seed across unrelated consumers.
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t stream = 0);

/// Uniform double in [0, 1) from 53 random bits. Portable across standard libraries.
double unit_double(std::mt19937_64& rng);

/// Standard normal draw (Box-Muller over unit_double).
double normal_double(std::mt19937_64& rng);

/// Deterministic for fixed (n, d, seed, law).
///  - uniform:      coordinates in [0, 1)
///  - gaussian:     coordinates ~ N(0, 1)
///  - clustered(c): c centers ~ N(0, 10^2) per coordinate, points = center + N(0, 1)
Dataset gen_synthetic(std::size_t n, std::size_t d, std::uint64_t seed, SyntheticLaw law);

}  // namespace ggnn
