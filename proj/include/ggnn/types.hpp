#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace ggnn {

using NodeId = std::uint32_t;
using Dist = float;

/// Marks an unused adjacency slot. Never a valid node id.
inline constexpr NodeId kEmptySlot = std::numeric_limits<NodeId>::max();
inline constexpr Dist kInfDist = std::numeric_limits<Dist>::infinity();

/// A candidate point together with its squared distance to some reference.
struct Neighbor {
    NodeId id = kEmptySlot;
    Dist dist = kInfDist;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Total order used everywhere: ascending distance, ties broken by ascending id.
inline bool closer(const Neighbor& a, const Neighbor& b) {
    if (a.dist != b.dist) return a.dist < b.dist;
    return a.id < b.id;
}

/// Invalid user input: bad configuration values, inconsistent arguments.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or truncated files.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Missing files and OS-level IO failures.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ggnn
