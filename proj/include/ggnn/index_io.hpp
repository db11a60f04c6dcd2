#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ggnn/hierarchy.hpp"

namespace ggnn {

inline constexpr std::uint32_t kIndexVersion = 1;

// Index file layout (little-endian throughout):
//
//   "GGNN" | u32 version | u32 flags | count n | u32 d | u32 l | u32 s | u32 g
//          | u32 k | u32 k_nn | u32 k_sym
//   then tagged sections, each [4-byte tag][u64 payload bytes][payload]:
//     "CONF"      build configuration
//     "LAYR" x l  count node_count | u32 segment_count | u32 adjacency[node_count*k]
//                 | f32 nn_dists[node_count*k_nn] | u32 sym_count[node_count]
//                 | f32 d_nn1[node_count] | u32 segment[node_count]
//     "TRAN"      for layers 1..l-1: count length | u32 to_lower[length]
//     "STAT"      f64 d_nn1_mean | f64 d_nn1_max
//     "CRC "      u32 CRC-32 of every preceding byte
//
// "count" fields are u32, or u64 when flags bit 0 is set (n >= 2^31).

std::vector<unsigned char> serialize_index(const Hierarchy& h);
Hierarchy deserialize_index(const std::vector<unsigned char>& bytes);

void save_index(const Hierarchy& h, const std::filesystem::path& path);

/// Throws IoError if unreadable and FormatError on bad magic, version mismatch,
/// checksum failure, truncation or inconsistent section lengths.
Hierarchy load_index(const std::filesystem::path& path);

}  // namespace ggnn
