#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "ggnn/dataset.hpp"

namespace ggnn {

// TexMex record layouts, all little-endian:
//   fvecs: [int32 d][d x float32]
//   bvecs: [int32 d][d x uint8]
//   ivecs: [int32 k][k x int32]

enum class VecsFormat { fvecs, bvecs };

VecsFormat parse_vecs_format(std::string_view name);
std::string_view to_string(VecsFormat f);

/// Row-major table of ids, e.g. ground truth or query results.
struct IdTable {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<NodeId> ids;

    std::span<const NodeId> row(std::size_t i) const { return {ids.data() + i * cols, cols}; }
};

/// Loads every record of an fvecs/bvecs file. bvecs bytes are promoted to float.
/// Throws IoError if the file is missing and FormatError (with byte offset) on
/// truncation, non-positive or inconsistent dimensions, or an empty file.
Dataset load_vectors(const std::filesystem::path& path, VecsFormat format);

/// Writes the dataset in the given layout. bvecs requires integral values in [0, 255].
void write_vectors(const std::filesystem::path& path, const Dataset& data, VecsFormat format);

/// Loads an ivecs file; all records must share one length and hold non-negative ids.
IdTable load_ids(const std::filesystem::path& path);

void write_ids(const std::filesystem::path& path, const IdTable& table);

/// CRC-32 over the little-endian float32 elements, for identifying a dataset in reports.
std::uint32_t dataset_crc32(const Dataset& data);

}  // namespace ggnn
