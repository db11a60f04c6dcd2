#include "ggnn/vecs_io.hpp"

#include <zlib.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace ggnn {
namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("dataset not found: " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    out.push_back(static_cast<unsigned char>(v & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    out.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

[[noreturn]] void fail_at(const std::filesystem::path& path, std::size_t offset, const std::string& what) {
    throw FormatError(path.string() + ": " + what + " at byte offset " + std::to_string(offset));
}

void write_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

// Walks the [int32 len][len x elem] records and hands each payload to `on_record`.
// Returns (record count, record length).
template <typename OnRecord>
std::pair<std::size_t, std::size_t> scan_records(const std::filesystem::path& path,
                                                 const std::vector<unsigned char>& bytes,
                                                 std::size_t elem_size, OnRecord&& on_record) {
    if (bytes.empty()) fail_at(path, 0, "no records");
    std::size_t offset = 0;
    std::size_t count = 0;
    std::int64_t dim = -1;
    while (offset < bytes.size()) {
        if (bytes.size() - offset < 4) fail_at(path, offset, "truncated record header");
        const auto len = static_cast<std::int32_t>(get_u32(bytes.data() + offset));
        if (len <= 0) fail_at(path, offset, "non-positive dimension " + std::to_string(len));
        if (dim >= 0 && len != dim) {
            fail_at(path, offset,
                    "inconsistent dimension " + std::to_string(len) + " (expected " + std::to_string(dim) + ")");
        }
        dim = len;
        const std::size_t payload = static_cast<std::size_t>(len) * elem_size;
        if (bytes.size() - offset - 4 < payload) fail_at(path, offset, "truncated record");
        on_record(bytes.data() + offset + 4, static_cast<std::size_t>(len), offset);
        offset += 4 + payload;
        ++count;
    }
    return {count, static_cast<std::size_t>(dim)};
}

}  // namespace

VecsFormat parse_vecs_format(std::string_view name) {
    if (name == "fvecs") return VecsFormat::fvecs;
    if (name == "bvecs") return VecsFormat::bvecs;
    throw ConfigError("unknown vector format '" + std::string(name) + "' (expected fvecs or bvecs)");
}

std::string_view to_string(VecsFormat f) { return f == VecsFormat::fvecs ? "fvecs" : "bvecs"; }

Dataset load_vectors(const std::filesystem::path& path, VecsFormat format) {
    const auto bytes = read_file(path);
    const std::size_t elem = format == VecsFormat::fvecs ? 4 : 1;
    std::vector<float> values;
    values.reserve(bytes.size() / elem);
    auto [n, d] = scan_records(path, bytes, elem, [&](const unsigned char* p, std::size_t len, std::size_t offset) {
        for (std::size_t j = 0; j < len; ++j) {
            float v;
            if (format == VecsFormat::fvecs) {
                v = std::bit_cast<float>(get_u32(p + 4 * j));
                if (!std::isfinite(v)) fail_at(path, offset + 4 + 4 * j, "non-finite value");
            } else {
                v = static_cast<float>(p[j]);
            }
            values.push_back(v);
        }
    });
    return Dataset(n, d, std::move(values));
}

void write_vectors(const std::filesystem::path& path, const Dataset& data, VecsFormat format) {
    std::vector<unsigned char> out;
    const std::size_t d = data.dim();
    out.reserve(data.size() * (4 + d * (format == VecsFormat::fvecs ? 4 : 1)));
    for (std::size_t i = 0; i < data.size(); ++i) {
        put_u32(out, static_cast<std::uint32_t>(d));
        for (float v : data.row(i)) {
            if (format == VecsFormat::fvecs) {
                put_u32(out, std::bit_cast<std::uint32_t>(v));
            } else {
                if (v < 0.0f || v > 255.0f || v != std::floor(v)) {
                    throw ConfigError("value " + std::to_string(v) + " in row " + std::to_string(i) +
                                      " is not representable as bvecs byte");
                }
                out.push_back(static_cast<unsigned char>(v));
            }
        }
    }
    write_file(path, out);
}

IdTable load_ids(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    IdTable table;
    auto [rows, cols] = scan_records(path, bytes, 4, [&](const unsigned char* p, std::size_t len, std::size_t offset) {
        for (std::size_t j = 0; j < len; ++j) {
            const auto id = static_cast<std::int32_t>(get_u32(p + 4 * j));
            if (id < 0) fail_at(path, offset + 4 + 4 * j, "negative index " + std::to_string(id));
            table.ids.push_back(static_cast<NodeId>(id));
        }
    });
    table.rows = rows;
    table.cols = cols;
    return table;
}

void write_ids(const std::filesystem::path& path, const IdTable& table) {
    if (table.ids.size() != table.rows * table.cols) throw ConfigError("id table shape mismatch");
    std::vector<unsigned char> out;
    out.reserve(table.rows * (4 + 4 * table.cols));
    for (std::size_t i = 0; i < table.rows; ++i) {
        put_u32(out, static_cast<std::uint32_t>(table.cols));
        for (NodeId id : table.row(i)) {
            if (id > static_cast<NodeId>(INT32_MAX)) throw ConfigError("id exceeds int32 range");
            put_u32(out, id);
        }
    }
    write_file(path, out);
}

std::uint32_t dataset_crc32(const Dataset& data) {
    uLong crc = crc32(0L, Z_NULL, 0);
    unsigned char buf[4];
    for (float v : data.elements()) {
        const auto bits = std::bit_cast<std::uint32_t>(v);
        for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
        crc = crc32(crc, buf, 4);
    }
    return static_cast<std::uint32_t>(crc);
}

}  // namespace ggnn
