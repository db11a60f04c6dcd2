#include "ggnn/index_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>

namespace ggnn {
namespace {

constexpr std::string_view kMagic = "GGNN";
constexpr std::uint32_t kWideCounts = 1u;

class Writer {
public:
    explicit Writer(bool wide) : wide_(wide) {}

    void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void count(std::size_t v) {
        if (wide_) u64(v);
        else u32(static_cast<std::uint32_t>(v));
    }
    template <typename T>
    void array(const std::vector<T>& v) {
        for (const T& x : v) {
            if constexpr (std::is_same_v<T, float>) f32(x);
            else u32(static_cast<std::uint32_t>(x));
        }
    }

    // Sections are written with a placeholder length that end_section() patches.
    std::size_t begin_section(std::string_view tag) {
        raw(tag);
        u64(0);
        return bytes_.size();
    }
    void end_section(std::size_t start) {
        const std::uint64_t len = bytes_.size() - start;
        for (int i = 0; i < 8; ++i) bytes_[start - 8 + i] = static_cast<unsigned char>(len >> (8 * i));
    }

    std::vector<unsigned char>& bytes() { return bytes_; }

private:
    bool wide_;
    std::vector<unsigned char> bytes_;
};

class Reader {
public:
    Reader(const std::vector<unsigned char>& bytes, std::size_t end) : bytes_(bytes), end_(end) {}

    void need(std::size_t n) const {
        if (end_ - pos_ < n) throw FormatError("index file truncated at byte offset " + std::to_string(pos_));
    }
    std::string_view raw(std::size_t n) {
        need(n);
        std::string_view s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::size_t count(bool wide) { return wide ? static_cast<std::size_t>(u64()) : u32(); }
    template <typename T>
    std::vector<T> array(std::size_t n) {
        need(n * 4);
        std::vector<T> v(n);
        for (auto& x : v) {
            if constexpr (std::is_same_v<T, float>) x = f32();
            else x = static_cast<T>(u32());
        }
        return v;
    }

    // Returns the payload end of the next section after checking its tag.
    std::size_t open_section(std::string_view tag) {
        const std::size_t at = pos_;
        if (raw(4) != tag) throw FormatError("expected section '" + std::string(tag) + "' at byte offset " + std::to_string(at));
        const std::uint64_t len = u64();
        if (len > end_ - pos_) throw FormatError("section '" + std::string(tag) + "' length exceeds file size");
        return pos_ + static_cast<std::size_t>(len);
    }
    void close_section(std::string_view tag, std::size_t expected_end) const {
        if (pos_ != expected_end) throw FormatError("section '" + std::string(tag) + "' length mismatch");
    }

    std::size_t pos() const { return pos_; }

private:
    const std::vector<unsigned char>& bytes_;
    std::size_t end_;
    std::size_t pos_ = 0;
};

std::uint32_t crc_of(const unsigned char* data, std::size_t n) {
    uLong crc = crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed large buffers in pieces.
    while (n > 0) {
        const auto piece = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
        crc = crc32(crc, data, piece);
        data += piece;
        n -= piece;
    }
    return static_cast<std::uint32_t>(crc);
}

// Trailer: "CRC " + u64 length (4) + u32 crc.
constexpr std::size_t kTrailer = 4 + 8 + 4;

}  // namespace

std::vector<unsigned char> serialize_index(const Hierarchy& h) {
    if (h.layers.empty()) throw std::invalid_argument("serialize_index: empty hierarchy");
    const std::size_t n = h.bottom().node_count();
    const bool wide = n >= (std::size_t{1} << 31);
    const BuildConfig& cfg = h.config;

    Writer w(wide);
    w.raw(kMagic);
    w.u32(kIndexVersion);
    w.u32(wide ? kWideCounts : 0u);
    w.count(n);
    w.u32(static_cast<std::uint32_t>(h.dim));
    w.u32(static_cast<std::uint32_t>(h.layer_count()));
    w.u32(h.geometry.s);
    w.u32(h.geometry.g);
    w.u32(h.bottom().k());
    w.u32(h.bottom().k_nn());
    w.u32(h.bottom().k_sym());

    auto sec = w.begin_section("CONF");
    w.u32(cfg.k);
    w.u32(cfg.k_nn);
    w.u32(cfg.k_sym);
    w.u32(cfg.s);
    w.u32(cfg.g);
    w.u32(cfg.refinements);
    w.f64(cfg.tau_build);
    w.u64(cfg.seed);
    w.u32(cfg.path_check_budget);
    w.u32(cfg.stats_sample);
    w.u32(cfg.max_iterations);
    w.u64(cfg.cache.prioq_size);
    w.u64(cfg.cache.visited_size);
    w.u32(h.geometry.bottom_batches);
    w.end_section(sec);

    for (const auto& layer : h.layers) {
        sec = w.begin_section("LAYR");
        w.count(layer.node_count());
        w.u32(layer.segment_count);
        w.array(layer.raw_adjacency());
        w.array(layer.raw_nn_dists());
        w.array(layer.raw_sym_count());
        w.array(layer.raw_d_nn1());
        w.array(layer.segment);
        w.end_section(sec);
    }

    sec = w.begin_section("TRAN");
    for (std::size_t l = 1; l < h.layer_count(); ++l) {
        w.count(h.to_lower[l].size());
        w.array(h.to_lower[l]);
    }
    w.end_section(sec);

    sec = w.begin_section("STAT");
    w.f64(h.stats.d_nn1_mean);
    w.f64(h.stats.d_nn1_max);
    w.end_section(sec);

    auto& bytes = w.bytes();
    const std::uint32_t crc = crc_of(bytes.data(), bytes.size());
    sec = w.begin_section("CRC ");
    w.u32(crc);
    w.end_section(sec);
    return std::move(w.bytes());
}

Hierarchy deserialize_index(const std::vector<unsigned char>& bytes) {
    if (bytes.size() < kMagic.size() ||
        std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) {
        throw FormatError("bad magic");
    }
    if (bytes.size() < 8) throw FormatError("index file truncated");
    {
        Reader head(bytes, bytes.size());
        head.raw(4);
        const std::uint32_t version = head.u32();
        if (version != kIndexVersion) {
            throw FormatError("version mismatch: file has " + std::to_string(version) + ", reader supports " +
                              std::to_string(kIndexVersion));
        }
    }
    if (bytes.size() < kTrailer + 8) throw FormatError("index file truncated");
    const std::size_t body = bytes.size() - kTrailer;
    {
        Reader trailer(bytes, bytes.size());
        trailer.raw(body);
        const auto end = trailer.open_section("CRC ");
        const std::uint32_t stored = trailer.u32();
        trailer.close_section("CRC ", end);
        if (stored != crc_of(bytes.data(), body)) throw FormatError("checksum failure");
    }

    Reader r(bytes, body);
    r.raw(4);
    r.u32();
    const std::uint32_t flags = r.u32();
    const bool wide = (flags & kWideCounts) != 0;
    const std::size_t n = r.count(wide);
    Hierarchy h;
    h.dim = r.u32();
    const std::uint32_t layers = r.u32();
    h.geometry.s = r.u32();
    h.geometry.g = r.u32();
    h.geometry.layers = layers;
    const std::uint32_t k = r.u32();
    const std::uint32_t k_nn = r.u32();
    const std::uint32_t k_sym = r.u32();
    if (k_nn + k_sym != k || layers == 0) throw FormatError("inconsistent header");

    auto end = r.open_section("CONF");
    BuildConfig& cfg = h.config;
    cfg.k = r.u32();
    cfg.k_nn = r.u32();
    cfg.k_sym = r.u32();
    cfg.s = r.u32();
    cfg.g = r.u32();
    cfg.refinements = r.u32();
    cfg.tau_build = r.f64();
    cfg.seed = r.u64();
    cfg.path_check_budget = r.u32();
    cfg.stats_sample = r.u32();
    cfg.max_iterations = r.u32();
    cfg.cache.prioq_size = static_cast<std::size_t>(r.u64());
    cfg.cache.visited_size = static_cast<std::size_t>(r.u64());
    h.geometry.bottom_batches = r.u32();
    r.close_section("CONF", end);

    for (std::uint32_t l = 0; l < layers; ++l) {
        end = r.open_section("LAYR");
        const std::size_t count = r.count(wide);
        if (l == 0 && count != n) throw FormatError("bottom layer size does not match header");
        const std::uint32_t segment_count = r.u32();
        auto adjacency = r.array<NodeId>(count * k);
        auto nn_dists = r.array<float>(count * k_nn);
        auto sym_count = r.array<std::uint32_t>(count);
        auto d_nn1 = r.array<float>(count);
        auto segment = r.array<std::uint32_t>(count);
        r.close_section("LAYR", end);
        for (NodeId id : adjacency) {
            if (id != kEmptySlot && id >= count) throw FormatError("adjacency id out of range in layer " + std::to_string(l));
        }
        auto layer = AdjacencyLayer::from_raw(count, k, k_nn, std::move(adjacency), std::move(nn_dists),
                                              std::move(sym_count), std::move(d_nn1));
        layer.segment = std::move(segment);
        layer.segment_count = segment_count;
        h.layers.push_back(std::move(layer));
    }

    end = r.open_section("TRAN");
    h.to_lower.assign(layers, {});
    for (std::uint32_t l = 1; l < layers; ++l) {
        const std::size_t len = r.count(wide);
        h.to_lower[l] = r.array<NodeId>(len);
    }
    r.close_section("TRAN", end);
    h.rebuild_translations();

    end = r.open_section("STAT");
    h.stats.d_nn1_mean = r.f64();
    h.stats.d_nn1_max = r.f64();
    r.close_section("STAT", end);
    if (r.pos() != body) throw FormatError("trailing bytes before checksum");

    h.refresh_layer_d_nn1_max();
    return h;
}

void save_index(const Hierarchy& h, const std::filesystem::path& path) {
    const auto bytes = serialize_index(h);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

Hierarchy load_index(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("index not found: " + path.string());
    std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return deserialize_index(bytes);
}

}  // namespace ggnn
