#include <doctest.h>

#include <cmath>
#include <limits>

#include "files.hpp"
#include "ggnn/dataset.hpp"
#include "ggnn/synthetic.hpp"
#include "ggnn/vecs_io.hpp"
#include "oracles.hpp"

using namespace ggnn;

namespace {

Dataset make(std::size_t n, std::size_t d, std::vector<float> v) { return Dataset(n, d, std::move(v)); }

std::vector<unsigned char> fvecs_record(std::vector<float> values, std::int32_t d = -1) {
    std::vector<unsigned char> out;
    testfs::put_i32(out, d < 0 ? static_cast<std::int32_t>(values.size()) : d);
    for (float v : values) testfs::put_f32(out, v);
    return out;
}

template <typename T>
void append(std::vector<T>& a, const std::vector<T>& b) { a.insert(a.end(), b.begin(), b.end()); }

// Lloyd iterations from the two mutually farthest-ish seeds; returns inertia.
double two_means_inertia(const Dataset& data) {
    std::vector<double> c0(data.row(0).begin(), data.row(0).end());
    std::size_t far = 0;
    double best = -1;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double d = oracle::naive_distance(data.row(0), data.row(i));
        if (d > best) best = d, far = i;
    }
    std::vector<double> c1(data.row(far).begin(), data.row(far).end());
    double inertia = 0;
    for (int it = 0; it < 50; ++it) {
        std::vector<double> s0(data.dim(), 0), s1(data.dim(), 0);
        std::size_t n0 = 0, n1 = 0;
        inertia = 0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            double d0 = 0, d1 = 0;
            for (std::size_t j = 0; j < data.dim(); ++j) {
                d0 += (data.row(i)[j] - c0[j]) * (data.row(i)[j] - c0[j]);
                d1 += (data.row(i)[j] - c1[j]) * (data.row(i)[j] - c1[j]);
            }
            auto& s = d0 <= d1 ? s0 : s1;
            (d0 <= d1 ? n0 : n1)++;
            inertia += std::min(d0, d1);
            for (std::size_t j = 0; j < data.dim(); ++j) s[j] += data.row(i)[j];
        }
        for (std::size_t j = 0; j < data.dim(); ++j) {
            if (n0) c0[j] = s0[j] / static_cast<double>(n0);
            if (n1) c1[j] = s1[j] / static_cast<double>(n1);
        }
    }
    return inertia;
}

}  // namespace

TEST_CASE("distance of identical and 3-4-5 vectors") {
    const std::vector<float> a{3, 4}, z{0, 0};
    CHECK(distance(a, a) == 0.0f);
    CHECK(distance(z, a) == 25.0f);
}

TEST_CASE("distance matches the naive scalar sum") {
    auto rng = make_rng(11);
    for (int t = 0; t < 100; ++t) {
        std::vector<float> a(16), b(16);
        for (auto& v : a) v = static_cast<float>(normal_double(rng));
        for (auto& v : b) v = static_cast<float>(normal_double(rng));
        const double ref = oracle::naive_distance(a, b);
        CHECK(std::abs(distance(a, b) - ref) <= 1e-6 * ref);
    }
}

TEST_CASE("distance is symmetric, zero only on equality, and its root is a metric") {
    auto rng = make_rng(12);
    for (std::size_t d : {1u, 3u, 8u, 9u, 17u, 128u}) {
        for (int t = 0; t < 50; ++t) {
            std::vector<float> a(d), b(d), c(d);
            for (auto* v : {&a, &b, &c}) {
                for (auto& x : *v) x = static_cast<float>(normal_double(rng));
            }
            CHECK(distance(a, b) == distance(b, a));
            CHECK(distance(a, a) == 0.0f);
            CHECK(distance(a, b) > 0.0f);
            const double ab = std::sqrt(distance(a, b)), bc = std::sqrt(distance(b, c)), ac = std::sqrt(distance(a, c));
            CHECK(ac <= ab + bc + 1e-5);
        }
    }
}

TEST_CASE("dataset shape and finiteness are validated") {
    CHECK_THROWS_AS(make(0, 2, {}), ConfigError);
    CHECK_THROWS_AS(make(2, 2, {1, 2, 3}), ConfigError);
    CHECK_THROWS_AS(make(1, 2, {1, std::numeric_limits<float>::quiet_NaN()}), FormatError);
    CHECK_THROWS_AS(make(1, 1, {std::numeric_limits<float>::infinity()}), FormatError);
    const auto d = make(3, 2, {0, 1, 2, 3, 4, 5});
    const std::vector<NodeId> rows{2, 0};
    const auto s = d.subset(rows);
    CHECK(s.size() == 2);
    CHECK(s.row(0)[0] == 4);
    CHECK(s.row(1)[1] == 1);
    CHECK_THROWS_AS(check_compatible(d, make(1, 3, {0, 0, 0})), ConfigError);
}

TEST_CASE("fvecs with two records loads as 2 x 4") {
    testfs::TempDir dir;
    auto bytes = fvecs_record({1, 2, 3, 4});
    append(bytes, fvecs_record({5, 6, 7, 8}));
    testfs::write_bytes(dir / "a.fvecs", bytes);
    const auto d = load_vectors(dir / "a.fvecs", VecsFormat::fvecs);
    CHECK(d.size() == 2);
    CHECK(d.dim() == 4);
    CHECK(d.row(1)[3] == 8.0f);
}

TEST_CASE("fvecs format violations report the byte offset") {
    testfs::TempDir dir;
    auto bytes = fvecs_record({1, 2, 3, 4});
    append(bytes, fvecs_record({1, 2, 3, 4, 5}));
    testfs::write_bytes(dir / "inc.fvecs", bytes);
    try {
        load_vectors(dir / "inc.fvecs", VecsFormat::fvecs);
        FAIL("expected an error");
    } catch (const FormatError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("inconsistent dimension") != std::string::npos);
        CHECK(msg.find("byte offset 20") != std::string::npos);
    }

    auto trunc = fvecs_record({1, 2, 3, 4});
    trunc.resize(trunc.size() - 2);
    testfs::write_bytes(dir / "t.fvecs", trunc);
    CHECK_THROWS_WITH_AS(load_vectors(dir / "t.fvecs", VecsFormat::fvecs), doctest::Contains("truncated record"),
                         FormatError);

    testfs::write_bytes(dir / "z.fvecs", fvecs_record({}, 0));
    CHECK_THROWS_WITH_AS(load_vectors(dir / "z.fvecs", VecsFormat::fvecs), doctest::Contains("non-positive dimension"),
                         FormatError);

    testfs::write_bytes(dir / "neg.fvecs", fvecs_record({}, -3));
    CHECK_THROWS_AS(load_vectors(dir / "neg.fvecs", VecsFormat::fvecs), FormatError);

    testfs::write_bytes(dir / "hdr.fvecs", {1, 0});
    CHECK_THROWS_WITH_AS(load_vectors(dir / "hdr.fvecs", VecsFormat::fvecs), doctest::Contains("truncated record header"),
                         FormatError);

    testfs::write_bytes(dir / "e.fvecs", {});
    CHECK_THROWS_WITH_AS(load_vectors(dir / "e.fvecs", VecsFormat::fvecs), doctest::Contains("no records"), FormatError);

    testfs::write_bytes(dir / "nan.fvecs", fvecs_record({1, std::numeric_limits<float>::quiet_NaN()}));
    CHECK_THROWS_WITH_AS(load_vectors(dir / "nan.fvecs", VecsFormat::fvecs), doctest::Contains("non-finite"),
                         FormatError);

    CHECK_THROWS_WITH_AS(load_vectors(dir / "missing.fvecs", VecsFormat::fvecs), doctest::Contains("dataset not found"),
                         IoError);
}

TEST_CASE("bvecs bytes are promoted to floats") {
    testfs::TempDir dir;
    std::vector<unsigned char> bytes;
    testfs::put_i32(bytes, 3);
    for (unsigned char b : {0, 128, 255}) bytes.push_back(b);
    testfs::write_bytes(dir / "a.bvecs", bytes);
    const auto d = load_vectors(dir / "a.bvecs", VecsFormat::bvecs);
    CHECK(d.dim() == 3);
    CHECK(d.row(0)[1] == 128.0f);
    CHECK(d.row(0)[2] == 255.0f);
}

TEST_CASE("ivecs loading") {
    testfs::TempDir dir;
    std::vector<unsigned char> bytes;
    for (std::int32_t v : {3, 7, 1, 9}) testfs::put_i32(bytes, v);
    testfs::write_bytes(dir / "a.ivecs", bytes);
    const auto t = load_ids(dir / "a.ivecs");
    CHECK(t.rows == 1);
    CHECK(t.cols == 3);
    CHECK(t.ids == std::vector<NodeId>{7, 1, 9});

    testfs::write_bytes(dir / "e.ivecs", {});
    CHECK_THROWS_WITH_AS(load_ids(dir / "e.ivecs"), doctest::Contains("no records"), FormatError);

    bytes.clear();
    for (std::int32_t v : {2, 4, -1}) testfs::put_i32(bytes, v);
    testfs::write_bytes(dir / "n.ivecs", bytes);
    CHECK_THROWS_WITH_AS(load_ids(dir / "n.ivecs"), doctest::Contains("negative index"), FormatError);

    bytes.clear();
    for (std::int32_t v : {2, 4}) testfs::put_i32(bytes, v);
    testfs::write_bytes(dir / "t.ivecs", bytes);
    CHECK_THROWS_AS(load_ids(dir / "t.ivecs"), FormatError);
}

TEST_CASE("fvecs, bvecs and ivecs round-trips are bit-exact") {
    testfs::TempDir dir;
    auto rng = make_rng(5);
    std::vector<float> v(37 * 11);
    for (auto& x : v) x = static_cast<float>(normal_double(rng) * 1e3);
    v[0] = -0.0f;
    v[1] = std::numeric_limits<float>::denorm_min();
    v[2] = std::numeric_limits<float>::max();
    const Dataset d(37, 11, v);
    write_vectors(dir / "r.fvecs", d, VecsFormat::fvecs);
    const auto back = load_vectors(dir / "r.fvecs", VecsFormat::fvecs);
    REQUIRE(back.size() == 37);
    CHECK(std::memcmp(back.elements().data(), d.elements().data(), v.size() * sizeof(float)) == 0);
    const auto first = testfs::read_bytes(dir / "r.fvecs");
    write_vectors(dir / "r2.fvecs", back, VecsFormat::fvecs);
    CHECK(testfs::read_bytes(dir / "r2.fvecs") == first);

    std::vector<float> b(20 * 5);
    for (auto& x : b) x = static_cast<float>(static_cast<int>(unit_double(rng) * 256));
    const Dataset db(20, 5, b);
    write_vectors(dir / "r.bvecs", db, VecsFormat::bvecs);
    const auto bb = load_vectors(dir / "r.bvecs", VecsFormat::bvecs);
    CHECK(std::equal(bb.elements().begin(), bb.elements().end(), b.begin()));
    CHECK_THROWS_AS(write_vectors(dir / "bad.bvecs", make(1, 1, {0.5f}), VecsFormat::bvecs), ConfigError);
    CHECK_THROWS_AS(write_vectors(dir / "bad.bvecs", make(1, 1, {256.0f}), VecsFormat::bvecs), ConfigError);

    IdTable t{3, 4, {0, 1, 2, 3, 9, 8, 7, 6, 100000, 5, 4, 2147483647u}};
    write_ids(dir / "r.ivecs", t);
    const auto tb = load_ids(dir / "r.ivecs");
    CHECK(tb.rows == 3);
    CHECK(tb.cols == 4);
    CHECK(tb.ids == t.ids);
}

TEST_CASE("bvecs promotion preserves pairwise distance order") {
    auto rng = make_rng(8);
    std::vector<float> v(40 * 8);
    for (auto& x : v) x = static_cast<float>(static_cast<int>(unit_double(rng) * 256));
    const Dataset d(40, 8, v);
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < 40; ++i) {
        for (std::size_t j = i + 1; j < 40; ++j) {
            std::int64_t exact = 0;
            for (std::size_t c = 0; c < 8; ++c) {
                const auto diff = static_cast<std::int64_t>(v[i * 8 + c]) - static_cast<std::int64_t>(v[j * 8 + c]);
                exact += diff * diff;
            }
            CHECK(static_cast<double>(distance(d.row(i), d.row(j))) == static_cast<double>(exact));
        }
    }
}

TEST_CASE("vector format names") {
    CHECK(parse_vecs_format("fvecs") == VecsFormat::fvecs);
    CHECK(parse_vecs_format("bvecs") == VecsFormat::bvecs);
    CHECK(to_string(VecsFormat::bvecs) == "bvecs");
    CHECK_THROWS_AS(parse_vecs_format("ivecs"), ConfigError);
}

TEST_CASE("synthetic generation is deterministic") {
    for (auto law : {SyntheticLaw::uniform(), SyntheticLaw::gaussian(), SyntheticLaw::clustered(3)}) {
        const auto a = gen_synthetic(8, 2, 1, law);
        const auto b = gen_synthetic(8, 2, 1, law);
        CHECK(std::equal(a.elements().begin(), a.elements().end(), b.elements().begin()));
        const auto c = gen_synthetic(8, 2, 2, law);
        CHECK_FALSE(std::equal(a.elements().begin(), a.elements().end(), c.elements().begin()));
    }
    const auto u = gen_synthetic(500, 3, 4, SyntheticLaw::uniform());
    for (float x : u.elements()) {
        CHECK(x >= 0.0f);
        CHECK(x < 1.0f);
    }
    CHECK_THROWS_AS(gen_synthetic(0, 2, 1, SyntheticLaw::uniform()), ConfigError);
}

TEST_CASE("gaussian law has per-coordinate mean near zero") {
    const auto g = gen_synthetic(1000, 16, 7, SyntheticLaw::gaussian());
    const double bound = 5.0 / std::sqrt(1000.0);
    for (std::size_t j = 0; j < 16; ++j) {
        double s = 0;
        for (std::size_t i = 0; i < 1000; ++i) s += g.row(i)[j];
        CHECK(std::abs(s / 1000.0) < bound);
    }
}

TEST_CASE("clustered law forms separable clusters") {
    const auto c = gen_synthetic(100, 4, 3, SyntheticLaw::clustered(2));
    // Uniform baseline over the same bounding box.
    std::vector<float> lo(4, std::numeric_limits<float>::max()), hi(4, std::numeric_limits<float>::lowest());
    for (std::size_t i = 0; i < c.size(); ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            lo[j] = std::min(lo[j], c.row(i)[j]);
            hi[j] = std::max(hi[j], c.row(i)[j]);
        }
    }
    auto rng = make_rng(99);
    std::vector<float> u(100 * 4);
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = lo[i % 4] + static_cast<float>(unit_double(rng)) * (hi[i % 4] - lo[i % 4]);
    }
    CHECK(two_means_inertia(c) < two_means_inertia(Dataset(100, 4, u)));
}

TEST_CASE("synthetic law parsing") {
    CHECK(parse_synthetic_law("uniform").kind == SyntheticLaw::Kind::uniform);
    CHECK(parse_synthetic_law("gaussian").kind == SyntheticLaw::Kind::gaussian);
    const auto c = parse_synthetic_law("clustered:5");
    CHECK(c.kind == SyntheticLaw::Kind::clustered);
    CHECK(c.clusters == 5);
    CHECK_THROWS_AS(parse_synthetic_law("clustered:"), ConfigError);
    CHECK_THROWS_AS(parse_synthetic_law("poisson"), ConfigError);
}
