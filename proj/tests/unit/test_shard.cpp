#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>
#include <string>

#include "files.hpp"
#include "ggnn/eval.hpp"
#include "ggnn/index_io.hpp"
#include "ggnn/shard.hpp"
#include "ggnn/synthetic.hpp"
#include "invariants.hpp"
#include "oracles.hpp"

using namespace ggnn;

namespace {

BuildConfig small_cfg() {
    BuildConfig cfg;
    cfg.k = 16;
    cfg.k_nn = 8;
    cfg.k_sym = 8;
    cfg.s = 32;
    cfg.refinements = 1;
    cfg.threads = 1;
    return cfg;
}

bool same_results(const std::vector<QueryResult>& a, const std::vector<QueryResult>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].hits != b[i].hits) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("shard plans") {
    const auto p = plan_shards(4096, 2048, 1);
    REQUIRE(p.shard_count() == 2);
    CHECK(p.offsets == std::vector<std::size_t>{0, 2048});
    CHECK(p.sizes == std::vector<std::size_t>{2048, 2048});
    std::set<NodeId> ids(p.order.begin(), p.order.end());
    CHECK(ids.size() == 4096);
    CHECK(*ids.rbegin() == 4095);

    const auto uneven = plan_shards(1000, 300, 2);
    REQUIRE(uneven.shard_count() == 4);
    for (auto sz : uneven.sizes) CHECK((sz == 250));
    CHECK(uneven.global_id(3, 0) == uneven.order[750]);

    const auto one = plan_shards(500, 500, 3);
    REQUIRE(one.shard_count() == 1);
    for (NodeId i = 0; i < 500; ++i) CHECK(one.order[i] == i);

    CHECK_THROWS_AS(plan_shards(10, 0, 1), ConfigError);
    CHECK_THROWS_AS(plan_shards(0, 5, 1), ConfigError);
}

TEST_CASE("merging per-shard hit lists") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t shards = 1 + rng() % 5;
        const std::size_t k = 1 + rng() % 12;
        std::vector<std::vector<Neighbor>> per(shards);
        std::vector<Neighbor> all;
        NodeId next = 0;
        for (auto& list : per) {
            const std::size_t len = rng() % 15;
            for (std::size_t j = 0; j < len; ++j) {
                // coarse distances force ties
                list.push_back({next++, static_cast<Dist>(rng() % 8)});
            }
            std::sort(list.begin(), list.end(), closer);
            all.insert(all.end(), list.begin(), list.end());
        }
        std::sort(all.begin(), all.end(), closer);
        if (all.size() > k) all.resize(k);
        CHECK(merge_shard_hits(per, k) == all);
    }
    // a repeated id keeps a single entry
    std::vector<std::vector<Neighbor>> dup{{{4, 1.0f}, {5, 2.0f}}, {{4, 1.0f}, {6, 3.0f}}};
    const auto merged = merge_shard_hits(dup, 3);
    CHECK(merged == std::vector<Neighbor>{{4, 1.0f}, {5, 2.0f}, {6, 3.0f}});
}

TEST_CASE("per-shard exact top-k merges into the global top-k") {
    const auto data = gen_synthetic(900, 6, 21, SyntheticLaw::gaussian());
    const auto queries = gen_synthetic(50, 6, 22, SyntheticLaw::gaussian());
    const auto plan = plan_shards(data.size(), 256, 5);
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        std::vector<std::vector<Neighbor>> per;
        for (std::size_t s = 0; s < plan.shard_count(); ++s) {
            std::vector<Neighbor> hits;
            for (NodeId id : plan.members(s)) hits.push_back({id, distance(queries.row(qi), data.row(id))});
            std::sort(hits.begin(), hits.end(), closer);
            hits.resize(std::min<std::size_t>(hits.size(), 10));
            per.push_back(hits);
        }
        const auto expect = oracle::naive_top_k(data, queries.row(qi), 10);
        const auto got = merge_shard_hits(per, 10);
        REQUIRE(got.size() == 10);
        for (std::size_t j = 0; j < 10; ++j) CHECK(got[j].id == expect[j].id);
    }
}

TEST_CASE("single shard equals a plain build") {
    const auto data = gen_synthetic(600, 8, 30, SyntheticLaw::clustered(6));
    const auto cfg = small_cfg();
    const auto si = build_sharded(data, 600, cfg);
    REQUIRE(si.shards.size() == 1);
    const auto plain = build(data, cfg).first;
    CHECK(serialize_index(si.shards[0].index) == serialize_index(plain));

    const auto queries = gen_synthetic(30, 8, 31, SyntheticLaw::clustered(6));
    QueryConfig qc;
    qc.k_out = 10;
    CHECK(same_results(query_sharded_batch(si, queries, qc, 1), query_batch(plain, data, queries, qc, 1)));
}

TEST_CASE("sharded builds") {
    const auto data = gen_synthetic(1500, 8, 40, SyntheticLaw::gaussian());
    const auto cfg = small_cfg();
    const auto si = build_sharded(data, 512, cfg);
    REQUIRE(si.shards.size() == 3);

    SUBCASE("each shard passes the structural checks") {
        for (const auto& s : si.shards) {
            const auto bad = oracle::check_invariants(s.index, s.data);
            CHECK_MESSAGE(bad.empty(), (bad.empty() ? std::string() : bad.front()));
        }
    }

    SUBCASE("shard builds do not depend on build order") {
        for (std::size_t i : {2u, 0u, 1u}) {
            const auto s = build_shard(data, si.plan, i, cfg);
            CHECK(serialize_index(s.index) == serialize_index(si.shards[i].index));
        }
    }

    SUBCASE("results carry unique dataset ids with correct distances") {
        const auto queries = gen_synthetic(40, 8, 41, SyntheticLaw::gaussian());
        QueryConfig qc;
        qc.k_out = 20;
        for (const auto& r : query_sharded_batch(si, queries, qc, 2)) {
            std::set<NodeId> ids;
            for (const auto& h : r.hits) {
                CHECK(h.id < data.size());
                ids.insert(h.id);
            }
            CHECK(ids.size() == r.hits.size());
            CHECK(std::is_sorted(r.hits.begin(), r.hits.end(), closer));
        }
        const auto r0 = query_sharded(si, queries.row(0), qc);
        for (const auto& h : r0.hits) CHECK(h.dist == distance(queries.row(0), data.row(h.id)));
        CHECK(r0.visited_count > 0);
    }

    SUBCASE("every point finds itself") {
        QueryConfig qc;
        qc.k_out = 5;
        std::size_t self = 0;
        for (NodeId i = 0; i < data.size(); i += 7) {
            const auto r = query_sharded(si, data.row(i), qc);
            self += (!r.hits.empty() && r.hits[0].dist == 0.0f) ? 1 : 0;
        }
        CHECK(self == (data.size() + 6) / 7);
    }

    SUBCASE("saved directory loads back, all at once or one shard at a time") {
        testfs::TempDir dir;
        save_sharded(si, dir.path());
        CHECK(is_sharded_index(dir.path()));
        CHECK_FALSE(is_sharded_index(dir / "shard_0.ggnn"));

        const auto queries = gen_synthetic(25, 8, 42, SyntheticLaw::gaussian());
        QueryConfig qc;
        qc.k_out = 10;
        const auto expect = query_sharded_batch(si, queries, qc, 1);

        const auto back = load_sharded(dir.path(), data);
        CHECK(back.plan.order == si.plan.order);
        CHECK(same_results(query_sharded_batch(back, queries, qc, 1), expect));

        ShardStream stream(dir.path(), data);
        std::size_t seen = 0;
        while (auto s = stream.next()) {
            CHECK(serialize_index(s->index) == serialize_index(si.shards[seen].index));
            ++seen;
            CHECK(stream.position() == seen);
        }
        CHECK(seen == 3);
        CHECK(same_results(query_sharded_sequential(dir.path(), data, queries, qc, 1), expect));

        const auto other = gen_synthetic(1500, 8, 99, SyntheticLaw::gaussian());
        CHECK_THROWS_AS(load_sharded(dir.path(), other), ConfigError);
    }
}

TEST_CASE("shard errors") {
    const auto data = gen_synthetic(400, 4, 50, SyntheticLaw::uniform());
    auto cfg = small_cfg();
    CHECK_THROWS_AS(build_sharded(data, 16, cfg), ConfigError);

    const auto plan = plan_shards(400, 200, 1);
    cfg.k_sym = 3;  // k_nn + k_sym != k
    try {
        build_shard(data, plan, 1, cfg);
        FAIL("expected a config error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).rfind("shard 1: ", 0) == 0);
    }
}
