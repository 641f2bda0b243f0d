#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "doctest.h"
#include "mas/containment_index.hpp"
#include "mas/error.hpp"
#include "mas/rng.hpp"

using namespace mas;

namespace {

RealMultiset gaussian_set(Rng& rng, std::size_t size, std::size_t d)
{
    std::vector<double> flat(size * d);
    for (double& v : flat) v = rng.normal();
    return RealMultiset(d, std::move(flat));
}

Corpus make_corpus(std::size_t n, std::size_t d, std::uint64_t seed)
{
    Rng rng(seed);
    Corpus c;
    for (std::size_t i = 0; i < n; ++i) c.emplace_back("t" + std::to_string(i), gaussian_set(rng, 3 + rng.below(6), d));
    return c;
}

// Random sub-multiset of t with at least one point.
RealMultiset random_subset(Rng& rng, const RealMultiset& t)
{
    std::vector<double> flat;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (rng.below(2) == 0) flat.insert(flat.end(), t.point(i).begin(), t.point(i).end());
    if (flat.empty()) flat.assign(t.point(0).begin(), t.point(0).end());
    return RealMultiset(t.dim(), std::move(flat));
}

bool contains(const std::vector<QueryHit>& hits, const std::string& id)
{
    return std::any_of(hits.begin(), hits.end(), [&](const QueryHit& h) { return h.id == id; });
}

} // namespace

TEST_CASE("build")
{
    const MasNet model(MasNetConfig::for_variant(Variant::hat_mas, 3, 8, 16), 1);
    CHECK(ContainmentIndex::build(model, {}).size() == 0);

    const auto corpus = make_corpus(100, 3, 2);
    const auto idx = ContainmentIndex::build(model, corpus);
    REQUIRE(idx.size() == 100);
    CHECK(idx.metadata().model_ref == model.fingerprint());
    CHECK(idx.metadata().build_time == 0);
    const MasNet reloaded = MasNet::from_json(model.to_json());
    for (const auto& e : idx.entries()) {
        const auto it = std::find_if(corpus.begin(), corpus.end(), [&](const auto& p) { return p.first == e.id; });
        REQUIRE(it != corpus.end());
        CHECK(reloaded.forward(it->second) == e.embedding);
    }

    auto dup = corpus;
    dup.push_back(corpus[3]);
    CHECK_THROWS_WITH_AS(ContainmentIndex::build(model, dup), doctest::Contains("duplicate id"), Error);
    auto mixed = corpus;
    mixed.emplace_back("odd", RealMultiset(2, {0.0, 0.0}));
    CHECK_THROWS_AS(ContainmentIndex::build(model, mixed), Error);
}

TEST_CASE("queries")
{
    const MasNet model(MasNetConfig::for_variant(Variant::relu_mas, 3, 16, 32), 4);
    const auto corpus = make_corpus(200, 3, 5);
    const auto idx = ContainmentIndex::build(model, corpus);
    Rng rng(6);
    QueryOptions audit;
    audit.audit = true;
    for (std::size_t q = 0; q < 200; ++q) {
        const auto& [id, t] = corpus[rng.below(corpus.size())];
        CHECK(contains(idx.query(model, t), id));
        const auto s = random_subset(rng, t);
        const auto hits = idx.query(model, s, audit);
        CHECK(contains(hits, id));
        for (std::size_t i = 1; i < hits.size(); ++i) {
            CHECK(hits[i - 1].margin >= hits[i].margin);
            if (hits[i - 1].margin == hits[i].margin) CHECK(hits[i - 1].id < hits[i].id);
        }
        for (const auto& h : hits) CHECK(h.margin >= 0.0);

        QueryOptions verify;
        verify.verify = true;
        const auto verified = idx.query(model, s, verify);
        CHECK(contains(verified, id));
        CHECK(verified.size() <= hits.size());

        const auto fs = model.forward(s);
        const auto serial = idx.query_embedding_serial(fs);
        const auto parallel = idx.query_embedding(fs);
        REQUIRE(serial.size() == parallel.size());
        for (std::size_t i = 0; i < serial.size(); ++i) {
            CHECK(serial[i].id == parallel[i].id);
            CHECK(serial[i].margin == parallel[i].margin);
        }
    }
    std::vector<RealMultiset> batch;
    for (std::size_t i = 0; i < 20; ++i) batch.push_back(random_subset(rng, corpus[i].second));
    const auto batched = idx.query_batch(model, batch, audit);
    for (std::size_t i = 0; i < 20; ++i) {
        CHECK(contains(batched[i], corpus[i].first));
        CHECK(batched[i].size() == idx.query(model, batch[i]).size());
    }
    CHECK_THROWS_AS(idx.query(model, RealMultiset(2, {1.0, 1.0})), Error);
    const MasNet other(MasNetConfig::for_variant(Variant::relu_mas, 3, 16, 32), 5);
    CHECK_THROWS_AS(idx.query(other, corpus[0].second), Error);

    BuildOptions no_sets;
    no_sets.store_sets = false;
    const auto bare = ContainmentIndex::build(model, corpus, no_sets);
    QueryOptions verify;
    verify.verify = true;
    CHECK_THROWS_AS(bare.query(model, corpus[0].second, verify), Error);
}

TEST_CASE("insertion order does not matter")
{
    const MasNet model(MasNetConfig::for_variant(Variant::hat_mas, 2, 8, 16), 7);
    auto corpus = make_corpus(60, 2, 8);
    const auto a = ContainmentIndex::build(model, corpus);
    std::reverse(corpus.begin(), corpus.end());
    const auto b = ContainmentIndex::build(model, corpus);
    CHECK(a.serialize() == b.serialize());
    Rng rng(9);
    for (int q = 0; q < 20; ++q) {
        const auto s = gaussian_set(rng, 2, 2);
        const auto ha = a.query(model, s), hb = b.query(model, s);
        REQUIRE(ha.size() == hb.size());
        for (std::size_t i = 0; i < ha.size(); ++i) CHECK(ha[i].id == hb[i].id);
    }
}

TEST_CASE("file round trip")
{
    const MasNet model(MasNetConfig::for_variant(Variant::hat_mas, 3, 8, 16), 10);
    const auto corpus = make_corpus(50, 3, 11);
    BuildOptions opts;
    opts.delta_eval = 0.05;
    opts.build_time = 1700000000;
    const auto idx = ContainmentIndex::build(model, corpus, opts);
    const auto path = (std::filesystem::temp_directory_path() / "mas_index_roundtrip.idx").string();
    idx.save(path);
    const auto back = ContainmentIndex::load(path);
    std::filesystem::remove(path);
    CHECK(back.serialize() == idx.serialize());
    CHECK(back.metadata().model_ref == idx.metadata().model_ref);
    CHECK(back.metadata().delta_eval == 0.05);
    CHECK(back.metadata().build_time == 1700000000);
    Rng rng(12);
    for (int q = 0; q < 30; ++q) {
        const auto s = gaussian_set(rng, 1 + rng.below(3), 3);
        QueryOptions o;
        o.delta_eval = 0.1;
        const auto h1 = idx.query(model, s, o), h2 = back.query(model, s, o);
        REQUIRE(h1.size() == h2.size());
        for (std::size_t i = 0; i < h1.size(); ++i) {
            CHECK(h1[i].id == h2[i].id);
            CHECK(h1[i].margin == h2[i].margin);
        }
    }
    const auto bytes = idx.serialize();
    CHECK(bytes.substr(0, 8) == std::string("MASIDX1\0", 8));
    CHECK_THROWS_AS(ContainmentIndex::deserialize("garbage"), Error);
    CHECK_THROWS_AS(ContainmentIndex::deserialize(bytes.substr(0, bytes.size() - 8)), Error);
}

TEST_CASE("hits shrink as m grows")
{
    const auto corpus = make_corpus(300, 3, 13);
    Rng rng(14);
    std::vector<RealMultiset> queries;
    for (int q = 0; q < 100; ++q) queries.push_back(gaussian_set(rng, 2, 3));
    std::vector<double> mean_hits;
    for (std::size_t m : {2, 8, 32}) {
        const MasNet model(MasNetConfig::pointwise(OutputKind::hat, 3, m), 15);
        const auto idx = ContainmentIndex::build(model, corpus);
        double total = 0.0;
        for (const auto& s : queries) total += static_cast<double>(idx.query(model, s).size());
        mean_hits.push_back(total / 100.0);
    }
    INFO(mean_hits[0] << " " << mean_hits[1] << " " << mean_hits[2]);
    CHECK(mean_hits[0] > mean_hits[1]);
    CHECK(mean_hits[1] > mean_hits[2]);
}
