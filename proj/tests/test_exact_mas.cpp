#include <cmath>

#include "doctest.h"
#include "mas/error.hpp"
#include "mas/exact_mas.hpp"
#include "mas/parallel.hpp"
#include "oracles.hpp"

using namespace mas;

namespace {

EmbeddingMatrix random_matrix(Rng& rng, std::size_t m, std::size_t n)
{
    std::vector<double> w(m * n);
    for (double& x : w) x = rng.uniform();
    return EmbeddingMatrix(m, n, std::move(w));
}

bool dominated(const std::vector<double>& a, const std::vector<double>& b)
{
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] > b[i]) return false;
    return true;
}

void check_witness(const EmbeddingMatrix& e, const MultisetPair& w)
{
    CHECK_FALSE(is_subset(w.first, w.second));
    CHECK(dominated(e.evaluate(w.first), e.evaluate(w.second)));
}

Multiset ms(std::size_t n, std::vector<Element> elems)
{
    return Multiset::from_elements(n, elems);
}

} // namespace

TEST_CASE("one-hot embedding is MAS")
{
    for (std::size_t n = 1; n <= 5; ++n)
        for (std::size_t k = 0; k <= 3; ++k) CHECK(verify_mas(onehot_mas(n), k).is_mas);
    CHECK(onehot_mas(3).evaluate(ms(3, {0, 0, 2})) == std::vector<double>{2, 0, 1});
}

TEST_CASE("verify_mas witnesses")
{
    const auto a = verify_mas(EmbeddingMatrix::from_rows({{1, 0}, {0, 0}}), 1);
    CHECK_FALSE(a.is_mas);
    CHECK(a.violation == ViolationKind::separability);
    CHECK(a.witness->first == ms(2, {1}));
    CHECK(a.witness->second == ms(2, {}));

    const auto b = verify_mas(EmbeddingMatrix::from_rows({{1, 1}}), 1);
    CHECK_FALSE(b.is_mas);
    CHECK(b.witness->first == ms(2, {0}));
    CHECK(b.witness->second == ms(2, {1}));

    CHECK_THROWS_AS(EmbeddingMatrix::from_rows({{1, -1}}), Error);
    CHECK_THROWS_AS(EmbeddingMatrix::from_rows({{1, 0}, {1}}), Error);
}

TEST_CASE("every one-dimensional embedding of two elements fails at k = 1")
{
    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        const auto e = random_matrix(rng, 1, 2);
        const auto v = verify_mas(e, 1);
        REQUIRE_FALSE(v.is_mas);
        CHECK(v.violation == ViolationKind::separability);
        check_witness(e, *v.witness);
    }
}

TEST_CASE("parallel verifier agrees with serial reference")
{
    Rng rng(8);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 2 + rng.below(4), m = 1 + rng.below(6), k = 1 + rng.below(3);
        const auto e = random_matrix(rng, m, n);
        const auto p = verify_mas(e, k), s = verify_mas_serial(e, k);
        CHECK(p.is_mas == s.is_mas);
        CHECK(p.violation == s.violation);
        CHECK(p.witness == s.witness);
        if (!p.is_mas) check_witness(e, *p.witness);
    }
}

TEST_CASE("linear embeddings never report a monotonicity violation")
{
    Rng rng(12);
    for (int trial = 0; trial < 40; ++trial) {
        const auto e = random_matrix(rng, 3, 4);
        CHECK(verify_mas(e, 3).violation != ViolationKind::monotonicity);
    }
}

TEST_CASE("extreme pairs")
{
    for (std::size_t n = 2; n <= 7; ++n)
        for (std::size_t k = 1; k < n && k <= 3; ++k) {
            const auto pairs = extreme_pairs(n, k);
            CHECK(pairs.size() == n * oracle::binomial(n + k - 2, k));
            CHECK(extreme_pair_count(n, k) == pairs.size());
            for (const auto& [s, t] : pairs) {
                CHECK(s.cardinality() == 1);
                CHECK(t.cardinality() == k);
                CHECK(t.count(s.elements().front()) == 0);
            }
        }
    CHECK_THROWS_AS(extreme_pairs(3, 3), Error);
}

TEST_CASE("random projection construction")
{
    CHECK(projection_rows(4, 1) == static_cast<std::size_t>(std::ceil(27 * std::log(4.0))));
    CHECK(projection_rows(8, 2, 2.0) == 768);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto r = random_projection_mas(5, 2, projection_rows(5, 2), seed, 20);
        CHECK(r.attempts >= 1);
        CHECK(verify_mas(r.matrix, 2).is_mas);
        const auto again = random_projection_mas(5, 2, projection_rows(5, 2), seed, 20);
        CHECK(again.attempts == r.attempts);
        CHECK(again.matrix.rows() == r.matrix.rows());
    }
    try {
        random_projection_mas(6, 2, 1, 3, 4);
        FAIL("expected failure");
    } catch (const ProjectionFailure& f) {
        CHECK(f.unseparated() > 0);
        CHECK(f.pair().first.cardinality() == 1);
    }
}

TEST_CASE("random projection result does not depend on thread count")
{
    const auto one = [] {
        set_threads(1);
        return random_projection_mas(6, 1, 10, 42, 50);
    }();
    set_threads(3);
    const auto three = random_projection_mas(6, 1, 10, 42, 50);
    set_threads(1);
    CHECK(one.attempts == three.attempts);
    CHECK(one.matrix.rows() == three.matrix.rows());
}

TEST_CASE("chain refuter")
{
    Rng rng(21);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 3 + rng.below(30);
        const auto e = random_matrix(rng, 1, n);
        const auto w = refute_erdos_szekeres(e);
        REQUIRE(w.has_value());
        check_witness(e, *w);
    }
    for (std::size_t n = 82; n <= 100; ++n) {
        const auto e = random_matrix(rng, 2, n);
        const auto w = refute_erdos_szekeres(e);
        REQUIRE(w.has_value());
        check_witness(e, *w);
    }
    // Constant columns: every pair of elements is tied.
    const auto flat = EmbeddingMatrix::from_rows({{1, 1, 1, 1}});
    const auto w = refute_erdos_szekeres(flat);
    REQUIRE(w.has_value());
    CHECK(w->first == ms(4, {1}));
    CHECK(w->second == ms(4, {0, 2}));
    CHECK_FALSE(refute_erdos_szekeres(onehot_mas(2)).has_value());
}

TEST_CASE("maximal-singleton refuter")
{
    Rng rng(33);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t m = 1 + rng.below(5);
        const std::size_t n = m + 2 + rng.below(4);
        const auto e = random_matrix(rng, m, n);
        const auto w = refute_maximal_singleton(e, 1 + (m + 1) / 2);
        REQUIRE(w.has_value());
        check_witness(e, *w);
        CHECK(w->second.cardinality() <= 1 + (m + 1) / 2);
    }
    CHECK_FALSE(refute_maximal_singleton(onehot_mas(4), 4).has_value());

    // Arbitrary monotone set function through the oracle interface.
    EmbeddingOracle f{5, 1, [](const Multiset& s) { return std::vector<double>{std::sqrt(double(s.cardinality()))}; }};
    const auto w = refute_maximal_singleton(f, 2);
    REQUIRE(w.has_value());
    CHECK_FALSE(is_subset(w->first, w->second));
}

TEST_CASE("degenerate k = 1 embedding")
{
    std::vector<double> grid;
    for (int i = -8; i <= 8; ++i) grid.push_back(i / 8.0);
    const auto empty = degenerate_k1_embedding(std::nullopt);
    for (double x : grid) {
        const auto fx = degenerate_k1_embedding(x);
        CHECK((empty[0] <= fx[0] && empty[1] <= fx[1]));
        CHECK_FALSE((fx[0] <= empty[0] && fx[1] <= empty[1]));
        for (double y : grid) {
            const auto fy = degenerate_k1_embedding(y);
            CHECK((fx[0] <= fy[0] && fx[1] <= fy[1]) == (x == y));
        }
    }
    CHECK_THROWS_AS(degenerate_k1_embedding(1.5), Error);
}

TEST_CASE("dimension bounds")
{
    const auto b = dimension_bounds(1000, 3);
    CHECK(b.possible);
    CHECK(b.lower == 6);
    CHECK(b.upper == 1000);
    CHECK(b.refined_lower == 6);
    CHECK(b.refined_at_center == 6);

    CHECK_FALSE(dimension_bounds(std::nullopt, 2).possible);
    CHECK_FALSE(dimension_bounds(std::nullopt, std::nullopt).possible);
    const auto k1 = dimension_bounds(std::nullopt, 1);
    CHECK((k1.exact && k1.lower == 2 && k1.upper == 2));
    const auto full = dimension_bounds(7, std::nullopt);
    CHECK((full.exact && full.lower == 7 && full.upper == 7));

    for (std::uint64_t n = 3; n <= 400; n += 7)
        for (std::uint64_t k = 1; 2 * k <= n - 1; ++k) {
            const auto g = dimension_bounds(n, k);
            CHECK(g.lower <= g.upper);
            CHECK(g.upper <= n);
            CHECK(g.lower >= 2 * k);
        }
}

TEST_CASE("monotone extension")
{
    const auto e = onehot_mas(2);
    const auto sets = enumerate_multisets(2, 2);
    REQUIRE(sets.size() == 6);

    std::map<Multiset, std::vector<double>> card, zero, first;
    for (const auto& s : sets) {
        card[s] = {static_cast<double>(s.cardinality())};
        zero[s] = {0.0};
        first[s] = {static_cast<double>(s.count(0))};
    }
    const auto rc = monotone_extension_demo(e, 2, card);
    CHECK(rc.reproduces_f);
    CHECK(rc.monotone_on_image);
    for (const auto& s : sets) {
        const auto v = e.evaluate(s);
        CHECK(rc.extension(v) == std::vector<double>{v[0] + v[1]});
    }
    const auto rz = monotone_extension_demo(e, 2, zero);
    CHECK(rz.extension({5.0, 5.0}) == std::vector<double>{0.0});
    const auto rf = monotone_extension_demo(e, 2, first);
    for (const auto& s : sets) CHECK(rf.extension(e.evaluate(s))[0] == e.evaluate(s)[0]);

    auto bad = card;
    bad[ms(2, {0, 1})] = {0.0};
    CHECK_THROWS_WITH_AS(monotone_extension_demo(e, 2, bad), doctest::Contains("not monotone"), Error);
    CHECK_THROWS_AS(monotone_extension_demo(EmbeddingMatrix::from_rows({{1, 1}}), 1, card), Error);
}

TEST_CASE("embedding json")
{
    const auto e = EmbeddingMatrix::from_rows({{1, 0.5}, {0, 2}});
    const auto j = to_json(e);
    CHECK(j["m"] == 2);
    CHECK(j["n"] == 2);
    CHECK(embedding_from_json(j).rows() == e.rows());
    CHECK(to_json(verify_mas(onehot_mas(3), 2)) == nlohmann::json{{"is_mas", true}});
}
