#include <set>

#include "doctest.h"
#include "mas/error.hpp"
#include "mas/multiset.hpp"
#include "oracles.hpp"

using namespace mas;

TEST_CASE("enumeration order and count")
{
    const auto sets = enumerate_multisets(2, 2);
    std::vector<std::vector<Element>> got;
    for (const auto& s : sets) got.push_back(s.elements());
    CHECK(got == std::vector<std::vector<Element>>{{}, {0}, {0, 0}, {0, 1}, {1}, {1, 1}});

    for (std::size_t n = 1; n <= 6; ++n)
        for (std::size_t k = 0; k <= 4; ++k) {
            const auto all = enumerate_multisets(n, k);
            CHECK(all.size() == oracle::binomial(n + k, k));
            CHECK(multiset_count(n, k) == all.size());
            std::set<Multiset> unique(all.begin(), all.end());
            CHECK(unique.size() == all.size());
            CHECK(std::is_sorted(all.begin(), all.end()));
            for (const auto& s : all) CHECK(s.cardinality() <= k);
        }
    CHECK_THROWS_AS(enumerate_multisets(50, 10), Error);
}

TEST_CASE("multiset basics")
{
    Multiset s(3, {{0, 2}, {2, 1}});
    CHECK(s.cardinality() == 3);
    CHECK(s.count(0) == 2);
    CHECK(s.count(1) == 0);
    CHECK(s.dense() == std::vector<std::uint32_t>{2, 0, 1});
    CHECK(Multiset(3, {{1, 0}}).empty());
    CHECK_THROWS_AS(Multiset(3, {{3, 1}}), Error);
    CHECK(s.with(1) == Multiset(3, {{0, 2}, {1, 1}, {2, 1}}));

    CHECK(is_subset(Multiset(3, {{0, 1}}), s));
    CHECK_FALSE(is_subset(Multiset(3, {{0, 3}}), s));
    CHECK(is_subset(Multiset(3), Multiset(3)));
    CHECK_THROWS_AS(is_subset(Multiset(2), Multiset(3)), Error);
}

TEST_CASE("subset relation is a partial order on enumerated multisets")
{
    const auto all = enumerate_multisets(3, 3);
    for (const auto& a : all) {
        CHECK(is_subset(a, a));
        for (const auto& b : all) {
            if (is_subset(a, b) && is_subset(b, a)) CHECK(a == b);
            const bool by_counts = [&] {
                for (Element v = 0; v < 3; ++v)
                    if (a.count(v) > b.count(v)) return false;
                return true;
            }();
            CHECK(is_subset(a, b) == by_counts);
        }
    }
}

TEST_CASE("real multisets are canonical")
{
    const auto a = RealMultiset::from_points(2, {{1, 0}, {0, 1}, {0, 0}});
    const auto b = RealMultiset::from_points(2, {{0, 0}, {1, 0}, {0, 1}});
    CHECK(a == b);
    CHECK(a.points().front() == std::vector<double>{0, 0});
    CHECK(RealMultiset(1, {-0.0}) == RealMultiset(1, {0.0}));
    CHECK_THROWS_AS(RealMultiset(1, {std::nan("")}), Error);
    CHECK_THROWS_AS(RealMultiset(2, {1.0}), Error);
    CHECK(RealMultiset(2).empty());
}

TEST_CASE("is_subset_real matches counting oracle")
{
    Rng rng(11);
    for (int trial = 0; trial < 400; ++trial) {
        // Points from a small lattice so repeats and exact containment occur.
        auto draw = [&](std::size_t count) {
            std::vector<double> flat(count * 2);
            for (double& x : flat) x = static_cast<double>(rng.below(3));
            return RealMultiset(2, std::move(flat));
        };
        const auto s = draw(rng.below(4));
        const auto t = draw(rng.below(6));
        CHECK(is_subset_real(s, t) == oracle::is_subset_exact(s, t));
    }
    const auto s = RealMultiset(1, {0.0});
    const auto t = RealMultiset(1, {0.05});
    CHECK_FALSE(is_subset_real(s, t));
    CHECK(is_subset_real(s, t, 0.1));
}

TEST_CASE("ground specs")
{
    CHECK(GroundSpec::cube(3).norm_bound() == doctest::Approx(std::sqrt(3.0)));
    CHECK(GroundSpec::sphere(3).norm_bound() == 1.0);
    CHECK_THROWS_AS(GroundSpec::finite(0).validate(), Error);
}

TEST_CASE("json round trip")
{
    Multiset s(4, {{3, 2}, {1, 1}});
    CHECK(to_json(s) == nlohmann::json::parse("[[1,1],[3,2]]"));
    CHECK(multiset_from_json(to_json(s), 4) == s);
    CHECK_THROWS_AS(multiset_from_json(nlohmann::json::parse("[[7,1]]"), 4), Error);

    const auto r = RealMultiset::from_points(2, {{0.5, -1}, {0, 0}});
    CHECK(real_multiset_from_json(to_json(r)) == r);
    CHECK(real_multiset_from_json(nlohmann::json::array(), 3) == RealMultiset(3));
}
