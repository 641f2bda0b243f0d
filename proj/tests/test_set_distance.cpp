#include "doctest.h"
#include "mas/error.hpp"
#include "mas/set_distance.hpp"
#include "oracles.hpp"

using namespace mas;

namespace {

CostMatrix matrix(std::vector<std::vector<double>> rows)
{
    CostMatrix c(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) c(i, j) = rows[i][j];
    return c;
}

} // namespace

TEST_CASE("assignment examples")
{
    auto a = assignment_solve(matrix({{1, 3}}));
    CHECK(a.map == std::vector<std::size_t>{0});
    CHECK(a.total_cost == 1.0);

    auto b = assignment_solve(matrix({{1, 2}, {2, 1}}));
    CHECK(b.map == std::vector<std::size_t>{0, 1});
    CHECK(b.total_cost == 2.0);

    CHECK_THROWS_WITH_AS(assignment_solve(matrix({{1}, {2}})), doctest::Contains("pad or swap"), Error);
    CHECK(assignment_solve(CostMatrix(0, 3)).map.empty());
}

TEST_CASE("assignment matches exhaustive injections")
{
    Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + rng.below(4);
        const std::size_t m = n + rng.below(7 - n);
        CostMatrix c(n, m);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) c(i, j) = rng.uniform(0.0, 10.0);
        const auto got = assignment_solve(c);
        CHECK(got.total_cost == doctest::Approx(oracle::min_injection(c)).epsilon(1e-9));
        std::vector<char> seen(m, 0);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK_FALSE(seen[got.map[i]]);
            seen[got.map[i]] = 1;
            total += c(i, got.map[i]);
        }
        CHECK(total == got.total_cost);
    }
}

TEST_CASE("ties resolve to the lexicographically smallest optimal map")
{
    Rng rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + rng.below(4);
        const std::size_t m = n + rng.below(7 - n);
        CostMatrix c(n, m);
        // Small integer costs give many exact ties.
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) c(i, j) = static_cast<double>(rng.below(3));
        const double best = oracle::min_injection(c);
        std::vector<std::size_t> expected;
        for (const auto& map : oracle::injections(n, m)) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) total += c(i, map[i]);
            if (total == best) {
                expected = map;
                break;
            }
        }
        CHECK(assignment_solve(c).map == expected);
    }
}

TEST_CASE("d_as examples")
{
    CHECK(d_as(RealMultiset(1, {0.0}), RealMultiset(1, {1.0, 3.0})) == 1.0);
    const auto s = RealMultiset::from_points(2, {{0, 0}, {1, 0}});
    const auto t = RealMultiset::from_points(2, {{0, 0}, {1, 0}, {5, 5}});
    CHECK(d_as(s, t) == 0.0);
    CHECK(d_as(RealMultiset(2), t) == 0.0);
    CHECK_THROWS_AS(d_as(t, s), Error);
    CHECK_THROWS_AS(d_as(RealMultiset(1, {0.0}), t), Error);
}

TEST_CASE("d_as against brute force and containment")
{
    Rng rng(99);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t dim = 1 + rng.below(3);
        const std::size_t nt = rng.below(7);
        const std::size_t ns = rng.below(std::min<std::size_t>(4, nt) + 1);
        const auto t = oracle::random_points(rng, nt, dim);
        const auto s = oracle::random_points(rng, ns, dim);
        CHECK(d_as(s, t) == doctest::Approx(oracle::d_as(s, t)).epsilon(1e-9));
        CHECK((d_as(s, t) == 0.0) == is_subset_real(s, t));

        // Sub-multiset of t, possibly with one point nudged off.
        std::vector<double> flat;
        for (std::size_t i = 0; i < ns; ++i) {
            const auto p = t.point(i);
            flat.insert(flat.end(), p.begin(), p.end());
        }
        const bool nudge = ns > 0 && rng.below(2) == 1;
        if (nudge) flat[0] += 1e-3;
        const RealMultiset sub(dim, flat);
        CHECK((d_as(sub, t) == 0.0) == !nudge);
        CHECK(is_subset_real(sub, t) == !nudge);
    }
}

TEST_CASE("d_as does not increase when T grows")
{
    Rng rng(5);
    for (int trial = 0; trial < 300; ++trial) {
        const auto t = oracle::random_points(rng, 1 + rng.below(5), 2);
        const auto s = oracle::random_points(rng, 1 + rng.below(t.size()), 2);
        const std::vector<double> y{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        CHECK(d_as(s, t.with(y)) <= d_as(s, t) + 1e-12);
    }
}

TEST_CASE("d_as is asymmetric")
{
    const auto s = RealMultiset(1, {0.0});
    const auto t = RealMultiset(1, {0.0, 1.0});
    CHECK(d_as(s, t) == 0.0);
    CHECK(padded_wasserstein_k(t, s, 2) > 0.0);
}

TEST_CASE("padded Wasserstein")
{
    const std::vector<double> x{0.2, -0.1}, y{0.5, 0.5};
    const auto s = RealMultiset(2, x);
    auto both = x;
    both.insert(both.end(), y.begin(), y.end());
    const auto t = RealMultiset(2, both);
    const auto z = default_padding(2);
    CHECK(z == std::vector<double>{3.0, 0.0});
    CHECK(padded_wasserstein_k(s, t, 2) == doctest::Approx(euclidean_distance(y, z)).epsilon(1e-12));
    CHECK(padded_wasserstein_k(t, t, 2) == 0.0);
    CHECK_THROWS_AS(padded_wasserstein_k(t, s, 1), Error);

    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const auto a = oracle::random_points(rng, rng.below(5), 3);
        const auto b = oracle::random_points(rng, rng.below(5), 3);
        CHECK(padded_wasserstein_k(a, b, 4) == doctest::Approx(padded_wasserstein_k(b, a, 4)).epsilon(1e-12));
    }
}

TEST_CASE("parallel batch equals serial reference")
{
    Rng rng(17);
    std::vector<std::pair<RealMultiset, RealMultiset>> pairs;
    for (int i = 0; i < 64; ++i) {
        auto t = oracle::random_points(rng, 2 + rng.below(5), 3);
        auto s = oracle::random_points(rng, 1 + rng.below(2), 3);
        pairs.emplace_back(std::move(s), std::move(t));
    }
    CHECK(d_as_batch(pairs) == d_as_batch_serial(pairs));
}
