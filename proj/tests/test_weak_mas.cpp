#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mas/error.hpp"
#include "mas/weak_mas.hpp"
#include "oracles.hpp"

using namespace mas;

TEST_CASE("sampled parameters")
{
    const auto p = sample_params(3, 1000, 7);
    double mean_b = 0.0;
    for (std::size_t j = 0; j < p.m; ++j) {
        double norm = 0.0;
        for (double a : p.row(j)) norm += a * a;
        CHECK(std::abs(std::sqrt(norm) - 1.0) <= 1e-9);
        CHECK(std::abs(p.b[j]) <= 1.0);
        CHECK(p.c[j] > 0.0);
        CHECK(p.c[j] <= 2.0);
        mean_b += p.b[j];
    }
    CHECK(std::abs(mean_b / 1000.0) <= 0.05);
    const auto q = sample_params(3, 1000, 7);
    CHECK(q.A == p.A);
    CHECK(q.c == p.c);
    const auto back = weak_mas_from_json(to_json(p));
    CHECK(back.b == p.b);
    CHECK_THROWS_AS(WeakMasParams::make(1, 2, {1.0, 1.0}, {0.0}, {1.0}, Activation::tri()), Error);
}

TEST_CASE("evaluation examples")
{
    const auto p = WeakMasParams::make(1, 1, {1.0}, {0.0}, {1.0}, Activation::tri());
    CHECK(eval_weak_mas(p, RealMultiset(1, {0.5})) == std::vector<double>{1.0});
    CHECK(eval_weak_mas(p, RealMultiset(1)) == std::vector<double>{0.0});
    CHECK_THROWS_AS(eval_weak_mas(p, RealMultiset(2, {0.0, 0.0})), Error);
}

TEST_CASE("pointwise monotonicity and exact increments")
{
    Rng rng(31);
    const Activation kinds[] = {Activation::scaled_hat({}), Activation::tri(), Activation::relu(),
                                Activation::scaled_hat({0.0, 1.0, 0.2})};
    for (int trial = 0; trial < 10000; ++trial) {
        const auto& act = kinds[trial % 4];
        const std::size_t d = 1 + rng.below(3);
        const auto p = sample_params(d, 4, rng(), {act});
        const auto t = oracle::random_points(rng, 1 + rng.below(6), d);
        std::vector<double> sub;
        for (std::size_t i = 0; i < t.size(); ++i)
            if (rng.below(2) == 1) sub.insert(sub.end(), t.point(i).begin(), t.point(i).end());
        const RealMultiset s(d, sub);
        const auto fs = eval_weak_mas(p, s), ft = eval_weak_mas(p, t);
        for (std::size_t j = 0; j < p.m; ++j) CHECK(fs[j] <= ft[j]);
    }
    // Adding a point that sorts last adds exactly its own contribution.
    const auto p = sample_params(2, 3, 5);
    const auto s = RealMultiset::from_points(2, {{-0.5, 0.1}, {0.0, 0.3}});
    const std::vector<double> x{0.9, -0.2};
    const auto before = eval_weak_mas(p, s), after = eval_weak_mas(p, s.with(x)),
               single = eval_weak_mas(p, RealMultiset(2, x));
    for (std::size_t j = 0; j < 3; ++j) CHECK(after[j] == before[j] + single[j]);
}

TEST_CASE("two-layer ReLU parameters")
{
    const std::vector<double> a{1.0};
    const auto p = ReluMasParams::tri(a, 0.0);
    CHECK(eval_relu_mas(p, RealMultiset(1, {0.5})) == 1.0);
    CHECK(eval_relu_mas(p, RealMultiset(1, {0.25, 0.75})) == 1.0);
    CHECK(eval_relu_mas(p, RealMultiset(1), [](double v) { return v + 3.0; }) == 3.0);

    // The unit-hat parameter set peaks at a . x + b = 0 with support [-1, 1].
    const auto u = ReluMasParams::unit_hat(a, 0.0);
    CHECK(eval_relu_mas(u, RealMultiset(1, {0.0})) == 1.0);
    CHECK(eval_relu_mas(u, RealMultiset(1, {0.5})) == 0.5);
    CHECK(eval_relu_mas(u, RealMultiset(1, {1.5})) == 0.0);

    Rng rng(77);
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t d = 1 + rng.below(4);
        std::vector<double> w(d);
        for (double& x : w) x = rng.normal();
        const double b = rng.uniform(-1, 1);
        const auto s = oracle::random_points(rng, rng.below(6), d);
        double expected = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            double z = b;
            for (std::size_t q = 0; q < d; ++q) z += w[q] * s.point(i)[q];
            expected += tri_eval(z);
        }
        CHECK(std::abs(eval_relu_mas(ReluMasParams::tri(w, b), s) - expected) <= 1e-12);
    }
}

TEST_CASE("separator search")
{
    const auto s = RealMultiset(1, {0.0}), t = RealMultiset(1, {1.0});
    const auto r = find_separator(s, t, 2000, 1);
    REQUIRE(r.first.has_value());
    CHECK(r.first->margin > 0.0);
    CHECK(r.hits > 0);
    CHECK(r.budget == 2000);
    CHECK(r.first_draw < 200);
    CHECK_THROWS_AS(find_separator(s, RealMultiset(1, {0.0, 2.0}), 10, 1), Error);

    const auto [z, xy] = midpoint_witness(std::vector<double>{0.0}, std::vector<double>{1.0});
    const auto none = find_separator(z, xy, 5000, 2, {Activation::relu()});
    CHECK_FALSE(none.first.has_value());
}

TEST_CASE("hit rate is invariant under reordering the points")
{
    Rng rng(5);
    const auto t = oracle::random_points(rng, 4, 2);
    const auto s = oracle::random_points(rng, 2, 2);
    auto tp = t.points(), sp = s.points();
    std::reverse(tp.begin(), tp.end());
    std::reverse(sp.begin(), sp.end());
    const auto a = find_separator(s, t, 4000, 9);
    const auto b = find_separator(RealMultiset::from_points(2, sp), RealMultiset::from_points(2, tp), 4000, 9);
    CHECK(a.hits == b.hits);
}

TEST_CASE("midpoint witness")
{
    const auto [s, t] = midpoint_witness(std::vector<double>{0.0}, std::vector<double>{1.0});
    CHECK(s == RealMultiset(1, {0.5}));
    CHECK(t == RealMultiset(1, {0.0, 1.0}));
    CHECK_THROWS_AS(midpoint_witness(std::vector<double>{1.0}, std::vector<double>{1.0}), Error);

    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> x(3), y(3);
        for (double& v : x) v = rng.uniform(-1, 1);
        for (double& v : y) v = rng.uniform(-1, 1);
        const auto [z, xy] = midpoint_witness(x, y);
        CHECK(count_separations(z, xy, 500, trial, {Activation::relu()}) == 0);
    }
    const auto [z, xy] = midpoint_witness(std::vector<double>{0.0}, std::vector<double>{1.0});
    CHECK(count_separations(z, xy, 10000, 1, {Activation::relu()}) == 0);
    CHECK(count_separations(z, xy, 10000, 1, {Activation::tri()}) > 0);
}

TEST_CASE("attention pooling is not monotone")
{
    const std::vector<double> one{1.0}, x1{-1.0};
    const auto demo = set_transformer_nonmonotone_demo(1, one, one, x1);
    CHECK(is_subset_real(demo.s, demo.t));
    CHECK(demo.fs == -1.0);
    CHECK(demo.ft < demo.fs);
    const double e = std::numbers::e;
    CHECK(demo.closed_form == doctest::Approx(e / (e + 1) + 0.5).epsilon(1e-15));
    CHECK(demo.inflation == doctest::Approx(demo.closed_form).epsilon(1e-12));

    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const std::size_t d = 1 + seed % 4;
        const auto r = set_transformer_nonmonotone_demo(d, seed);
        CHECK(is_subset_real(r.s, r.t));
        CHECK(r.ft < r.fs);
        CHECK(r.inflation > 1.0);
        CHECK(r.inflation <= 1.5);
        CHECK(r.inflation == doctest::Approx(r.closed_form).epsilon(1e-9));
    }
    CHECK_THROWS_AS(set_transformer_nonmonotone_demo(1, std::vector<double>{0.0}, one, x1), Error);
}
