#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mas/activations.hpp"
#include "mas/multiset.hpp"
#include "mas/rng.hpp"

namespace mas {

/// F(S)[j] = sum_{x in S} sigma((a_j . x + b_j) / c_j) with unit rows a_j.
/// `scale` is the norm bound B of the ground set: b_j lies in [-B, B] and
/// c_j in (0, 2B].
struct WeakMasParams {
    std::size_t m = 0;
    std::size_t d = 0;
    std::vector<double> A; // m x d, row-major
    std::vector<double> b;
    std::vector<double> c;
    Activation activation = Activation::scaled_hat({});
    double scale = 1.0;

    /// Checks shapes, unit row norms (1e-9), and the ranges of b and c.
    static WeakMasParams make(std::size_t m, std::size_t d, std::vector<double> A, std::vector<double> b,
                              std::vector<double> c, Activation activation, double scale = 1.0);

    std::span<const double> row(std::size_t j) const noexcept { return {A.data() + j * d, d}; }
};

struct SampleOptions {
    Activation activation = Activation::scaled_hat({});
    double scale = 1.0;
    /// Fix c = 1 (plain sum of sigma(a . x + b)).
    bool unit_c = false;
};

/// a ~ uniform on the sphere (normalized Gaussian), b ~ U[-B, B], c ~ U(0, 2B).
WeakMasParams sample_params(std::size_t d, std::size_t m, std::uint64_t seed, const SampleOptions& options = {});
/// Draws one coordinate (a, b, c) from rng into the given buffers.
void sample_coordinate(Rng& rng, std::size_t d, const SampleOptions& options, double* a, double& b, double& c);

/// One output coordinate, summed over the points of S in canonical order.
double eval_coordinate(std::span<const double> a, double b, double c, const Activation& sigma,
                       const RealMultiset& s) noexcept;

std::vector<double> eval_weak_mas(const WeakMasParams& p, const RealMultiset& s);

/// Two-layer ReLU set function: sum_x ReLU(a1 . ReLU(A2 x + b2) + b1), then M2.
struct ReluMasParams {
    std::size_t d = 0;
    std::vector<double> A2; // 3 x d, row-major
    std::vector<double> b2; // 3
    std::vector<double> a1; // 3
    double b1 = 0.0;

    /// Parameters realizing TRI(a . x + b): rows 2a, biases [2b, 2b - 2, 2b - 1],
    /// a1 = [1, 1, -2].
    static ReluMasParams tri(std::span<const double> a, double b);
    /// Rows a, biases [b + 1, b - 1, b], a1 = [1, 1, -2]: the hat with support
    /// [-1, 1] and peak 1 at 0 applied to a . x + b.
    static ReluMasParams unit_hat(std::span<const double> a, double b);
};

using ScalarMap = std::function<double(double)>;

double eval_relu_mas(const ReluMasParams& p, const RealMultiset& s, const ScalarMap& m2 = {});

struct Separator {
    std::vector<double> a;
    double b = 0.0;
    double c = 1.0;
    double margin = 0.0; // F(S) - F(T) > 0
};

struct SeparatorSearch {
    std::optional<Separator> first;
    std::uint64_t first_draw = 0;
    std::uint64_t hits = 0;
    std::uint64_t budget = 0;
    double hit_rate() const noexcept { return budget == 0 ? 0.0 : static_cast<double>(hits) / budget; }
};

/// Monte Carlo search over single-coordinate parameters. The whole budget is
/// drawn so the hit rate is available; `first` is the lowest-index hit.
/// Requires S not a subset of T.
SeparatorSearch find_separator(const RealMultiset& s, const RealMultiset& t, std::uint64_t budget,
                               std::uint64_t seed, const SampleOptions& options = {});

/// S = {(x + y) / 2}, T = {x, y}. Throws when x == y.
std::pair<RealMultiset, RealMultiset> midpoint_witness(std::span<const double> x, std::span<const double> y);

/// Number of single-coordinate draws with F(S) > F(T) for the given pair.
std::uint64_t count_separations(const RealMultiset& s, const RealMultiset& t, std::uint64_t draws,
                                std::uint64_t seed, const SampleOptions& options);

/// F(X) = sum_i sum_j alpha_ij v_j with alpha_i. = softmax_j(q_i . k_j),
/// q = W_Q x, k = W_K x, v = W_V x. Matrices are d x d row-major.
std::vector<double> sum_pooled_attention(std::span<const double> wq, std::span<const double> wk,
                                         std::span<const double> wv, const RealMultiset& x);

struct AttentionDemo {
    RealMultiset s{1};
    RealMultiset t{1};
    std::size_t coordinate = 0;
    double fs = 0.0;
    double ft = 0.0;
    /// ft / fs on the reported coordinate.
    double inflation = 0.0;
    /// e^{|q1|^2} / (e^{|q1|^2} + 1) + 1/2.
    double closed_form = 0.0;
};

/// S = {x1}, T = {x1, 0} with W_Q = W_K = w and W_V = wv. Reports the first
/// coordinate with (W_V x1)[j] < 0.
AttentionDemo set_transformer_nonmonotone_demo(std::size_t d, std::span<const double> w, std::span<const double> wv,
                                               std::span<const double> x1);
/// Random full-rank W_Q = W_K, random W_V and x1 from the seed.
AttentionDemo set_transformer_nonmonotone_demo(std::size_t d, std::uint64_t seed);

nlohmann::json to_json(const WeakMasParams& p);
WeakMasParams weak_mas_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AttentionDemo& demo);

} // namespace mas
