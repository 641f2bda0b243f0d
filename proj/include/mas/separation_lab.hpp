#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mas/activations.hpp"
#include "mas/multiset.hpp"

namespace mas {

enum class Scenario { hat_cube, relu_sphere };
std::string to_string(Scenario s);
Scenario scenario_from_string(const std::string& name);

struct ExperimentConfig {
    GroundSpec ground = GroundSpec::cube(3);
    std::size_t k = 4;
    std::vector<std::size_t> m_list{1, 2, 4, 8, 16};
    std::size_t num_pairs = 20;
    std::size_t num_param_draws = 100000;
    std::uint64_t seed = 0;
    Activation activation = Activation::scaled_hat({});
    Scenario scenario = Scenario::hat_cube;
    /// Displacement sizes are log-spaced over [eps_min, eps_max] across pairs.
    double eps_min = 0.05;
    double eps_max = 1.0;
    /// |S| before displacement; 0 draws it uniformly from [1, k].
    std::size_t s_size = 0;
    /// Every pair reuses the base (T, S, moved points) of pair 0; only the
    /// displacement size and directions vary.
    bool sweep = false;
    /// Extra pairs with S an exact sub-multiset of T, appended after the others.
    std::size_t num_controls = 0;

    void validate() const;
    std::size_t max_m() const;
    std::size_t dim() const { return ground.dim; }
};

nlohmann::json to_json(const ExperimentConfig& cfg);
/// Missing keys keep their defaults.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, ExperimentConfig base = {});

struct ExperimentPair {
    RealMultiset s{1};
    RealMultiset t{1};
    bool control = false;
    double eps = 0.0;
    double d_as = 0.0;
    double w_k = 0.0;
};

/// T: k points from the ground set. S: a random sub-multiset of T with a
/// random non-empty subset of its points displaced by eps (sphere points are
/// renormalized). Pair i uses its own stream, so pair i does not depend on
/// num_pairs.
std::vector<ExperimentPair> generate_pairs(const ExperimentConfig& cfg);
/// Moves `count` >= 1 points of a sub-multiset of T by exactly eps (before
/// renormalization) along random directions.
/// With `base` set, T and S are drawn from that stream and only the directions
/// come from `stream`.
ExperimentPair displaced_pair(const ExperimentConfig& cfg, std::uint64_t stream, double eps,
                              std::optional<std::uint64_t> base = std::nullopt);

struct CellStats {
    std::size_t pair = 0;
    std::size_t m = 0;
    std::uint64_t failures = 0; // draws with F(S) <= F(T) in all m coordinates
    std::uint64_t draws = 0;
    double p_hat = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double e_plus = 0.0; // mean of || [F(S) - F(T)]_+ ||_1
    double e_abs = 0.0;  // mean of || F(S) - F(T) ||_1
};

struct SeparationReport {
    ExperimentConfig config;
    std::vector<ExperimentPair> pairs;
    std::vector<CellStats> cells; // pair-major, m in config order

    const CellStats& cell(std::size_t pair, std::size_t m) const;
    std::string to_csv() const;
    nlohmann::json to_json() const;
};

/// Monte Carlo over parameter draws for the given pairs. Draw r of pair i uses
/// its own stream and samples max_m() coordinates; the m-prefixes share them.
/// Results do not depend on the thread count.
SeparationReport run_separation_experiment(const ExperimentConfig& cfg, std::vector<ExperimentPair> pairs);
SeparationReport run_separation_experiment(const ExperimentConfig& cfg);
/// Single-threaded reference for run_separation_experiment.
SeparationReport run_separation_experiment_serial(const ExperimentConfig& cfg, std::vector<ExperimentPair> pairs);

struct Interval {
    double lo = 0.0;
    double hi = 1.0;
};
/// Wilson score interval at 95%.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials);

struct Correlation {
    double rho = 0.0;
    double p_value = 1.0; // two-sided, t approximation
};
/// Spearman rank correlation with average ranks for ties.
Correlation spearman(const std::vector<double>& x, const std::vector<double>& y);

struct HolderRow {
    std::size_t pair = 0;
    bool control = false;
    double d_as = 0.0;
    double e_plus = 0.0;
};

struct HolderReport {
    SeparationReport raw;
    std::vector<HolderRow> rows;
    Correlation correlation;   // over non-control pairs, e_plus vs d_as
    double fitted_c = 0.0;     // min e_plus / d_as^2 over non-control pairs
    bool all_positive = false; // e_plus > 0 on every non-control pair
    bool controls_zero = true; // e_plus == 0 on every control pair
    nlohmann::json to_json() const;
    std::string to_csv() const;
};

/// Scalar output (m = 1). Used for both the hat/cube and ReLU/sphere settings.
HolderReport run_holder_experiment(ExperimentConfig cfg);
HolderReport run_sphere_relu_experiment(ExperimentConfig cfg);

struct LipschitzRow {
    std::size_t pair = 0;
    double w_k = 0.0;
    double e_abs = 0.0;
    double ratio = 0.0; // e_abs / w_k, or 0 when w_k < 1e-6
};

struct LipschitzReport {
    SeparationReport raw;
    std::vector<LipschitzRow> rows;
    double max_ratio = 0.0;
    nlohmann::json to_json() const;
    std::string to_csv() const;
};

LipschitzReport run_lipschitz_experiment(ExperimentConfig cfg);

} // namespace mas
