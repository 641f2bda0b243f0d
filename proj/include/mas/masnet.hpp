#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <string>
#include <vector>

#include "json.hpp"
#include "mas/activations.hpp"
#include "mas/multiset.hpp"

namespace mas {

enum class Variant { relu_mas, hat_mas, tri_mas, custom };
enum class OutputKind { relu, tri, hat };
enum class BetaParam { elu, abs };

std::string to_string(Variant v);
Variant variant_from_name(const std::string& name);
std::string to_string(OutputKind k);
OutputKind output_kind_from_name(const std::string& name);

/// Shape of a set network F(S) = M2(sum_{x in S} sigma(M1(x))).
///
/// M1 is `hidden.size()` ReLU layers followed by an affine map into R^m.
/// sigma is applied per coordinate. M2 is the identity, or, with
/// `monotone_outer`, the map p -> |W2| ReLU(|W1| p + b1) + b2 into R^out_dim.
struct MasNetConfig {
    Variant variant = Variant::hat_mas;
    std::size_t d = 0;
    std::size_t m = 0;
    std::vector<std::size_t> hidden;
    OutputKind output = OutputKind::hat;
    BetaParam beta_param = BetaParam::elu;
    double upsilon = 0.01;
    double tau = 1.0;
    bool monotone_outer = false;
    std::size_t outer_width = 0;
    std::size_t out_dim = 0;

    /// relu_mas, hat_mas and tri_mas with one hidden layer of width
    /// `hidden_width` (0 means 4m).
    static MasNetConfig for_variant(Variant v, std::size_t d, std::size_t m, std::size_t hidden_width = 0);
    /// One affine layer straight into the output activation.
    static MasNetConfig pointwise(OutputKind output, std::size_t d, std::size_t m);
    /// Scalar-output model with a monotone outer map.
    static MasNetConfig scalar(OutputKind output, std::size_t d, std::size_t m, std::size_t hidden_width,
                               std::size_t outer_width);

    /// Fills out_dim, checks dimensions, and rejects relu_mas without a hidden layer.
    void validate();
    std::size_t output_dim() const noexcept { return monotone_outer ? out_dim : m; }
};

struct DenseSlot {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t w = 0; // offset of the out x in weight block
    std::size_t b = 0; // offset of the bias block
};

class MasNet {
public:
    MasNet() = default;
    /// Kaiming-uniform weights, biases U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
    /// alpha0 ~ N(0,1), beta0 ~ N(1, 0.1), gamma0 = 0.
    MasNet(MasNetConfig config, std::uint64_t seed);

    const MasNetConfig& config() const noexcept { return config_; }
    std::size_t d() const noexcept { return config_.d; }
    std::size_t m() const noexcept { return config_.m; }
    std::size_t output_dim() const noexcept { return config_.output_dim(); }

    std::vector<double>& params() noexcept { return params_; }
    const std::vector<double>& params() const noexcept { return params_; }
    std::size_t param_count() const noexcept { return params_.size(); }

    const std::vector<DenseSlot>& inner_layers() const noexcept { return layers_; }
    std::size_t hat_offset() const noexcept { return hat_; }
    const DenseSlot& outer_hidden() const noexcept { return outer1_; }
    const DenseSlot& outer_output() const noexcept { return outer2_; }

    /// Effective hat of output coordinate j after reparameterization.
    HatSpec hat(std::size_t j) const;

    /// Sum over points in canonical order, then the outer map.
    std::vector<double> forward(const RealMultiset& s) const;
    /// Pooled vector before the outer map.
    std::vector<double> pooled(const RealMultiset& s) const;
    std::vector<double> outer(std::span<const double> pooled) const;

    /// grad += d<g_out, forward(s)>/d params.
    void backward_set(const RealMultiset& s, std::span<const double> g_out, std::span<double> grad) const;

    nlohmann::json to_json() const;
    static MasNet from_json(const nlohmann::json& j);
    /// FNV-1a over the canonical checkpoint dump.
    std::uint64_t fingerprint() const;

private:
    struct Workspace;
    void embed_point(std::span<const double> x, Workspace& ws) const;
    void layout();

    MasNetConfig config_;
    std::vector<DenseSlot> layers_;
    std::size_t hat_ = 0;
    DenseSlot outer1_;
    DenseSlot outer2_;
    std::vector<double> params_;
};

struct ContainmentPair {
    RealMultiset s{1};
    RealMultiset t{1};
    int y = 0;
    double noise_std = 0.0;
};

enum class HingeForm {
    /// (1 - y) min_i [F(S)_i - F(T)_i + delta]_+
    display,
    /// (1 - y) min_i [F(T)_i - F(S)_i + delta]_+ : zero once one coordinate
    /// of F(S) exceeds F(T) by delta.
    separating,
};
std::string to_string(HingeForm f);
HingeForm hinge_form_from_name(const std::string& name);

/// y max_i [F(S)_i - F(T)_i + delta]_+ plus the y = 0 term of `form`.
/// Optional outputs receive dL/dF(S) and dL/dF(T); the min/max is taken at
/// the smallest achieving index. Non-finite embeddings give NaN.
double hinge_loss(std::span<const double> fs, std::span<const double> ft, int y, double delta, HingeForm form,
                  std::vector<double>* gs = nullptr, std::vector<double>* gt = nullptr);
double hinge_loss(const MasNet& model, const ContainmentPair& pair, double delta, HingeForm form = HingeForm::display);

/// Summed loss over the batch. `grad` is resized to param_count and holds the
/// summed gradient. Per-example gradients are reduced in batch order.
double backward(const MasNet& model, std::span<const ContainmentPair> batch, double delta, HingeForm form,
                std::vector<double>& grad);
double backward_serial(const MasNet& model, std::span<const ContainmentPair> batch, double delta, HingeForm form,
                       std::vector<double>& grad);

struct SyntheticSpec {
    std::size_t num_pairs = 1000;
    std::size_t s_size = 1;
    std::size_t t_size = 10;
    std::size_t d = 4;
    double noise_std = 0.0;
    double pos_ratio = 0.5;
    std::uint64_t seed = 0;
};

std::vector<ContainmentPair> generate_synthetic(const SyntheticSpec& spec);

enum class Split { train, dev, test };
/// 5:2:2 by a hash of the pair index.
Split split_of(std::size_t index) noexcept;

struct DatasetSplits {
    std::vector<ContainmentPair> train;
    std::vector<ContainmentPair> dev;
    std::vector<ContainmentPair> test;
};
DatasetSplits split_dataset(const std::vector<ContainmentPair>& pairs);

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double accuracy() const noexcept;
    std::size_t total() const noexcept { return tp + fp + tn + fn; }
};

/// Predicts y = 1 iff F(S) <= F(T) + delta_eval in every coordinate. A
/// noise-free positive predicted negative at delta_eval >= 0 breaks
/// monotonicity and raises.
Confusion evaluate_containment(const MasNet& model, std::span<const ContainmentPair> pairs, double delta_eval = 0.0);

enum class Optimizer { adam, sgd };

struct TrainConfig {
    double delta = 0.1;
    double delta_eval = 0.0;
    double lr = 1e-3;
    /// Learning rate falls linearly to lr * lr_final over the epochs.
    double lr_final = 1.0;
    std::size_t epochs = 30;
    std::size_t batch_size = 32;
    Optimizer optimizer = Optimizer::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 0;
    std::size_t patience = 10;
    HingeForm loss_form = HingeForm::separating;
    bool parallel = true;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double dev_loss = 0.0;
    double dev_accuracy = 0.0;
};

struct TrainResult {
    MasNet model;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_dev_accuracy = 0.0;
};

/// Mini-batch training with early stopping on dev accuracy; returns the best
/// model seen (the initial one when epochs == 0). Throws on a non-finite loss.
TrainResult train(MasNet model, const std::vector<ContainmentPair>& train_set,
                  const std::vector<ContainmentPair>& dev_set, const TrainConfig& cfg);

/// Adam or SGD over a flat parameter vector.
class OptimizerState {
public:
    OptimizerState(const TrainConfig& cfg, std::size_t n);
    void step(std::vector<double>& params, std::span<const double> grad);
    void set_lr(double lr) noexcept { cfg_.lr = lr; }

private:
    TrainConfig cfg_;
    std::vector<double> m_;
    std::vector<double> v_;
    std::uint64_t t_ = 0;
};

// Monotone regression targets.

enum class TargetKind { cardinality, constant, coverage, sum_of_max };
std::string to_string(TargetKind k);
TargetKind target_kind_from_name(const std::string& name);

/// coverage: sum_j max_{x in S} TRI(a_j . x + b_j).
/// sum_of_max: sum_j max_{x in S} ReLU(u_j . x).
/// Both are 0 on the empty set and monotone under inclusion.
struct MonotoneTarget {
    TargetKind kind = TargetKind::cardinality;
    std::size_t d = 0;
    std::size_t terms = 0;
    double value = 1.0;           // constant
    std::vector<double> dirs;     // terms x d
    std::vector<double> offsets;  // terms

    static MonotoneTarget make(TargetKind kind, std::size_t d, std::uint64_t seed, std::size_t terms = 8);
    double operator()(const RealMultiset& s) const;
};

struct RegressionSample {
    RealMultiset s{1};
    double y = 0.0;
};

/// Sets of size uniform in [1, max_size], points N(0, I).
std::vector<RegressionSample> generate_regression(const MonotoneTarget& target, std::size_t count,
                                                  std::size_t max_size, std::uint64_t seed);

struct FitResult {
    MasNet model;
    double train_mae = 0.0;
    double test_mae = 0.0;
    std::vector<double> loss_history;
};

double mean_absolute_error(const MasNet& model, std::span<const RegressionSample> samples);

/// MSE training of a scalar-output model; MAE reported on both sets.
FitResult fit_monotone_function(MasNet model, const std::vector<RegressionSample>& train_set,
                                const std::vector<RegressionSample>& test_set, const TrainConfig& cfg);

nlohmann::json to_json(const ContainmentPair& p);
ContainmentPair containment_pair_from_json(const nlohmann::json& j);
std::string to_jsonl(std::span<const ContainmentPair> pairs);
std::vector<ContainmentPair> pairs_from_jsonl(const std::string& text);
nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
nlohmann::json to_json(const EpochRecord& r);
nlohmann::json to_json(const Confusion& c);

std::uint64_t fnv1a(std::string_view bytes) noexcept;

} // namespace mas
