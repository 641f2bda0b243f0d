#pragma once

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace mas {

/// Piecewise-linear hat: rises 0 -> 1 on [alpha, alpha + gamma*beta], falls
/// 1 -> 0 on [alpha + gamma*beta, alpha + beta], zero elsewhere.
struct HatSpec {
    double alpha = 0.0;
    double beta = 1.0;
    double gamma = 0.5;

    void validate() const;
    double peak() const noexcept { return alpha + gamma * beta; }
};

double relu(double x) noexcept;

/// Direct piecewise evaluation; exactly 1 at the peak.
double hat_eval(const HatSpec& spec, double x) noexcept;
/// The same function written as a sum of three ReLUs. Agrees with hat_eval
/// up to rounding; kept as a reference.
double hat_eval_relu(const HatSpec& spec, double x) noexcept;

/// Partial derivatives of hat_eval. Right-hand derivatives at the kinks
/// alpha, alpha + gamma*beta and alpha + beta.
struct HatGrad {
    double dx = 0.0;
    double dalpha = 0.0;
    double dbeta = 0.0;
    double dgamma = 0.0;
};
HatGrad hat_grad(const HatSpec& spec, double x) noexcept;

/// Symmetric unit hat on [0, 1] with peak 1 at 1/2.
double tri_eval(double x) noexcept;
/// ReLU(ReLU(2x) + ReLU(2x - 2) - ReLU(4x - 2)).
double tri_relu(double x) noexcept;
/// max |tri_eval - tri_relu| over the grid; 0 for an empty grid.
double tri_relu_identity_check(std::span<const double> grid) noexcept;

/// Numerical hat-class test on a sampled function: non-negative, zero outside
/// [hint_lo, hint_hi], not identically zero, and adjacent samples differ by at
/// most lipschitz * spacing. xs must be increasing.
bool is_hat(std::span<const double> xs, std::span<const double> ys, double hint_lo, double hint_hi,
            double lipschitz = 1e3);

/// Pointwise activation. scaled_hat(t) = hat_eval(spec, alpha + beta * t) has
/// support [0, 1] for any HatSpec.
class Activation {
public:
    enum class Kind { hat, tri, relu, scaled_hat };

    Activation() = default;
    static Activation tri() { return Activation(Kind::tri, {}); }
    static Activation relu() { return Activation(Kind::relu, {}); }
    static Activation hat(const HatSpec& spec);
    static Activation scaled_hat(const HatSpec& spec);

    Kind kind() const noexcept { return kind_; }
    const HatSpec& spec() const noexcept { return spec_; }
    std::string name() const;
    bool non_negative() const noexcept { return true; }

    double operator()(double x) const noexcept;
    /// Right-hand derivative in x.
    double derivative(double x) const noexcept;

private:
    Activation(Kind kind, HatSpec spec) : kind_(kind), spec_(spec) {}

    Kind kind_ = Kind::tri;
    HatSpec spec_;
};

/// {"kind": "tri"} / {"kind": "relu"} / {"kind": "hat", "alpha":..., "beta":..., "gamma":...}
nlohmann::json to_json(const Activation& a);
Activation activation_from_json(const nlohmann::json& j);
/// "tri", "relu", "hat" (unit symmetric hat), "scaled_hat".
Activation activation_from_name(const std::string& name);

} // namespace mas
