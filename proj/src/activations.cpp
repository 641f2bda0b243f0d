#include "mas/activations.hpp"

#include <algorithm>
#include <cmath>

#include "mas/error.hpp"

namespace mas {

void HatSpec::validate() const
{
    if (!std::isfinite(alpha)) throw Error("hat alpha must be finite");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw Error("hat beta must be positive");
    if (!(gamma > 0.0 && gamma < 1.0)) throw Error("hat gamma must lie in (0, 1)");
}

double relu(double x) noexcept
{
    return x < 0.0 ? 0.0 : x;
}

double hat_eval(const HatSpec& s, double x) noexcept
{
    if (x == s.peak()) return 1.0;
    const double u = x - s.alpha;
    const double rise = s.gamma * s.beta;
    if (u <= 0.0 || u >= s.beta) return 0.0;
    if (u < rise) return u / rise;
    return (s.beta - u) / ((1.0 - s.gamma) * s.beta);
}

double hat_eval_relu(const HatSpec& s, double x) noexcept
{
    const double g = s.gamma, b = s.beta;
    return relu((x - s.alpha) / (g * b)) + relu((x - (s.alpha + b)) / ((1.0 - g) * b)) -
           relu((x - (s.alpha + g * b)) / (g * (1.0 - g) * b));
}

HatGrad hat_grad(const HatSpec& s, double x) noexcept
{
    const double u = x - s.alpha;
    const double g = s.gamma, b = s.beta;
    HatGrad out;
    if (u < 0.0 || u >= b) return out;
    if (u < g * b) {
        out.dx = 1.0 / (g * b);
        out.dalpha = -out.dx;
        out.dbeta = -u / (g * b * b);
        out.dgamma = -u / (g * g * b);
    } else {
        const double h = 1.0 - g;
        out.dx = -1.0 / (h * b);
        out.dalpha = -out.dx;
        out.dbeta = u / (h * b * b);
        out.dgamma = (1.0 - u / b) / (h * h);
    }
    return out;
}

double tri_eval(double x) noexcept
{
    if (x <= 0.0 || x >= 1.0) return 0.0;
    return x <= 0.5 ? 2.0 * x : 2.0 - 2.0 * x;
}

double tri_relu(double x) noexcept
{
    return relu(relu(2.0 * x) + relu(2.0 * x - 2.0) - relu(4.0 * x - 2.0));
}

double tri_relu_identity_check(std::span<const double> grid) noexcept
{
    double worst = 0.0;
    for (double x : grid) worst = std::max(worst, std::abs(tri_eval(x) - tri_relu(x)));
    return worst;
}

bool is_hat(std::span<const double> xs, std::span<const double> ys, double hint_lo, double hint_hi, double lipschitz)
{
    if (xs.size() != ys.size()) throw Error("sample table size mismatch");
    bool nonzero = false;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(ys[i] >= 0.0)) return false;
        if ((xs[i] < hint_lo || xs[i] > hint_hi) && ys[i] != 0.0) return false;
        if (ys[i] > 0.0) nonzero = true;
        if (i > 0) {
            const double step = xs[i] - xs[i - 1];
            if (!(step > 0.0)) throw Error("sample points must be increasing");
            if (std::abs(ys[i] - ys[i - 1]) > lipschitz * step * (1.0 + 1e-12)) return false;
        }
    }
    return nonzero;
}

Activation Activation::hat(const HatSpec& spec)
{
    spec.validate();
    return Activation(Kind::hat, spec);
}

Activation Activation::scaled_hat(const HatSpec& spec)
{
    spec.validate();
    return Activation(Kind::scaled_hat, spec);
}

std::string Activation::name() const
{
    switch (kind_) {
    case Kind::hat: return "hat";
    case Kind::tri: return "tri";
    case Kind::relu: return "relu";
    case Kind::scaled_hat: return "scaled_hat";
    }
    return "tri";
}

double Activation::operator()(double x) const noexcept
{
    switch (kind_) {
    case Kind::hat: return hat_eval(spec_, x);
    case Kind::tri: return tri_eval(x);
    case Kind::relu: return mas::relu(x);
    case Kind::scaled_hat: return hat_eval(spec_, spec_.alpha + spec_.beta * x);
    }
    return 0.0;
}

double Activation::derivative(double x) const noexcept
{
    switch (kind_) {
    case Kind::hat: return hat_grad(spec_, x).dx;
    case Kind::tri:
        if (x < 0.0 || x >= 1.0) return 0.0;
        return x < 0.5 ? 2.0 : -2.0;
    case Kind::relu: return x >= 0.0 ? 1.0 : 0.0;
    case Kind::scaled_hat: return spec_.beta * hat_grad(spec_, spec_.alpha + spec_.beta * x).dx;
    }
    return 0.0;
}

nlohmann::json to_json(const Activation& a)
{
    nlohmann::json j{{"kind", a.name()}};
    if (a.kind() == Activation::Kind::hat || a.kind() == Activation::Kind::scaled_hat) {
        j["alpha"] = a.spec().alpha;
        j["beta"] = a.spec().beta;
        j["gamma"] = a.spec().gamma;
    }
    return j;
}

Activation activation_from_json(const nlohmann::json& j)
{
    if (j.is_string()) return activation_from_name(j.get<std::string>());
    if (!j.is_object() || !j.contains("kind")) throw Error("activation JSON needs a kind");
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "tri") return Activation::tri();
    if (kind == "relu") return Activation::relu();
    HatSpec s{j.value("alpha", 0.0), j.value("beta", 1.0), j.value("gamma", 0.5)};
    if (kind == "hat") return Activation::hat(s);
    if (kind == "scaled_hat") return Activation::scaled_hat(s);
    throw Error("unknown activation kind: " + kind);
}

Activation activation_from_name(const std::string& name)
{
    if (name == "tri") return Activation::tri();
    if (name == "relu") return Activation::relu();
    if (name == "hat") return Activation::hat({});
    if (name == "scaled_hat") return Activation::scaled_hat({});
    throw Error("unknown activation: " + name);
}

} // namespace mas
