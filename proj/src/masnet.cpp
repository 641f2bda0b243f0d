#include "mas/masnet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mas/error.hpp"
#include "mas/parallel.hpp"
#include "mas/rng.hpp"

namespace mas {

namespace {

constexpr std::uint64_t kSplitTag = 0x5be0cd19137e2179ULL;

double sigmoid(double x) noexcept
{
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double relu_grad(double x) noexcept { return x >= 0.0 ? 1.0 : 0.0; }
double sign_of(double w) noexcept { return w >= 0.0 ? 1.0 : -1.0; }

std::size_t argmax_first(std::span<const double> v)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

std::size_t argmin_first(std::span<const double> v)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] < v[best]) best = i;
    return best;
}

// y = W x + b for a slot inside `p`.
void affine(const DenseSlot& s, const double* p, const double* x, double* y, bool abs_weights = false) noexcept
{
    for (std::size_t o = 0; o < s.out; ++o) {
        const double* w = p + s.w + o * s.in;
        double acc = p[s.b + o];
        if (abs_weights)
            for (std::size_t i = 0; i < s.in; ++i) acc += std::abs(w[i]) * x[i];
        else
            for (std::size_t i = 0; i < s.in; ++i) acc += w[i] * x[i];
        y[o] = acc;
    }
}

bool all_finite(std::span<const double> v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Sums per-example (loss, gradient) contributions in index order. The
// parallel path computes a chunk of examples concurrently into private
// buffers and adds them in the same order as the serial path, so both give
// identical results.
template <class Example>
double reduce_examples(std::size_t count, std::size_t nparams, bool parallel, std::vector<double>& grad,
                       Example&& example)
{
    grad.assign(nparams, 0.0);
    double loss = 0.0;
    if (!parallel) {
        std::vector<double> buf(nparams);
        for (std::size_t i = 0; i < count; ++i) {
            std::fill(buf.begin(), buf.end(), 0.0);
            loss += example(i, std::span<double>(buf));
            for (std::size_t p = 0; p < nparams; ++p) grad[p] += buf[p];
        }
        return loss;
    }
    const std::size_t chunk = std::max<std::size_t>(2 * static_cast<std::size_t>(max_threads()), 1);
    std::vector<std::vector<double>> bufs(std::min(chunk, count), std::vector<double>(nparams));
    std::vector<double> losses(bufs.size());
    for (std::size_t start = 0; start < count; start += chunk) {
        const std::size_t len = std::min(chunk, count - start);
        parallel_for(len, [&](std::size_t k) {
            std::fill(bufs[k].begin(), bufs[k].end(), 0.0);
            losses[k] = example(start + k, std::span<double>(bufs[k]));
        });
        for (std::size_t k = 0; k < len; ++k) {
            loss += losses[k];
            for (std::size_t p = 0; p < nparams; ++p) grad[p] += bufs[k][p];
        }
    }
    return loss;
}

} // namespace

// ---------------------------------------------------------------------------
// Names

std::string to_string(Variant v)
{
    switch (v) {
    case Variant::relu_mas: return "relu_mas";
    case Variant::hat_mas: return "hat_mas";
    case Variant::tri_mas: return "tri_mas";
    case Variant::custom: return "custom";
    }
    return "custom";
}

Variant variant_from_name(const std::string& name)
{
    if (name == "relu_mas") return Variant::relu_mas;
    if (name == "hat_mas") return Variant::hat_mas;
    if (name == "tri_mas") return Variant::tri_mas;
    if (name == "custom") return Variant::custom;
    throw Error("unknown variant: " + name);
}

std::string to_string(OutputKind k)
{
    switch (k) {
    case OutputKind::relu: return "relu";
    case OutputKind::tri: return "tri";
    case OutputKind::hat: return "hat";
    }
    return "hat";
}

OutputKind output_kind_from_name(const std::string& name)
{
    if (name == "relu") return OutputKind::relu;
    if (name == "tri") return OutputKind::tri;
    if (name == "hat") return OutputKind::hat;
    throw Error("unknown output activation: " + name);
}

std::string to_string(HingeForm f) { return f == HingeForm::display ? "display" : "separating"; }

HingeForm hinge_form_from_name(const std::string& name)
{
    if (name == "display") return HingeForm::display;
    if (name == "separating") return HingeForm::separating;
    throw Error("unknown loss form: " + name);
}

std::string to_string(TargetKind k)
{
    switch (k) {
    case TargetKind::cardinality: return "cardinality";
    case TargetKind::constant: return "constant";
    case TargetKind::coverage: return "coverage";
    case TargetKind::sum_of_max: return "sum_of_max";
    }
    return "cardinality";
}

TargetKind target_kind_from_name(const std::string& name)
{
    if (name == "cardinality") return TargetKind::cardinality;
    if (name == "constant") return TargetKind::constant;
    if (name == "coverage") return TargetKind::coverage;
    if (name == "sum_of_max") return TargetKind::sum_of_max;
    throw Error("unknown target: " + name);
}

// ---------------------------------------------------------------------------
// Config

MasNetConfig MasNetConfig::for_variant(Variant v, std::size_t d, std::size_t m, std::size_t hidden_width)
{
    MasNetConfig c;
    c.variant = v;
    c.d = d;
    c.m = m;
    c.hidden = {hidden_width == 0 ? 4 * m : hidden_width};
    switch (v) {
    case Variant::relu_mas: c.output = OutputKind::relu; break;
    case Variant::hat_mas: c.output = OutputKind::hat; break;
    case Variant::tri_mas: c.output = OutputKind::tri; break;
    case Variant::custom: throw Error("for_variant needs a named variant");
    }
    c.validate();
    return c;
}

MasNetConfig MasNetConfig::pointwise(OutputKind output, std::size_t d, std::size_t m)
{
    MasNetConfig c;
    c.variant = Variant::custom;
    c.d = d;
    c.m = m;
    c.output = output;
    c.validate();
    return c;
}

MasNetConfig MasNetConfig::scalar(OutputKind output, std::size_t d, std::size_t m, std::size_t hidden_width,
                                  std::size_t outer_width)
{
    MasNetConfig c;
    c.variant = Variant::custom;
    c.d = d;
    c.m = m;
    if (hidden_width > 0) c.hidden = {hidden_width};
    c.output = output;
    c.monotone_outer = true;
    c.outer_width = outer_width;
    c.out_dim = 1;
    c.validate();
    return c;
}

void MasNetConfig::validate()
{
    if (d == 0 || m == 0) throw Error("model needs d > 0 and m > 0");
    for (std::size_t w : hidden)
        if (w == 0) throw Error("hidden widths must be positive");
    if (variant == Variant::relu_mas && (hidden.empty() || output != OutputKind::relu))
        throw Error("relu_mas needs ReLU output after at least one hidden layer");
    if (variant == Variant::hat_mas && output != OutputKind::hat) throw Error("hat_mas needs hat output");
    if (variant == Variant::tri_mas && output != OutputKind::tri) throw Error("tri_mas needs tri output");
    if (!(upsilon > 0.0) || !(tau > 0.0)) throw Error("upsilon and tau must be positive");
    if (monotone_outer) {
        if (outer_width == 0) throw Error("monotone outer map needs outer_width > 0");
        if (out_dim == 0) out_dim = m;
    } else {
        outer_width = 0;
        out_dim = m;
    }
}

// ---------------------------------------------------------------------------
// Model

struct MasNet::Workspace {
    std::vector<std::vector<double>> acts; // input of each inner layer
    std::vector<std::vector<double>> pre;  // pre-activation of each inner layer
    std::vector<HatSpec> hats;
    std::vector<double> y;

    explicit Workspace(const MasNet& net)
    {
        const auto& L = net.layers_;
        acts.resize(L.size());
        pre.resize(L.size());
        for (std::size_t l = 0; l < L.size(); ++l) {
            acts[l].resize(L[l].in);
            pre[l].resize(L[l].out);
        }
        y.resize(net.m());
        if (net.config_.output == OutputKind::hat) {
            hats.resize(net.m());
            for (std::size_t j = 0; j < net.m(); ++j) hats[j] = net.hat(j);
        }
    }
};

void MasNet::layout()
{
    layers_.clear();
    std::size_t off = 0;
    auto add = [&](std::size_t in, std::size_t out) {
        DenseSlot s{in, out, off, off + in * out};
        off += in * out + out;
        return s;
    };
    std::size_t in = config_.d;
    for (std::size_t w : config_.hidden) {
        layers_.push_back(add(in, w));
        in = w;
    }
    layers_.push_back(add(in, config_.m));
    hat_ = off;
    if (config_.output == OutputKind::hat) off += 3 * config_.m;
    outer1_ = outer2_ = DenseSlot{};
    if (config_.monotone_outer) {
        outer1_ = add(config_.m, config_.outer_width);
        outer2_ = add(config_.outer_width, config_.out_dim);
    }
    params_.assign(off, 0.0);
}

MasNet::MasNet(MasNetConfig config, std::uint64_t seed) : config_(std::move(config))
{
    config_.validate();
    layout();
    Rng rng(mix64(seed ^ 0x6a09e667f3bcc909ULL));
    auto init = [&](const DenseSlot& s) {
        const double wb = std::sqrt(6.0 / static_cast<double>(s.in));
        const double bb = 1.0 / std::sqrt(static_cast<double>(s.in));
        for (std::size_t i = 0; i < s.in * s.out; ++i) params_[s.w + i] = rng.uniform(-wb, wb);
        for (std::size_t i = 0; i < s.out; ++i) params_[s.b + i] = rng.uniform(-bb, bb);
    };
    for (const auto& s : layers_) init(s);
    if (config_.output == OutputKind::hat) {
        const std::size_t m = config_.m;
        for (std::size_t j = 0; j < m; ++j) params_[hat_ + j] = rng.normal();
        for (std::size_t j = 0; j < m; ++j) params_[hat_ + m + j] = 1.0 + 0.1 * rng.normal();
        for (std::size_t j = 0; j < m; ++j) params_[hat_ + 2 * m + j] = 0.0;
    }
    if (config_.monotone_outer) {
        init(outer1_);
        init(outer2_);
    }
}

HatSpec MasNet::hat(std::size_t j) const
{
    if (config_.output != OutputKind::hat) throw Error("model has no hat output");
    const std::size_t m = config_.m;
    const double b0 = params_[hat_ + m + j];
    const double u = config_.upsilon;
    HatSpec s;
    s.alpha = params_[hat_ + j];
    if (config_.beta_param == BetaParam::elu)
        s.beta = b0 > 0.0 ? b0 + u : u * std::exp(b0);
    else
        s.beta = std::abs(b0) + u;
    s.gamma = sigmoid(config_.tau * params_[hat_ + 2 * m + j]);
    return s;
}

void MasNet::embed_point(std::span<const double> x, Workspace& ws) const
{
    const double* p = params_.data();
    std::copy(x.begin(), x.end(), ws.acts[0].begin());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        affine(layers_[l], p, ws.acts[l].data(), ws.pre[l].data());
        if (l + 1 < layers_.size())
            for (std::size_t i = 0; i < layers_[l].out; ++i) ws.acts[l + 1][i] = relu(ws.pre[l][i]);
    }
    const auto& z = ws.pre.back();
    for (std::size_t j = 0; j < config_.m; ++j) {
        switch (config_.output) {
        case OutputKind::relu: ws.y[j] = relu(z[j]); break;
        case OutputKind::tri: ws.y[j] = tri_eval(z[j]); break;
        case OutputKind::hat: ws.y[j] = hat_eval(ws.hats[j], z[j]); break;
        }
    }
}

std::vector<double> MasNet::pooled(const RealMultiset& s) const
{
    if (s.dim() != config_.d) throw Error("dimension mismatch: model d=" + std::to_string(config_.d) +
                                          ", set d=" + std::to_string(s.dim()));
    std::vector<double> acc(config_.m, 0.0);
    if (s.empty()) return acc;
    Workspace ws(*this);
    for (std::size_t i = 0; i < s.size(); ++i) {
        embed_point(s.point(i), ws);
        for (std::size_t j = 0; j < config_.m; ++j) acc[j] += ws.y[j];
    }
    return acc;
}

std::vector<double> MasNet::outer(std::span<const double> p) const
{
    if (!config_.monotone_outer) return {p.begin(), p.end()};
    std::vector<double> u(outer1_.out), out(outer2_.out);
    affine(outer1_, params_.data(), p.data(), u.data(), true);
    for (double& v : u) v = relu(v);
    affine(outer2_, params_.data(), u.data(), out.data(), true);
    return out;
}

std::vector<double> MasNet::forward(const RealMultiset& s) const { return outer(pooled(s)); }

void MasNet::backward_set(const RealMultiset& s, std::span<const double> g_out, std::span<double> grad) const
{
    if (g_out.size() != output_dim()) throw Error("gradient size mismatch");
    if (grad.size() != params_.size()) throw Error("parameter gradient size mismatch");
    const double* p = params_.data();
    const std::size_t m = config_.m;
    const std::vector<double> pool = pooled(s);

    std::vector<double> gp(g_out.begin(), g_out.end());
    if (config_.monotone_outer) {
        const auto& o1 = outer1_;
        const auto& o2 = outer2_;
        std::vector<double> upre(o1.out), u(o1.out);
        affine(o1, p, pool.data(), upre.data(), true);
        for (std::size_t j = 0; j < o1.out; ++j) u[j] = relu(upre[j]);
        std::vector<double> gu(o1.out, 0.0);
        for (std::size_t i = 0; i < o2.out; ++i) {
            grad[o2.b + i] += g_out[i];
            for (std::size_t j = 0; j < o2.in; ++j) {
                const double w = p[o2.w + i * o2.in + j];
                grad[o2.w + i * o2.in + j] += g_out[i] * u[j] * sign_of(w);
                gu[j] += g_out[i] * std::abs(w);
            }
        }
        gp.assign(m, 0.0);
        for (std::size_t j = 0; j < o1.out; ++j) {
            const double g = gu[j] * relu_grad(upre[j]);
            grad[o1.b + j] += g;
            for (std::size_t k = 0; k < m; ++k) {
                const double w = p[o1.w + j * m + k];
                grad[o1.w + j * m + k] += g * pool[k] * sign_of(w);
                gp[k] += g * std::abs(w);
            }
        }
    }
    if (s.empty()) return;

    Workspace ws(*this);
    const std::size_t L = layers_.size();
    std::vector<std::vector<double>> delta(L);
    for (std::size_t l = 0; l < L; ++l) delta[l].resize(layers_[l].out);

    for (std::size_t n = 0; n < s.size(); ++n) {
        embed_point(s.point(n), ws);
        const auto& z = ws.pre.back();
        auto& dz = delta.back();
        for (std::size_t j = 0; j < m; ++j) {
            switch (config_.output) {
            case OutputKind::relu: dz[j] = gp[j] * relu_grad(z[j]); break;
            case OutputKind::tri:
                dz[j] = (z[j] < 0.0 || z[j] >= 1.0) ? 0.0 : gp[j] * (z[j] < 0.5 ? 2.0 : -2.0);
                break;
            case OutputKind::hat: {
                const HatGrad hg = hat_grad(ws.hats[j], z[j]);
                dz[j] = gp[j] * hg.dx;
                const double b0 = p[hat_ + m + j];
                double dbeta0;
                if (config_.beta_param == BetaParam::elu)
                    dbeta0 = b0 > 0.0 ? 1.0 : config_.upsilon * std::exp(b0);
                else
                    dbeta0 = sign_of(b0);
                const double g = ws.hats[j].gamma;
                grad[hat_ + j] += gp[j] * hg.dalpha;
                grad[hat_ + m + j] += gp[j] * hg.dbeta * dbeta0;
                grad[hat_ + 2 * m + j] += gp[j] * hg.dgamma * config_.tau * g * (1.0 - g);
                break;
            }
            }
        }
        for (std::size_t l = L; l-- > 0;) {
            const DenseSlot& sl = layers_[l];
            const auto& d = delta[l];
            const auto& a = ws.acts[l];
            for (std::size_t o = 0; o < sl.out; ++o) {
                if (d[o] == 0.0) continue;
                grad[sl.b + o] += d[o];
                double* gw = grad.data() + sl.w + o * sl.in;
                for (std::size_t i = 0; i < sl.in; ++i) gw[i] += d[o] * a[i];
            }
            if (l == 0) break;
            auto& dprev = delta[l - 1];
            std::fill(dprev.begin(), dprev.end(), 0.0);
            for (std::size_t o = 0; o < sl.out; ++o) {
                if (d[o] == 0.0) continue;
                const double* w = p + sl.w + o * sl.in;
                for (std::size_t i = 0; i < sl.in; ++i) dprev[i] += d[o] * w[i];
            }
            for (std::size_t i = 0; i < sl.in; ++i) dprev[i] *= relu_grad(ws.pre[l - 1][i]);
        }
    }
}

nlohmann::json MasNet::to_json() const
{
    nlohmann::json cfg{{"d", config_.d},
                       {"m", config_.m},
                       {"hidden", config_.hidden},
                       {"output", to_string(config_.output)},
                       {"beta_param", config_.beta_param == BetaParam::elu ? "elu" : "abs"},
                       {"upsilon", config_.upsilon},
                       {"tau", config_.tau},
                       {"monotone_outer", config_.monotone_outer},
                       {"outer_width", config_.outer_width},
                       {"out_dim", config_.out_dim}};
    auto shapes = nlohmann::json::array();
    for (const auto& s : layers_) shapes.push_back({s.out, s.in});
    auto outer_shapes = nlohmann::json::array();
    if (config_.monotone_outer) {
        outer_shapes.push_back({outer1_.out, outer1_.in});
        outer_shapes.push_back({outer2_.out, outer2_.in});
    }
    auto hats = nlohmann::json::array();
    if (config_.output == OutputKind::hat)
        for (std::size_t j = 0; j < config_.m; ++j) {
            const HatSpec h = hat(j);
            hats.push_back({{"alpha", h.alpha}, {"beta", h.beta}, {"gamma", h.gamma}});
        }
    return {{"format", "masnet-1"},
            {"variant", to_string(config_.variant)},
            {"config", cfg},
            {"shapes", {{"inner", shapes}, {"outer", outer_shapes}}},
            {"params", params_},
            {"hat_specs", hats}};
}

MasNet MasNet::from_json(const nlohmann::json& j)
{
    try {
        if (j.at("format").get<std::string>() != "masnet-1") throw Error("unsupported checkpoint format");
        const auto& c = j.at("config");
        MasNetConfig cfg;
        cfg.variant = variant_from_name(j.at("variant").get<std::string>());
        cfg.d = c.at("d").get<std::size_t>();
        cfg.m = c.at("m").get<std::size_t>();
        cfg.hidden = c.at("hidden").get<std::vector<std::size_t>>();
        cfg.output = output_kind_from_name(c.at("output").get<std::string>());
        const auto bp = c.at("beta_param").get<std::string>();
        if (bp != "elu" && bp != "abs") throw Error("unknown beta_param: " + bp);
        cfg.beta_param = bp == "elu" ? BetaParam::elu : BetaParam::abs;
        cfg.upsilon = c.at("upsilon").get<double>();
        cfg.tau = c.at("tau").get<double>();
        cfg.monotone_outer = c.at("monotone_outer").get<bool>();
        cfg.outer_width = c.at("outer_width").get<std::size_t>();
        cfg.out_dim = c.at("out_dim").get<std::size_t>();
        cfg.validate();
        MasNet net;
        net.config_ = cfg;
        net.layout();
        auto params = j.at("params").get<std::vector<double>>();
        if (params.size() != net.params_.size())
            throw Error("checkpoint has " + std::to_string(params.size()) + " parameters, shape needs " +
                        std::to_string(net.params_.size()));
        net.params_ = std::move(params);
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed checkpoint: ") + e.what());
    }
}

std::uint64_t fnv1a(std::string_view bytes) noexcept
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t MasNet::fingerprint() const { return fnv1a(to_json().dump()); }

// ---------------------------------------------------------------------------
// Loss

double hinge_loss(std::span<const double> fs, std::span<const double> ft, int y, double delta, HingeForm form,
                  std::vector<double>* gs, std::vector<double>* gt)
{
    if (fs.size() != ft.size() || fs.empty()) throw Error("embedding size mismatch");
    const std::size_t m = fs.size();
    if (gs) gs->assign(m, 0.0);
    if (gt) gt->assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        if (!std::isfinite(fs[i]) || !std::isfinite(ft[i])) return std::numeric_limits<double>::quiet_NaN();
    std::vector<double> v(m);
    const bool flip = y == 0 && form == HingeForm::separating;
    for (std::size_t i = 0; i < m; ++i) v[i] = flip ? ft[i] - fs[i] + delta : fs[i] - ft[i] + delta;
    const std::size_t i = y == 1 ? argmax_first(v) : argmin_first(v);
    if (!(v[i] > 0.0)) return 0.0;
    const double sign = flip ? -1.0 : 1.0;
    if (gs) (*gs)[i] = sign;
    if (gt) (*gt)[i] = -sign;
    return v[i];
}

double hinge_loss(const MasNet& model, const ContainmentPair& pair, double delta, HingeForm form)
{
    const auto fs = model.forward(pair.s);
    const auto ft = model.forward(pair.t);
    return hinge_loss(fs, ft, pair.y, delta, form);
}

namespace {

double pair_gradient(const MasNet& model, const ContainmentPair& pair, double delta, HingeForm form,
                     std::span<double> grad)
{
    const auto fs = model.forward(pair.s);
    const auto ft = model.forward(pair.t);
    std::vector<double> gs, gt;
    const double loss = hinge_loss(fs, ft, pair.y, delta, form, &gs, &gt);
    if (loss > 0.0) {
        model.backward_set(pair.s, gs, grad);
        model.backward_set(pair.t, gt, grad);
    }
    return loss;
}

double batch_gradient(const MasNet& model, std::span<const ContainmentPair> batch, double delta, HingeForm form,
                      std::vector<double>& grad, bool parallel)
{
    return reduce_examples(batch.size(), model.param_count(), parallel, grad,
                           [&](std::size_t i, std::span<double> g) {
                               return pair_gradient(model, batch[i], delta, form, g);
                           });
}

} // namespace

double backward(const MasNet& model, std::span<const ContainmentPair> batch, double delta, HingeForm form,
                std::vector<double>& grad)
{
    return batch_gradient(model, batch, delta, form, grad, true);
}

double backward_serial(const MasNet& model, std::span<const ContainmentPair> batch, double delta, HingeForm form,
                       std::vector<double>& grad)
{
    return batch_gradient(model, batch, delta, form, grad, false);
}

// ---------------------------------------------------------------------------
// Data

std::vector<ContainmentPair> generate_synthetic(const SyntheticSpec& spec)
{
    if (spec.s_size > spec.t_size) throw Error("|S| must not exceed |T|");
    if (!(spec.pos_ratio >= 0.0 && spec.pos_ratio <= 1.0)) throw Error("pos_ratio must lie in [0, 1]");
    if (spec.d == 0) throw Error("d must be positive");
    if (!(spec.noise_std >= 0.0)) throw Error("noise_std must be non-negative");
    std::vector<ContainmentPair> out(spec.num_pairs);
    for (std::size_t i = 0; i < spec.num_pairs; ++i) {
        Rng rng = Rng::stream(spec.seed, i);
        const int y = rng.uniform() < spec.pos_ratio ? 1 : 0;
        std::vector<double> t(spec.t_size * spec.d);
        for (double& v : t) v = rng.normal();
        std::vector<double> s(spec.s_size * spec.d);
        if (y == 1) {
            std::vector<std::size_t> idx(spec.t_size);
            std::iota(idx.begin(), idx.end(), 0);
            for (std::size_t k = 0; k < spec.s_size; ++k) {
                const std::size_t r = k + rng.below(spec.t_size - k);
                std::swap(idx[k], idx[r]);
                std::copy_n(t.begin() + idx[k] * spec.d, spec.d, s.begin() + k * spec.d);
            }
        } else {
            for (double& v : s) v = rng.normal();
        }
        if (spec.noise_std > 0.0)
            for (double& v : s) v += spec.noise_std * rng.normal();
        out[i] = ContainmentPair{RealMultiset(spec.d, std::move(s)), RealMultiset(spec.d, std::move(t)), y,
                                 spec.noise_std};
    }
    return out;
}

Split split_of(std::size_t index) noexcept
{
    const std::uint64_t r = mix64(static_cast<std::uint64_t>(index) ^ kSplitTag) % 9;
    if (r < 5) return Split::train;
    if (r < 7) return Split::dev;
    return Split::test;
}

DatasetSplits split_dataset(const std::vector<ContainmentPair>& pairs)
{
    DatasetSplits out;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        switch (split_of(i)) {
        case Split::train: out.train.push_back(pairs[i]); break;
        case Split::dev: out.dev.push_back(pairs[i]); break;
        case Split::test: out.test.push_back(pairs[i]); break;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation

double Confusion::accuracy() const noexcept
{
    const std::size_t n = total();
    return n == 0 ? 0.0 : static_cast<double>(tp + tn) / static_cast<double>(n);
}

Confusion evaluate_containment(const MasNet& model, std::span<const ContainmentPair> pairs, double delta_eval)
{
    if (pairs.empty()) throw Error("no data");
    std::vector<char> predicted(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t i) {
        const auto fs = model.forward(pairs[i].s);
        const auto ft = model.forward(pairs[i].t);
        bool dominated = true;
        for (std::size_t j = 0; j < fs.size(); ++j)
            if (!(fs[j] <= ft[j] + delta_eval)) {
                dominated = false;
                break;
            }
        predicted[i] = dominated ? 1 : 0;
    });
    Confusion c;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const bool pos = pairs[i].y == 1;
        if (pos && !predicted[i] && pairs[i].noise_std == 0.0 && delta_eval >= 0.0)
            throw Error("monotonicity violated: noise-free positive pair " + std::to_string(i) + " rejected");
        if (pos) (predicted[i] ? c.tp : c.fn)++;
        else (predicted[i] ? c.fp : c.tn)++;
    }
    return c;
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const
{
    if (!(delta > 0.0)) throw Error("margin delta must be positive");
    if (!(lr > 0.0)) throw Error("learning rate must be positive");
    if (!(lr_final > 0.0 && lr_final <= 1.0)) throw Error("lr_final must lie in (0, 1]");
    if (batch_size == 0) throw Error("batch size must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw Error("Adam betas must lie in [0, 1)");
    if (!(eps > 0.0)) throw Error("Adam eps must be positive");
}

OptimizerState::OptimizerState(const TrainConfig& cfg, std::size_t n) : cfg_(cfg)
{
    if (cfg_.optimizer == Optimizer::adam) {
        m_.assign(n, 0.0);
        v_.assign(n, 0.0);
    }
}

void OptimizerState::step(std::vector<double>& params, std::span<const double> grad)
{
    if (cfg_.optimizer == Optimizer::sgd) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= cfg_.lr * grad[i];
        return;
    }
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
        params[i] -= cfg_.lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.eps);
    }
}

namespace {

double epoch_lr(const TrainConfig& cfg, std::size_t epoch)
{
    if (cfg.epochs <= 1) return cfg.lr;
    const double f = static_cast<double>(epoch - 1) / static_cast<double>(cfg.epochs - 1);
    return cfg.lr * (1.0 - f * (1.0 - cfg.lr_final));
}

void shuffle(std::vector<std::size_t>& order, std::uint64_t seed, std::uint64_t epoch)
{
    Rng rng = Rng::stream(seed ^ 0x3c6ef372fe94f82bULL, epoch);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
}

void check_monotone_probe(const MasNet& model, const std::vector<ContainmentPair>& data, std::size_t epoch)
{
    const std::size_t probes = std::min<std::size_t>(4, data.size());
    for (std::size_t k = 0; k < probes; ++k) {
        const auto& t = data[(epoch * probes + k) % data.size()].t;
        std::vector<double> half(t.data().begin(), t.data().begin() + (t.size() + 1) / 2 * t.dim());
        const RealMultiset s(t.dim(), std::move(half));
        const auto fs = model.forward(s);
        const auto ft = model.forward(t);
        for (std::size_t j = 0; j < fs.size(); ++j)
            if (!(fs[j] <= ft[j] + 1e-9))
                throw Error("monotonicity probe failed at epoch " + std::to_string(epoch));
    }
}

} // namespace

TrainResult train(MasNet model, const std::vector<ContainmentPair>& train_set,
                  const std::vector<ContainmentPair>& dev_set, const TrainConfig& cfg)
{
    cfg.validate();
    TrainResult result;
    result.model = model;
    if (cfg.epochs == 0) return result;
    if (train_set.empty()) throw Error("no data");
    result.best_dev_accuracy = evaluate_containment(model, dev_set, cfg.delta_eval).accuracy();

    OptimizerState opt(cfg, model.param_count());
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<ContainmentPair> batch;
    std::vector<double> grad;
    std::size_t since_best = 0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle(order, cfg.seed, epoch);
        opt.set_lr(epoch_lr(cfg, epoch));
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, order.size() - start);
            batch.clear();
            for (std::size_t k = 0; k < len; ++k) batch.push_back(train_set[order[start + k]]);
            const double loss = batch_gradient(model, batch, cfg.delta, cfg.loss_form, grad, cfg.parallel);
            if (!std::isfinite(loss) || !all_finite(grad))
                throw Error("training diverged (non-finite loss) at epoch " + std::to_string(epoch));
            for (double& g : grad) g /= static_cast<double>(len);
            opt.step(model.params(), grad);
            total += loss;
        }
        if (!all_finite(model.params()))
            throw Error("training diverged (non-finite parameters) at epoch " + std::to_string(epoch));
        check_monotone_probe(model, train_set, epoch);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = total / static_cast<double>(train_set.size());
        double dev_loss = 0.0;
        for (const auto& p : dev_set) dev_loss += hinge_loss(model, p, cfg.delta, cfg.loss_form);
        rec.dev_loss = dev_loss / static_cast<double>(dev_set.size());
        rec.dev_accuracy = evaluate_containment(model, dev_set, cfg.delta_eval).accuracy();
        result.history.push_back(rec);

        if (rec.dev_accuracy > result.best_dev_accuracy) {
            result.best_dev_accuracy = rec.dev_accuracy;
            result.best_epoch = epoch;
            result.model = model;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Monotone regression

MonotoneTarget MonotoneTarget::make(TargetKind kind, std::size_t d, std::uint64_t seed, std::size_t terms)
{
    if (d == 0) throw Error("d must be positive");
    MonotoneTarget t;
    t.kind = kind;
    t.d = d;
    if (kind == TargetKind::coverage || kind == TargetKind::sum_of_max) {
        if (terms == 0) throw Error("target needs at least one term");
        t.terms = terms;
        Rng rng(mix64(seed ^ 0xa54ff53a5f1d36f1ULL));
        t.dirs.resize(terms * d);
        t.offsets.resize(terms);
        for (std::size_t j = 0; j < terms; ++j) {
            double norm = 0.0;
            do {
                norm = 0.0;
                for (std::size_t i = 0; i < d; ++i) {
                    t.dirs[j * d + i] = rng.normal();
                    norm += t.dirs[j * d + i] * t.dirs[j * d + i];
                }
            } while (norm == 0.0);
            norm = std::sqrt(norm);
            for (std::size_t i = 0; i < d; ++i) t.dirs[j * d + i] /= norm;
            t.offsets[j] = kind == TargetKind::coverage ? rng.uniform() : 0.0;
        }
    }
    return t;
}

double MonotoneTarget::operator()(const RealMultiset& s) const
{
    if (s.dim() != d) throw Error("dimension mismatch");
    switch (kind) {
    case TargetKind::cardinality: return static_cast<double>(s.size());
    case TargetKind::constant: return value;
    case TargetKind::coverage:
    case TargetKind::sum_of_max: {
        double total = 0.0;
        for (std::size_t j = 0; j < terms; ++j) {
            double best = 0.0;
            for (std::size_t n = 0; n < s.size(); ++n) {
                const auto x = s.point(n);
                double z = offsets[j];
                for (std::size_t i = 0; i < d; ++i) z += dirs[j * d + i] * x[i];
                best = std::max(best, kind == TargetKind::coverage ? tri_eval(z) : relu(z));
            }
            total += best;
        }
        return total;
    }
    }
    return 0.0;
}

std::vector<RegressionSample> generate_regression(const MonotoneTarget& target, std::size_t count,
                                                  std::size_t max_size, std::uint64_t seed)
{
    if (max_size == 0) throw Error("max_size must be positive");
    std::vector<RegressionSample> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        Rng rng = Rng::stream(seed, i);
        const std::size_t size = 1 + rng.below(max_size);
        std::vector<double> flat(size * target.d);
        for (double& v : flat) v = rng.normal();
        RealMultiset s(target.d, std::move(flat));
        const double y = target(s);
        out[i] = RegressionSample{std::move(s), y};
    }
    return out;
}

double mean_absolute_error(const MasNet& model, std::span<const RegressionSample> samples)
{
    if (samples.empty()) throw Error("no data");
    if (model.output_dim() != 1) throw Error("regression needs a scalar-output model");
    std::vector<double> err(samples.size());
    parallel_for(samples.size(),
                 [&](std::size_t i) { err[i] = std::abs(model.forward(samples[i].s)[0] - samples[i].y); });
    double total = 0.0;
    for (double e : err) total += e;
    return total / static_cast<double>(samples.size());
}

FitResult fit_monotone_function(MasNet model, const std::vector<RegressionSample>& train_set,
                                const std::vector<RegressionSample>& test_set, const TrainConfig& cfg)
{
    cfg.validate();
    if (model.output_dim() != 1) throw Error("regression needs a scalar-output model");
    if (train_set.empty()) throw Error("no data");
    FitResult result;
    OptimizerState opt(cfg, model.param_count());
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> grad;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        shuffle(order, cfg.seed, epoch);
        opt.set_lr(epoch_lr(cfg, epoch));
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, order.size() - start);
            const double loss = reduce_examples(
                len, model.param_count(), cfg.parallel, grad, [&](std::size_t k, std::span<double> g) {
                    const auto& sample = train_set[order[start + k]];
                    const double r = model.forward(sample.s)[0] - sample.y;
                    const double g_out = 2.0 * r;
                    model.backward_set(sample.s, std::span<const double>(&g_out, 1), g);
                    return r * r;
                });
            if (!std::isfinite(loss) || !all_finite(grad))
                throw Error("training diverged (non-finite loss) at epoch " + std::to_string(epoch));
            for (double& g : grad) g /= static_cast<double>(len);
            opt.step(model.params(), grad);
            total += loss;
        }
        result.loss_history.push_back(total / static_cast<double>(train_set.size()));
    }
    result.train_mae = mean_absolute_error(model, train_set);
    result.test_mae = test_set.empty() ? 0.0 : mean_absolute_error(model, test_set);
    result.model = std::move(model);
    return result;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json to_json(const ContainmentPair& p)
{
    return {{"S", to_json(p.s)}, {"T", to_json(p.t)}, {"y", p.y}, {"noise_std", p.noise_std}, {"d", p.t.dim()}};
}

ContainmentPair containment_pair_from_json(const nlohmann::json& j)
{
    try {
        const std::size_t d = j.contains("d") ? j.at("d").get<std::size_t>() : 0;
        ContainmentPair p;
        p.t = real_multiset_from_json(j.at("T"), d);
        p.s = real_multiset_from_json(j.at("S"), p.t.dim());
        p.y = j.at("y").get<int>();
        if (p.y != 0 && p.y != 1) throw Error("label y must be 0 or 1");
        p.noise_std = j.value("noise_std", 0.0);
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed pair: ") + e.what());
    }
}

std::string to_jsonl(std::span<const ContainmentPair> pairs)
{
    std::string out;
    for (const auto& p : pairs) {
        out += to_json(p).dump();
        out += '\n';
    }
    return out;
}

std::vector<ContainmentPair> pairs_from_jsonl(const std::string& text)
{
    std::vector<ContainmentPair> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(containment_pair_from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw Error("line " + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            throw Error("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

nlohmann::json to_json(const TrainConfig& c)
{
    return {{"delta", c.delta},
            {"delta_eval", c.delta_eval},
            {"lr", c.lr},
            {"lr_final", c.lr_final},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"optimizer", c.optimizer == Optimizer::adam ? "adam" : "sgd"},
            {"beta1", c.beta1},
            {"beta2", c.beta2},
            {"eps", c.eps},
            {"seed", c.seed},
            {"patience", c.patience},
            {"loss_form", to_string(c.loss_form)}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c)
{
    if (!j.is_object()) throw Error("train config must be an object");
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "delta") c.delta = v.get<double>();
            else if (key == "delta_eval") c.delta_eval = v.get<double>();
            else if (key == "lr") c.lr = v.get<double>();
            else if (key == "lr_final") c.lr_final = v.get<double>();
            else if (key == "epochs") c.epochs = v.get<std::size_t>();
            else if (key == "batch_size") c.batch_size = v.get<std::size_t>();
            else if (key == "optimizer") {
                const auto name = v.get<std::string>();
                if (name == "adam") c.optimizer = Optimizer::adam;
                else if (name == "sgd") c.optimizer = Optimizer::sgd;
                else throw Error("unknown optimizer: " + name);
            }
            else if (key == "beta1") c.beta1 = v.get<double>();
            else if (key == "beta2") c.beta2 = v.get<double>();
            else if (key == "eps") c.eps = v.get<double>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "patience") c.patience = v.get<std::size_t>();
            else if (key == "loss_form") c.loss_form = hinge_form_from_name(v.get<std::string>());
            else throw Error("unknown train config key: " + key);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed train config: ") + e.what());
    }
    c.validate();
    return c;
}

nlohmann::json to_json(const EpochRecord& r)
{
    return {{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"dev_loss", r.dev_loss}, {"dev_accuracy", r.dev_accuracy}};
}

nlohmann::json to_json(const Confusion& c)
{
    return {{"accuracy", c.accuracy()}, {"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

} // namespace mas
