#include "mas/weak_mas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mas/error.hpp"
#include "mas/parallel.hpp"

namespace mas {

WeakMasParams WeakMasParams::make(std::size_t m, std::size_t d, std::vector<double> A, std::vector<double> b,
                                  std::vector<double> c, Activation activation, double scale)
{
    if (m < 1 || d < 1) throw Error("weak MAS parameters need m >= 1 and d >= 1");
    if (A.size() != m * d || b.size() != m || c.size() != m) throw Error("weak MAS parameter shapes do not match");
    if (!(scale > 0.0)) throw Error("scale must be positive");
    for (std::size_t j = 0; j < m; ++j) {
        double norm = 0.0;
        for (std::size_t i = 0; i < d; ++i) norm += A[j * d + i] * A[j * d + i];
        if (std::abs(std::sqrt(norm) - 1.0) > 1e-9) throw Error("rows of A must have unit norm");
        if (!(std::abs(b[j]) <= scale)) throw Error("b entries must lie in [-scale, scale]");
        if (!(c[j] > 0.0 && c[j] <= 2.0 * scale)) throw Error("c entries must lie in (0, 2 * scale]");
    }
    return {m, d, std::move(A), std::move(b), std::move(c), activation, scale};
}

void sample_coordinate(Rng& rng, std::size_t d, const SampleOptions& options, double* a, double& b, double& c)
{
    double norm = 0.0;
    do {
        norm = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            a[i] = rng.normal();
            norm += a[i] * a[i];
        }
    } while (!(norm > 0.0));
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < d; ++i) a[i] /= norm;
    b = rng.uniform(-options.scale, options.scale);
    c = options.unit_c ? 1.0 : 2.0 * options.scale * rng.uniform_open();
}

WeakMasParams sample_params(std::size_t d, std::size_t m, std::uint64_t seed, const SampleOptions& options)
{
    if (d < 1 || m < 1) throw Error("sample_params needs d >= 1 and m >= 1");
    if (!(options.scale > 0.0)) throw Error("scale must be positive");
    Rng rng(seed);
    WeakMasParams p{m, d, std::vector<double>(m * d), std::vector<double>(m), std::vector<double>(m),
                    options.activation, options.scale};
    for (std::size_t j = 0; j < m; ++j) sample_coordinate(rng, d, options, &p.A[j * d], p.b[j], p.c[j]);
    return p;
}

double eval_coordinate(std::span<const double> a, double b, double c, const Activation& sigma,
                       const RealMultiset& s) noexcept
{
    double acc = 0.0;
    for (std::size_t p = 0; p < s.size(); ++p) {
        const auto x = s.point(p);
        double dot = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * x[i];
        acc += sigma((dot + b) / c);
    }
    return acc;
}

std::vector<double> eval_weak_mas(const WeakMasParams& p, const RealMultiset& s)
{
    if (s.dim() != p.d) throw Error("dimension mismatch");
    std::vector<double> out(p.m);
    for (std::size_t j = 0; j < p.m; ++j) out[j] = eval_coordinate(p.row(j), p.b[j], p.c[j], p.activation, s);
    return out;
}

ReluMasParams ReluMasParams::tri(std::span<const double> a, double b)
{
    ReluMasParams p{a.size(), {}, {2.0 * b, 2.0 * b - 2.0, 2.0 * b - 1.0}, {1.0, 1.0, -2.0}, 0.0};
    for (int r = 0; r < 3; ++r)
        for (double v : a) p.A2.push_back(2.0 * v);
    return p;
}

ReluMasParams ReluMasParams::unit_hat(std::span<const double> a, double b)
{
    ReluMasParams p{a.size(), {}, {b + 1.0, b - 1.0, b}, {1.0, 1.0, -2.0}, 0.0};
    for (int r = 0; r < 3; ++r) p.A2.insert(p.A2.end(), a.begin(), a.end());
    return p;
}

double eval_relu_mas(const ReluMasParams& p, const RealMultiset& s, const ScalarMap& m2)
{
    if (p.A2.size() != 3 * p.d || p.b2.size() != 3 || p.a1.size() != 3) throw Error("ReLU MAS parameter shapes");
    if (s.dim() != p.d) throw Error("dimension mismatch");
    double acc = 0.0;
    for (std::size_t q = 0; q < s.size(); ++q) {
        const auto x = s.point(q);
        double inner = p.b1;
        for (std::size_t r = 0; r < 3; ++r) {
            double h = p.b2[r];
            for (std::size_t i = 0; i < p.d; ++i) h += p.A2[r * p.d + i] * x[i];
            inner += p.a1[r] * relu(h);
        }
        acc += relu(inner);
    }
    return m2 ? m2(acc) : acc;
}

SeparatorSearch find_separator(const RealMultiset& s, const RealMultiset& t, std::uint64_t budget,
                               std::uint64_t seed, const SampleOptions& options)
{
    if (s.dim() != t.dim()) throw Error("dimension mismatch");
    if (is_subset_real(s, t, 0.0)) throw Error("find_separator needs S not a subset of T");
    const std::size_t d = s.dim();
    std::vector<double> margins(budget);
    std::vector<double> as(budget * d), bs(budget), cs(budget);
    parallel_for(budget, [&](std::size_t i) {
        Rng rng = Rng::stream(seed, i);
        sample_coordinate(rng, d, options, &as[i * d], bs[i], cs[i]);
        const std::span<const double> a(&as[i * d], d);
        margins[i] = eval_coordinate(a, bs[i], cs[i], options.activation, s) -
                     eval_coordinate(a, bs[i], cs[i], options.activation, t);
    });
    SeparatorSearch out;
    out.budget = budget;
    for (std::size_t i = 0; i < budget; ++i) {
        if (!(margins[i] > 0.0)) continue;
        ++out.hits;
        if (!out.first) {
            out.first = Separator{std::vector<double>(as.begin() + i * d, as.begin() + (i + 1) * d), bs[i], cs[i],
                                  margins[i]};
            out.first_draw = i;
        }
    }
    return out;
}

std::pair<RealMultiset, RealMultiset> midpoint_witness(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size() || x.empty()) throw Error("x and y must be non-empty and of equal dimension");
    if (std::equal(x.begin(), x.end(), y.begin())) throw Error("midpoint witness needs x != y");
    const std::size_t d = x.size();
    std::vector<double> z(d), both(x.begin(), x.end());
    for (std::size_t i = 0; i < d; ++i) z[i] = 0.5 * (x[i] + y[i]);
    both.insert(both.end(), y.begin(), y.end());
    return {RealMultiset(d, std::move(z)), RealMultiset(d, std::move(both))};
}

std::uint64_t count_separations(const RealMultiset& s, const RealMultiset& t, std::uint64_t draws,
                                std::uint64_t seed, const SampleOptions& options)
{
    if (s.dim() != t.dim()) throw Error("dimension mismatch");
    const std::size_t d = s.dim();
    std::vector<char> hit(draws, 0);
    parallel_for(draws, [&](std::size_t i) {
        Rng rng = Rng::stream(seed, i);
        std::vector<double> a(d);
        double b = 0.0, c = 1.0;
        sample_coordinate(rng, d, options, a.data(), b, c);
        hit[i] = eval_coordinate(a, b, c, options.activation, s) > eval_coordinate(a, b, c, options.activation, t);
    });
    return static_cast<std::uint64_t>(std::count(hit.begin(), hit.end(), 1));
}

namespace {

std::vector<double> matvec(std::span<const double> w, std::span<const double> x)
{
    const std::size_t d = x.size();
    std::vector<double> out(d, 0.0);
    for (std::size_t r = 0; r < d; ++r)
        for (std::size_t i = 0; i < d; ++i) out[r] += w[r * d + i] * x[i];
    return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

bool full_rank(std::vector<double> w, std::size_t d)
{
    for (std::size_t col = 0; col < d; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < d; ++r)
            if (std::abs(w[r * d + col]) > std::abs(w[pivot * d + col])) pivot = r;
        if (std::abs(w[pivot * d + col]) < 1e-9) return false;
        for (std::size_t i = 0; i < d; ++i) std::swap(w[col * d + i], w[pivot * d + i]);
        for (std::size_t r = col + 1; r < d; ++r) {
            const double f = w[r * d + col] / w[col * d + col];
            for (std::size_t i = col; i < d; ++i) w[r * d + i] -= f * w[col * d + i];
        }
    }
    return true;
}

} // namespace

std::vector<double> sum_pooled_attention(std::span<const double> wq, std::span<const double> wk,
                                         std::span<const double> wv, const RealMultiset& x)
{
    const std::size_t d = x.dim();
    if (wq.size() != d * d || wk.size() != d * d || wv.size() != d * d) throw Error("attention matrices must be d x d");
    const std::size_t n = x.size();
    std::vector<std::vector<double>> q(n), k(n), v(n);
    for (std::size_t i = 0; i < n; ++i) {
        q[i] = matvec(wq, x.point(i));
        k[i] = matvec(wk, x.point(i));
        v[i] = matvec(wv, x.point(i));
    }
    std::vector<double> out(d, 0.0), logits(n);
    for (std::size_t i = 0; i < n; ++i) {
        double top = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) top = std::max(top, logits[j] = dot(q[i], k[j]));
        double total = 0.0;
        for (std::size_t j = 0; j < n; ++j) total += logits[j] = std::exp(logits[j] - top);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t r = 0; r < d; ++r) out[r] += logits[j] / total * v[j][r];
    }
    return out;
}

AttentionDemo set_transformer_nonmonotone_demo(std::size_t d, std::span<const double> w, std::span<const double> wv,
                                               std::span<const double> x1)
{
    if (d < 1) throw Error("d must be >= 1");
    if (w.size() != d * d || wv.size() != d * d || x1.size() != d) throw Error("shape mismatch");
    if (!full_rank({w.begin(), w.end()}, d)) throw Error("W_Q = W_K must be full rank");
    const auto v1 = matvec(wv, x1);
    AttentionDemo demo;
    demo.coordinate = d;
    for (std::size_t j = 0; j < d; ++j)
        if (v1[j] < 0.0) {
            demo.coordinate = j;
            break;
        }
    if (demo.coordinate == d) throw Error("W_V x1 has no negative coordinate");
    demo.s = RealMultiset(d, {x1.begin(), x1.end()});
    std::vector<double> both(x1.begin(), x1.end());
    both.resize(2 * d, 0.0);
    demo.t = RealMultiset(d, std::move(both));
    const auto fs = sum_pooled_attention(w, w, wv, demo.s);
    const auto ft = sum_pooled_attention(w, w, wv, demo.t);
    demo.fs = fs[demo.coordinate];
    demo.ft = ft[demo.coordinate];
    demo.inflation = demo.ft / demo.fs;
    const auto q1 = matvec(w, x1);
    demo.closed_form = 1.0 / (1.0 + std::exp(-dot(q1, q1))) + 0.5;
    return demo;
}

AttentionDemo set_transformer_nonmonotone_demo(std::size_t d, std::uint64_t seed)
{
    if (d < 1) throw Error("d must be >= 1");
    Rng rng(seed);
    std::vector<double> w(d * d), wv(d * d), x1(d);
    do {
        for (double& e : w) e = rng.normal();
    } while (!full_rank(w, d));
    std::vector<double> v1;
    do {
        for (double& e : wv) e = rng.normal();
        for (double& e : x1) e = rng.normal();
        v1 = matvec(wv, x1);
    } while (std::all_of(v1.begin(), v1.end(), [](double e) { return e == 0.0; }));
    if (std::none_of(v1.begin(), v1.end(), [](double e) { return e < 0.0; }))
        for (double& e : x1) e = -e;
    return set_transformer_nonmonotone_demo(d, w, wv, x1);
}

nlohmann::json to_json(const WeakMasParams& p)
{
    std::vector<std::vector<double>> rows;
    for (std::size_t j = 0; j < p.m; ++j) rows.emplace_back(p.row(j).begin(), p.row(j).end());
    return {{"A", rows}, {"b", p.b}, {"c", p.c}, {"activation", to_json(p.activation)}, {"scale", p.scale}};
}

WeakMasParams weak_mas_from_json(const nlohmann::json& j)
{
    const auto rows = j.at("A").get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw Error("A must have at least one row");
    std::vector<double> flat;
    for (const auto& r : rows) {
        if (r.size() != rows.front().size()) throw Error("rows of A must have equal length");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return WeakMasParams::make(rows.size(), rows.front().size(), std::move(flat), j.at("b").get<std::vector<double>>(),
                               j.at("c").get<std::vector<double>>(), activation_from_json(j.at("activation")),
                               j.value("scale", 1.0));
}

nlohmann::json to_json(const AttentionDemo& demo)
{
    return {{"S", to_json(demo.s)},         {"T", to_json(demo.t)},         {"coordinate", demo.coordinate},
            {"F_S", demo.fs},                {"F_T", demo.ft},               {"inflation", demo.inflation},
            {"closed_form", demo.closed_form}, {"S_subset_T", is_subset_real(demo.s, demo.t)}};
}

} // namespace mas
