#include "mas/separation_lab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "mas/error.hpp"
#include "mas/format.hpp"
#include "mas/parallel.hpp"
#include "mas/rng.hpp"
#include "mas/set_distance.hpp"
#include "mas/weak_mas.hpp"

namespace mas {

namespace {

constexpr std::uint64_t kPairTag = 0x7061697273ULL;
constexpr std::uint64_t kDrawTag = 0x6472617773ULL;
constexpr std::size_t kBlock = 2048;

} // namespace

std::string to_string(Scenario s)
{
    return s == Scenario::hat_cube ? "hat_cube" : "relu_sphere";
}

Scenario scenario_from_string(const std::string& name)
{
    if (name == "hat_cube") return Scenario::hat_cube;
    if (name == "relu_sphere") return Scenario::relu_sphere;
    throw Error("unknown scenario: " + name);
}

void ExperimentConfig::validate() const
{
    ground.validate();
    if (ground.kind == GroundSpec::Kind::finite) throw Error("experiments need a cube or sphere ground set");
    if (k < 1) throw Error("k must be >= 1");
    if (num_pairs < 1 || num_param_draws < 1) throw Error("pair and draw counts must be >= 1");
    if (m_list.empty()) throw Error("m_list must not be empty");
    for (auto m : m_list)
        if (m < 1) throw Error("every m must be >= 1");
    if (s_size > k) throw Error("s_size must not exceed k");
    if (!(eps_min > 0.0) || !(eps_max >= eps_min)) throw Error("need 0 < eps_min <= eps_max");
    if (scenario == Scenario::hat_cube && ground.kind != GroundSpec::Kind::cube)
        throw Error("hat_cube needs a cube ground set");
    if (scenario == Scenario::relu_sphere && ground.kind != GroundSpec::Kind::sphere)
        throw Error("relu_sphere needs a sphere ground set");
    if (scenario == Scenario::relu_sphere && ground.dim < 2) throw Error("relu_sphere needs dim >= 2");
}

std::size_t ExperimentConfig::max_m() const
{
    return *std::max_element(m_list.begin(), m_list.end());
}

nlohmann::json to_json(const ExperimentConfig& c)
{
    const char* kind = c.ground.kind == GroundSpec::Kind::cube ? "cube" : "sphere";
    return {{"ground", {{"kind", kind}, {"dim", c.ground.dim}, {"bound", c.ground.bound}}},
            {"k", c.k},
            {"m_list", c.m_list},
            {"num_pairs", c.num_pairs},
            {"num_param_draws", c.num_param_draws},
            {"seed", c.seed},
            {"activation", to_json(c.activation)},
            {"scenario", to_string(c.scenario)},
            {"eps_min", c.eps_min},
            {"eps_max", c.eps_max},
            {"s_size", c.s_size},
            {"sweep", c.sweep},
            {"num_controls", c.num_controls}};
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j, ExperimentConfig c)
{
    if (!j.is_object()) throw Error("experiment config must be an object");
    if (j.contains("scenario")) c.scenario = scenario_from_string(j.at("scenario").get<std::string>());
    if (c.scenario == Scenario::relu_sphere && c.ground.kind == GroundSpec::Kind::cube) {
        c.ground = GroundSpec::sphere(c.ground.dim);
        c.activation = Activation::relu();
    }
    if (j.contains("ground")) {
        const auto& g = j.at("ground");
        const auto kind = g.value("kind", std::string(c.ground.kind == GroundSpec::Kind::sphere ? "sphere" : "cube"));
        const std::size_t dim = g.value("dim", c.ground.dim);
        if (kind == "cube")
            c.ground = GroundSpec::cube(dim, g.value("bound", 1.0));
        else if (kind == "sphere")
            c.ground = GroundSpec::sphere(dim);
        else
            throw Error("unknown ground kind: " + kind);
    }
    if (j.contains("d")) c.ground.dim = j.at("d").get<std::size_t>();
    c.k = j.value("k", c.k);
    c.m_list = j.value("m_list", c.m_list);
    c.num_pairs = j.value("num_pairs", c.num_pairs);
    c.num_param_draws = j.value("num_param_draws", c.num_param_draws);
    c.seed = j.value("seed", c.seed);
    if (j.contains("activation")) c.activation = activation_from_json(j.at("activation"));
    c.eps_min = j.value("eps_min", c.eps_min);
    c.eps_max = j.value("eps_max", c.eps_max);
    c.s_size = j.value("s_size", c.s_size);
    c.sweep = j.value("sweep", c.sweep);
    c.num_controls = j.value("num_controls", c.num_controls);
    return c;
}

namespace {

std::vector<double> ground_point(Rng& rng, const GroundSpec& g)
{
    std::vector<double> p(g.dim);
    if (g.kind == GroundSpec::Kind::cube) {
        for (double& x : p) x = rng.uniform(-g.bound, g.bound);
        return p;
    }
    double norm = 0.0;
    do {
        norm = 0.0;
        for (double& x : p) {
            x = rng.normal();
            norm += x * x;
        }
    } while (!(norm > 0.0));
    norm = std::sqrt(norm);
    for (double& x : p) x /= norm;
    return p;
}

std::vector<double> unit_direction(Rng& rng, std::size_t dim)
{
    return ground_point(rng, GroundSpec::sphere(std::max<std::size_t>(dim, 1)));
}

void move_point(std::vector<double>& p, const std::vector<double>& u, double eps, const GroundSpec& g)
{
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += eps * u[i];
    if (g.kind == GroundSpec::Kind::cube) {
        // Reflect back into the cube.
        for (double& x : p) {
            while (x > g.bound || x < -g.bound) x = x > g.bound ? 2.0 * g.bound - x : -2.0 * g.bound - x;
        }
        return;
    }
    double norm = 0.0;
    for (double x : p) norm += x * x;
    norm = std::sqrt(norm);
    for (double& x : p) x /= norm;
}

ExperimentPair finish(const ExperimentConfig& cfg, std::vector<std::vector<double>> s,
                      std::vector<std::vector<double>> t, bool control, double eps)
{
    ExperimentPair pair;
    pair.s = RealMultiset::from_points(cfg.dim(), s);
    pair.t = RealMultiset::from_points(cfg.dim(), t);
    pair.control = control;
    pair.eps = eps;
    pair.d_as = d_as(pair.s, pair.t);
    pair.w_k = padded_wasserstein_k(pair.s, pair.t, cfg.k, default_padding(cfg.dim(), cfg.ground.norm_bound()));
    return pair;
}

// Picks `count` distinct indices of [0, n) by a partial Fisher-Yates shuffle.
std::vector<std::size_t> pick(Rng& rng, std::size_t n, std::size_t count)
{
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < count; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
    idx.resize(count);
    return idx;
}

ExperimentPair control_pair(const ExperimentConfig& cfg, std::uint64_t stream)
{
    Rng rng = Rng::stream(cfg.seed ^ kPairTag, stream);
    std::vector<std::vector<double>> t;
    for (std::size_t i = 0; i < cfg.k; ++i) t.push_back(ground_point(rng, cfg.ground));
    std::vector<std::vector<double>> s;
    for (auto i : pick(rng, cfg.k, 1 + rng.below(cfg.k))) s.push_back(t[i]);
    return finish(cfg, std::move(s), std::move(t), true, 0.0);
}

} // namespace

ExperimentPair displaced_pair(const ExperimentConfig& cfg, std::uint64_t stream, double eps,
                              std::optional<std::uint64_t> base)
{
    if (!(eps > 0.0)) throw Error("displacement must be positive");
    Rng rng = Rng::stream(cfg.seed ^ kPairTag, base.value_or(stream));
    std::vector<std::vector<double>> t;
    for (std::size_t i = 0; i < cfg.k; ++i) t.push_back(ground_point(rng, cfg.ground));
    const std::size_t s_size = cfg.s_size == 0 ? 1 + rng.below(cfg.k) : cfg.s_size;
    const auto chosen = pick(rng, cfg.k, s_size);
    const std::size_t moved = 1 + rng.below(s_size);
    for (;;) {
        std::vector<std::vector<double>> s;
        for (auto i : chosen) s.push_back(t[i]);
        for (std::size_t q = 0; q < moved; ++q) move_point(s[q], unit_direction(rng, cfg.dim()), eps, cfg.ground);
        auto pair = finish(cfg, std::move(s), t, false, eps);
        if (pair.d_as > 0.0) return pair;
    }
}

std::vector<ExperimentPair> generate_pairs(const ExperimentConfig& cfg)
{
    cfg.validate();
    std::vector<ExperimentPair> pairs;
    for (std::size_t i = 0; i < cfg.num_pairs; ++i) {
        const double frac = cfg.num_pairs == 1 ? 0.0 : static_cast<double>(i) / (cfg.num_pairs - 1);
        const double eps = cfg.eps_min * std::pow(cfg.eps_max / cfg.eps_min, frac);
        pairs.push_back(cfg.sweep ? displaced_pair(cfg, i, eps, 0) : displaced_pair(cfg, i, eps));
    }
    for (std::size_t i = 0; i < cfg.num_controls; ++i) pairs.push_back(control_pair(cfg, cfg.num_pairs + i));
    return pairs;
}

namespace {

struct Partial {
    std::vector<std::uint64_t> failures; // per prefix length 1..max_m
    std::vector<double> e_plus;
    std::vector<double> e_abs;
};

SampleOptions sample_options(const ExperimentConfig& cfg)
{
    if (cfg.scenario == Scenario::relu_sphere) return {Activation::relu(), 1.0, true};
    return {cfg.activation, cfg.ground.norm_bound(), false};
}

Partial run_block(const ExperimentConfig& cfg, const ExperimentPair& pair, std::size_t index, std::size_t begin,
                  std::size_t end)
{
    const std::size_t mm = cfg.max_m(), d = cfg.dim();
    const auto opts = sample_options(cfg);
    Partial out{std::vector<std::uint64_t>(mm, 0), std::vector<double>(mm, 0.0), std::vector<double>(mm, 0.0)};
    std::vector<double> a(d);
    for (std::size_t r = begin; r < end; ++r) {
        Rng rng = Rng::stream(cfg.seed ^ kDrawTag, index, r);
        bool dominated = true;
        double plus = 0.0, abs = 0.0;
        for (std::size_t j = 0; j < mm; ++j) {
            double b = 0.0, c = 1.0;
            sample_coordinate(rng, d, opts, a.data(), b, c);
            const double diff = eval_coordinate(a, b, c, opts.activation, pair.s) -
                                eval_coordinate(a, b, c, opts.activation, pair.t);
            dominated = dominated && diff <= 0.0;
            plus += diff > 0.0 ? diff : 0.0;
            abs += std::abs(diff);
            out.failures[j] += dominated ? 1 : 0;
            out.e_plus[j] += plus;
            out.e_abs[j] += abs;
        }
    }
    return out;
}

SeparationReport assemble(const ExperimentConfig& cfg, std::vector<ExperimentPair> pairs,
                          const std::vector<Partial>& partials, std::size_t blocks)
{
    SeparationReport report{cfg, std::move(pairs), {}};
    const std::size_t mm = cfg.max_m();
    const auto n = static_cast<std::uint64_t>(cfg.num_param_draws);
    for (std::size_t i = 0; i < report.pairs.size(); ++i) {
        std::vector<std::uint64_t> failures(mm, 0);
        std::vector<double> plus(mm, 0.0), abs(mm, 0.0);
        for (std::size_t b = 0; b < blocks; ++b) {
            const auto& p = partials[i * blocks + b];
            for (std::size_t j = 0; j < mm; ++j) {
                failures[j] += p.failures[j];
                plus[j] += p.e_plus[j];
                abs[j] += p.e_abs[j];
            }
        }
        for (auto m : cfg.m_list) {
            CellStats c;
            c.pair = i;
            c.m = m;
            c.failures = failures[m - 1];
            c.draws = n;
            c.p_hat = static_cast<double>(c.failures) / static_cast<double>(n);
            const auto ci = wilson_interval(c.failures, n);
            c.ci_lo = ci.lo;
            c.ci_hi = ci.hi;
            c.e_plus = plus[m - 1] / static_cast<double>(n);
            c.e_abs = abs[m - 1] / static_cast<double>(n);
            report.cells.push_back(c);
        }
    }
    return report;
}

} // namespace

SeparationReport run_separation_experiment(const ExperimentConfig& cfg, std::vector<ExperimentPair> pairs)
{
    cfg.validate();
    const std::size_t blocks = (cfg.num_param_draws + kBlock - 1) / kBlock;
    std::vector<Partial> partials(pairs.size() * blocks);
    parallel_for(partials.size(), [&](std::size_t task) {
        const std::size_t i = task / blocks, b = task % blocks;
        partials[task] = run_block(cfg, pairs[i], i, b * kBlock, std::min(cfg.num_param_draws, (b + 1) * kBlock));
    });
    return assemble(cfg, std::move(pairs), partials, blocks);
}

SeparationReport run_separation_experiment_serial(const ExperimentConfig& cfg, std::vector<ExperimentPair> pairs)
{
    cfg.validate();
    const std::size_t blocks = (cfg.num_param_draws + kBlock - 1) / kBlock;
    std::vector<Partial> partials;
    for (std::size_t i = 0; i < pairs.size(); ++i)
        for (std::size_t b = 0; b < blocks; ++b)
            partials.push_back(run_block(cfg, pairs[i], i, b * kBlock, std::min(cfg.num_param_draws, (b + 1) * kBlock)));
    return assemble(cfg, std::move(pairs), partials, blocks);
}

SeparationReport run_separation_experiment(const ExperimentConfig& cfg)
{
    return run_separation_experiment(cfg, generate_pairs(cfg));
}

const CellStats& SeparationReport::cell(std::size_t pair, std::size_t m) const
{
    for (const auto& c : cells)
        if (c.pair == pair && c.m == m) return c;
    throw Error("no cell for pair " + std::to_string(pair) + ", m " + std::to_string(m));
}

std::string SeparationReport::to_csv() const
{
    std::ostringstream out;
    out << "pair,m,d_as,W_k,p_hat,ci_lo,ci_hi,e_plus,e_abs\n";
    for (const auto& c : cells) {
        const auto& p = pairs[c.pair];
        out << c.pair << ',' << c.m << ',' << format_double(p.d_as) << ',' << format_double(p.w_k) << ','
            << format_double(c.p_hat) << ',' << format_double(c.ci_lo) << ',' << format_double(c.ci_hi) << ','
            << format_double(c.e_plus) << ',' << format_double(c.e_abs) << '\n';
    }
    return out.str();
}

nlohmann::json SeparationReport::to_json() const
{
    nlohmann::json pj = nlohmann::json::array(), cj = nlohmann::json::array();
    for (const auto& p : pairs)
        pj.push_back({{"S", mas::to_json(p.s)},
                      {"T", mas::to_json(p.t)},
                      {"control", p.control},
                      {"eps", p.eps},
                      {"d_as", p.d_as},
                      {"W_k", p.w_k}});
    for (const auto& c : cells)
        cj.push_back({{"pair", c.pair},
                      {"m", c.m},
                      {"failures", c.failures},
                      {"draws", c.draws},
                      {"p_hat", c.p_hat},
                      {"ci_lo", c.ci_lo},
                      {"ci_hi", c.ci_hi},
                      {"e_plus", c.e_plus},
                      {"e_abs", c.e_abs}});
    return {{"config", mas::to_json(config)}, {"pairs", pj}, {"cells", cj}};
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials)
{
    if (trials == 0) throw Error("Wilson interval needs at least one trial");
    if (successes > trials) throw Error("successes exceed trials");
    constexpr double z = 1.959963984540054;
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(successes) / n;
    const double denom = 1.0 + z * z / n;
    const double center = (p + z * z / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n));
    Interval ci{std::max(0.0, center - half), std::min(1.0, center + half)};
    if (successes == 0) ci.lo = 0.0;
    if (successes == trials) ci.hi = 1.0;
    return ci;
}

namespace {

std::vector<double> ranks(const std::vector<double>& x)
{
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t q = i; q <= j; ++q) r[order[q]] = avg;
        i = j + 1;
    }
    return r;
}

} // namespace

Correlation spearman(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size()) throw Error("spearman needs equal-length samples");
    const std::size_t n = x.size();
    if (n < 3) return {};
    const auto rx = ranks(x), ry = ranks(y);
    const double mean = (static_cast<double>(n) + 1.0) / 2.0;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (rx[i] - mean) * (ry[i] - mean);
        sxx += (rx[i] - mean) * (rx[i] - mean);
        syy += (ry[i] - mean) * (ry[i] - mean);
    }
    if (sxx == 0.0 || syy == 0.0) return {};
    Correlation c;
    c.rho = sxy / std::sqrt(sxx * syy);
    if (std::abs(c.rho) >= 1.0) {
        c.p_value = 0.0;
        return c;
    }
    const double dof = static_cast<double>(n) - 2.0;
    const double t = c.rho * std::sqrt(dof / (1.0 - c.rho * c.rho));
    const boost::math::students_t dist(dof);
    c.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    return c;
}

namespace {

HolderReport holder_from(SeparationReport raw)
{
    HolderReport h;
    h.raw = std::move(raw);
    std::vector<double> d, e;
    double fitted = std::numeric_limits<double>::infinity();
    bool any = false;
    h.all_positive = true;
    for (std::size_t i = 0; i < h.raw.pairs.size(); ++i) {
        const auto& p = h.raw.pairs[i];
        const auto& c = h.raw.cell(i, 1);
        h.rows.push_back({i, p.control, p.d_as, c.e_plus});
        if (p.control) {
            h.controls_zero = h.controls_zero && c.e_plus == 0.0;
            continue;
        }
        any = true;
        d.push_back(p.d_as);
        e.push_back(c.e_plus);
        h.all_positive = h.all_positive && c.e_plus > 0.0;
        fitted = std::min(fitted, c.e_plus / (p.d_as * p.d_as));
    }
    h.correlation = spearman(d, e);
    h.fitted_c = any ? fitted : 0.0;
    if (!any) h.all_positive = false;
    return h;
}

ExperimentConfig scalar(ExperimentConfig cfg)
{
    cfg.m_list = {1};
    return cfg;
}

} // namespace

HolderReport run_holder_experiment(ExperimentConfig cfg)
{
    cfg = scalar(std::move(cfg));
    if (cfg.scenario != Scenario::hat_cube) throw Error("holder experiment needs the hat_cube scenario");
    return holder_from(run_separation_experiment(cfg));
}

HolderReport run_sphere_relu_experiment(ExperimentConfig cfg)
{
    cfg = scalar(std::move(cfg));
    if (cfg.scenario != Scenario::relu_sphere) throw Error("sphere experiment needs the relu_sphere scenario");
    cfg.activation = Activation::relu();
    return holder_from(run_separation_experiment(cfg));
}

nlohmann::json HolderReport::to_json() const
{
    nlohmann::json rj = nlohmann::json::array();
    for (const auto& r : rows) rj.push_back({{"pair", r.pair}, {"control", r.control}, {"d_as", r.d_as}, {"e_plus", r.e_plus}});
    return {{"config", mas::to_json(raw.config)},
            {"rows", rj},
            {"spearman_rho", correlation.rho},
            {"spearman_p", correlation.p_value},
            {"fitted_c", fitted_c},
            {"all_positive", all_positive},
            {"controls_zero", controls_zero}};
}

std::string HolderReport::to_csv() const
{
    std::ostringstream out;
    out << "pair,control,d_as,e_plus\n";
    for (const auto& r : rows)
        out << r.pair << ',' << (r.control ? 1 : 0) << ',' << format_double(r.d_as) << ',' << format_double(r.e_plus)
            << '\n';
    return out.str();
}

LipschitzReport run_lipschitz_experiment(ExperimentConfig cfg)
{
    cfg = scalar(std::move(cfg));
    if (cfg.scenario != Scenario::hat_cube) throw Error("lipschitz experiment needs the hat_cube scenario");
    LipschitzReport l;
    l.raw = run_separation_experiment(cfg);
    for (std::size_t i = 0; i < l.raw.pairs.size(); ++i) {
        const auto& p = l.raw.pairs[i];
        const auto& c = l.raw.cell(i, 1);
        LipschitzRow row{i, p.w_k, c.e_abs, 0.0};
        if (p.w_k >= 1e-6) row.ratio = c.e_abs / p.w_k;
        l.max_ratio = std::max(l.max_ratio, row.ratio);
        l.rows.push_back(row);
    }
    return l;
}

nlohmann::json LipschitzReport::to_json() const
{
    nlohmann::json rj = nlohmann::json::array();
    for (const auto& r : rows) rj.push_back({{"pair", r.pair}, {"W_k", r.w_k}, {"e_abs", r.e_abs}, {"ratio", r.ratio}});
    return {{"config", mas::to_json(raw.config)}, {"rows", rj}, {"max_ratio", max_ratio}};
}

std::string LipschitzReport::to_csv() const
{
    std::ostringstream out;
    out << "pair,W_k,e_abs,ratio\n";
    for (const auto& r : rows)
        out << r.pair << ',' << format_double(r.w_k) << ',' << format_double(r.e_abs) << ',' << format_double(r.ratio)
            << '\n';
    return out.str();
}

} // namespace mas
