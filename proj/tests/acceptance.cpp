// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance            all criteria
//   acceptance 3 10 11    selected criteria
//
// Exit status is 0 only if every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "mas/containment_index.hpp"
#include "mas/exact_mas.hpp"
#include "mas/masnet.hpp"
#include "mas/rng.hpp"
#include "mas/separation_lab.hpp"
#include "mas/set_distance.hpp"
#include "mas/weak_mas.hpp"
#include "oracles.hpp"

using namespace mas;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double x)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, x);
    return buf;
}

EmbeddingMatrix random_matrix(Rng& rng, std::size_t m, std::size_t n)
{
    std::vector<double> w(m * n);
    for (double& x : w) x = rng.uniform();
    return EmbeddingMatrix(m, n, std::move(w));
}

// Independent evaluation of W * counts(S) and the two witness conditions.
bool valid_witness(const EmbeddingMatrix& e, const MultisetPair& p)
{
    const auto cs = p.first.dense(), ct = p.second.dense();
    bool subset = true;
    for (std::size_t v = 0; v < cs.size(); ++v) subset = subset && cs[v] <= ct[v];
    for (std::size_t i = 0; i < e.m(); ++i) {
        double fs = 0.0, ft = 0.0;
        for (std::size_t v = 0; v < e.n(); ++v) {
            fs += e.weight(i, static_cast<Element>(v)) * cs[v];
            ft += e.weight(i, static_cast<Element>(v)) * ct[v];
        }
        if (fs > ft) return false;
    }
    return !subset;
}

// Spearman rho with average ranks for ties, computed from scratch.
double spearman_rho(const std::vector<double>& x, const std::vector<double>& y)
{
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            for (std::size_t q = i; q <= j; ++q) r[idx[q]] = 0.5 * static_cast<double>(i + j) + 1.0;
            i = j + 1;
        }
        return r;
    };
    const auto rx = ranks(x), ry = ranks(y);
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += rx[i] / n, my += ry[i] / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------

Outcome exact_oracle()
{
    const std::vector<std::pair<std::size_t, std::size_t>> cases{{2, 1}, {3, 2}, {4, 2}, {5, 3}};
    for (const auto& [n, k] : cases)
        if (!verify_mas(onehot_mas(n), k).is_mas)
            return {false, "one-hot rejected at n=" + std::to_string(n) + " k=" + std::to_string(k)};
    std::size_t refuted = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        const auto e = random_matrix(rng, 1, 2);
        const auto v = verify_mas(e, 1);
        if (!v.is_mas && v.witness && valid_witness(e, *v.witness)) ++refuted;
    }
    return {refuted == 100, "one-hot MAS on 4/4 cases; 1-d embeddings refuted " + std::to_string(refuted) + "/100"};
}

Outcome projection_construction()
{
    std::ostringstream detail;
    bool pass = true;
    for (std::size_t n = 4; n <= 8; ++n)
        for (std::size_t k = 1; k <= 2; ++k) {
            const auto m = static_cast<std::size_t>(std::ceil(std::pow(k + 2.0, k + 2.0) * std::log(double(n))));
            if (projection_rows(n, k) != m) return {false, "projection_rows disagrees with ceil((k+2)^(k+2) ln n)"};
            std::size_t ok = 0, verified = 0;
            for (std::uint64_t seed = 0; seed < 100; ++seed) {
                try {
                    const auto r = random_projection_mas(n, k, m, seed, 20);
                    ++ok;
                    if (verify_mas(r.matrix, k).is_mas) ++verified;
                } catch (const ProjectionFailure&) {
                }
            }
            if (ok < 95 || verified != ok) pass = false;
            detail << " n" << n << "k" << k << "=" << ok;
            if (verified != ok) detail << "(unverified " << ok - verified << ")";
        }
    return {pass, "successes /100:" + detail.str()};
}

Outcome refuters()
{
    Rng rng(3);
    std::size_t good = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const auto e = random_matrix(rng, 1, 4);
        const auto w = refute_erdos_szekeres(e);
        if (w && valid_witness(e, *w)) ++good;
    }
    return {good == 500, "valid witnesses " + std::to_string(good) + "/500"};
}

Outcome distance_correctness()
{
    Rng rng(4);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t d = 1 + rng.below(3);
        const std::size_t tn = 1 + rng.below(6);
        const std::size_t sn = 1 + rng.below(std::min<std::size_t>(4, tn));
        const auto s = oracle::random_points(rng, sn, d), t = oracle::random_points(rng, tn, d);
        worst = std::max(worst, std::abs(d_as(s, t) - oracle::d_as(s, t)));
    }
    std::size_t agree = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t d = 1 + rng.below(3);
        const auto t = oracle::random_points(rng, 2 + rng.below(5), d);
        std::vector<double> flat;
        const std::size_t sn = 1 + rng.below(t.size());
        std::vector<std::size_t> pick(t.size());
        for (std::size_t i = 0; i < pick.size(); ++i) pick[i] = i;
        for (std::size_t i = 0; i < sn; ++i) {
            std::swap(pick[i], pick[i + rng.below(pick.size() - i)]);
            flat.insert(flat.end(), t.point(pick[i]).begin(), t.point(pick[i]).end());
        }
        const bool positive = trial % 2 == 0;
        if (!positive) flat[rng.below(flat.size())] += rng.uniform(1e-3, 1.0);
        const RealMultiset s(d, std::move(flat));
        const bool zero = d_as(s, t) == 0.0;
        if (zero == positive && zero == oracle::is_subset_exact(s, t)) ++agree;
    }
    return {worst <= 1e-9 && agree == 1000,
            "max |d_as - brute force| = " + fmt("%.2e", worst) + "; zero iff subset on " + std::to_string(agree) +
                "/1000"};
}

Outcome decay()
{
    ExperimentConfig cfg;
    cfg.ground = GroundSpec::cube(3);
    cfg.k = 4;
    cfg.m_list = {1, 2, 4, 8, 16};
    cfg.num_pairs = 20;
    cfg.num_param_draws = 100000;
    cfg.seed = 1;
    cfg.sweep = true;
    cfg.s_size = 2;
    cfg.eps_min = 0.02;
    cfg.eps_max = 1.0;
    const auto r = run_separation_experiment(cfg);
    std::size_t agree = 0, cells = 0;
    std::vector<double> d, p1;
    for (std::size_t i = 0; i < cfg.num_pairs; ++i) {
        const auto& one = r.cell(i, 1);
        d.push_back(r.pairs[i].d_as);
        p1.push_back(one.p_hat);
        for (auto m : cfg.m_list) {
            const auto& c = r.cell(i, m);
            ++cells;
            const double lo = std::pow(one.ci_lo, double(m)), hi = std::pow(one.ci_hi, double(m));
            if (c.ci_lo <= hi && c.ci_hi >= lo) ++agree;
        }
    }
    const auto corr = spearman(d, p1);
    const double rho = spearman_rho(d, p1);
    const bool pass = agree == cells && std::abs(rho - corr.rho) <= 1e-12 && rho < 0.0 && corr.p_value < 0.01;
    return {pass, "p(m) vs p(1)^m CI overlap " + std::to_string(agree) + "/" + std::to_string(cells) +
                      "; spearman(d_as, p(1)) rho=" + fmt("%.3f", rho) + " p=" + fmt("%.2e", corr.p_value)};
}

Outcome holder()
{
    ExperimentConfig cfg;
    cfg.num_pairs = 200;
    cfg.num_param_draws = 100000;
    cfg.num_controls = 20;
    cfg.seed = 1;
    const auto r = run_holder_experiment(cfg);
    std::vector<double> d, e;
    for (const auto& row : r.rows)
        if (!row.control) d.push_back(row.d_as), e.push_back(row.e_plus);
    const double rho = spearman_rho(e, d);
    const bool pass = r.all_positive && r.controls_zero && rho > 0.5 && std::abs(rho - r.correlation.rho) <= 1e-12;
    return {pass, std::string("E+ > 0 on all 200: ") + (r.all_positive ? "yes" : "no") +
                      "; E+ = 0 on 20 controls: " + (r.controls_zero ? "yes" : "no") + "; rho=" + fmt("%.3f", rho)};
}

Outcome lipschitz()
{
    double ratio[2];
    for (int s = 0; s < 2; ++s) {
        ExperimentConfig cfg;
        cfg.num_pairs = 200;
        cfg.num_param_draws = 100000;
        cfg.seed = 1 + s;
        ratio[s] = run_lipschitz_experiment(cfg).max_ratio;
    }
    const bool finite = std::isfinite(ratio[0]) && std::isfinite(ratio[1]) && ratio[0] > 0 && ratio[1] > 0;
    const double rel = finite ? std::abs(ratio[1] / ratio[0] - 1.0) : INFINITY;
    return {finite && rel <= 0.5, "max ratio seed1=" + fmt("%.4f", ratio[0]) + " seed2=" + fmt("%.4f", ratio[1]) +
                                      " (rel diff " + fmt("%.3f", rel) + ")"};
}

// Frozen protocol for the trained-model criteria.
TrainConfig protocol(std::uint64_t seed)
{
    TrainConfig tc;
    tc.epochs = 30;
    tc.batch_size = 32;
    tc.lr = 1e-3;
    tc.patience = 10;
    tc.seed = seed;
    return tc;
}

double trained_accuracy(const MasNetConfig& mc, const DatasetSplits& splits, std::uint64_t seed)
{
    const auto res = train(MasNet(mc, seed), splits.train, splits.dev, protocol(seed));
    return evaluate_containment(res.model, splits.test).accuracy();
}

Outcome containment_table()
{
    bool pass = true;
    std::ostringstream detail;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        SyntheticSpec spec;
        spec.num_pairs = 6000;
        spec.s_size = 1;
        spec.t_size = 10;
        spec.d = 4;
        spec.seed = seed;
        const auto splits = split_dataset(generate_synthetic(spec));
        const double relu = trained_accuracy(MasNetConfig::for_variant(Variant::relu_mas, 4, 256, 64), splits, seed);
        const double hat = trained_accuracy(MasNetConfig::for_variant(Variant::hat_mas, 4, 256, 64), splits, seed);
        const double ablation = trained_accuracy(MasNetConfig::pointwise(OutputKind::relu, 4, 256), splits, seed);
        const bool ok = relu >= 0.95 && hat >= 0.95 && ablation <= 0.80;
        pass = pass && ok;
        detail << (seed > 1 ? "; " : "") << "seed " << seed << ": relu " << fmt("%.4f", relu) << " hat "
               << fmt("%.4f", hat) << " ablation " << fmt("%.4f", ablation) << (ok ? "" : " [x]");
    }
    return {pass, detail.str()};
}

Outcome pointwise_gap()
{
    SyntheticSpec spec;
    spec.num_pairs = 6000;
    spec.s_size = 10;
    spec.t_size = 30;
    spec.d = 4;
    spec.seed = 1;
    const auto splits = split_dataset(generate_synthetic(spec));
    const double hat = trained_accuracy(MasNetConfig::pointwise(OutputKind::hat, 4, 256), splits, 1);
    const double relu = trained_accuracy(MasNetConfig::pointwise(OutputKind::relu, 4, 256), splits, 1);
    return {hat - relu >= 0.10, "hat " + fmt("%.4f", hat) + " relu " + fmt("%.4f", relu) + " gap " +
                                    fmt("%.4f", hat - relu)};
}

Outcome gradients()
{
    bool pass = true;
    std::ostringstream detail;
    for (const auto& v : oracle::gradcheck_variants()) {
        const auto r = oracle::gradient_check(v, 1000, 23);
        const bool ok = r.max_rel_err <= 1e-4 && r.rejected * 10 <= r.points && r.informative * 4 >= r.points;
        pass = pass && ok;
        detail << " " << v << "=" << fmt("%.1e", r.max_rel_err) << (ok ? "" : "[x]");
    }
    return {pass, "max rel err:" + detail.str()};
}

Outcome attention()
{
    std::size_t ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto r = set_transformer_nonmonotone_demo(1 + seed % 4, seed);
        if (oracle::is_subset_exact(r.s, r.t) && r.ft < r.fs) ++ok;
    }
    return {ok == 100, "S in T with F(T)_j < F(S)_j on " + std::to_string(ok) + "/100 seeds"};
}

Outcome index_guarantee()
{
    SyntheticSpec spec;
    spec.num_pairs = 1500;
    spec.seed = 12;
    const auto splits = split_dataset(generate_synthetic(spec));
    TrainConfig tc;
    tc.epochs = 3;
    tc.seed = 12;

    Rng rng(120);
    Corpus corpus;
    for (std::size_t i = 0; i < 1000; ++i) {
        std::vector<double> flat((5 + rng.below(11)) * 4);
        for (double& x : flat) x = rng.normal();
        corpus.emplace_back("t" + std::to_string(1000 + i), RealMultiset(4, std::move(flat)));
    }
    std::vector<std::size_t> source;
    std::vector<RealMultiset> queries;
    for (std::size_t q = 0; q < 10000; ++q) {
        const std::size_t src = rng.below(corpus.size());
        const auto& t = corpus[src].second;
        std::vector<double> flat;
        for (std::size_t i = 0; i < t.size(); ++i)
            if (rng.below(3) == 0) flat.insert(flat.end(), t.point(i).begin(), t.point(i).end());
        if (flat.empty()) flat.assign(t.point(0).begin(), t.point(0).end());
        source.push_back(src);
        queries.emplace_back(4, std::move(flat));
    }

    std::ostringstream detail;
    bool pass = true;
    for (auto variant : {Variant::relu_mas, Variant::hat_mas}) {
        const auto model = train(MasNet(MasNetConfig::for_variant(variant, 4, 64, 64), 12), splits.train,
                                 splits.dev, tc)
                               .model;
        const auto idx = ContainmentIndex::build(model, corpus);
        QueryOptions audit;
        audit.audit = true;
        std::size_t misses = 0, hits = 0;
        try {
            const auto results = idx.query_batch(model, queries, audit);
            for (std::size_t q = 0; q < queries.size(); ++q) {
                hits += results[q].size();
                const auto& id = corpus[source[q]].first;
                if (std::none_of(results[q].begin(), results[q].end(), [&](const QueryHit& h) { return h.id == id; }))
                    ++misses;
            }
        } catch (const Error& e) {
            pass = false;
            detail << to_string(variant) << ": " << e.what() << "; ";
            continue;
        }
        pass = pass && misses == 0;
        detail << to_string(variant) << ": " << misses << " false negatives, mean hits "
               << fmt("%.1f", double(hits) / queries.size()) << "; ";
    }
    std::string s = detail.str();
    return {pass, s.substr(0, s.size() - 2)};
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<Criterion> all{
        {1, "exact MAS oracle", 10, exact_oracle},
        {2, "randomized projection construction", 120, projection_construction},
        {3, "chain refuter on 1-d embeddings", 30, refuters},
        {4, "assignment distance correctness", 60, distance_correctness},
        {5, "separation failure decays as p(1)^m", 300, decay},
        {6, "lower Holder separation", 300, holder},
        {7, "upper Lipschitz ratio", 300, lipschitz},
        {8, "containment accuracy |S|=1 |T|=10", 900, containment_table},
        {9, "pointwise hat vs ReLU at |S|=10 |T|=30", 600, pointwise_gap},
        {10, "analytic vs finite-difference gradients", 30, gradients},
        {11, "attention pooling breaks monotonicity", 5, attention},
        {12, "index has no false negatives", 120, index_guarantee},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    int failed = 0, ran = 0;
    for (const auto& c : all) {
        if (!selected.empty() && !selected.count(c.id)) continue;
        ++ran;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = o.pass && in_time;
        if (!pass) ++failed;
        std::printf("%s %2d %s: %s [%.1f s / %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                    c.budget_s, in_time ? "" : ", over budget");
        std::fflush(stdout);
    }
    std::printf("%d/%d criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
