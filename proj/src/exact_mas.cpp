#include "mas/exact_mas.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "mas/parallel.hpp"
#include "mas/rng.hpp"

namespace mas {

EmbeddingMatrix::EmbeddingMatrix(std::size_t m, std::size_t n, std::vector<double> weights)
    : m_(m), n_(n), weights_(std::move(weights))
{
    if (m == 0 || n == 0) throw Error("embedding needs m >= 1 and n >= 1");
    if (weights_.size() != m * n) throw Error("embedding weight count must be m * n");
    for (double w : weights_)
        if (!std::isfinite(w) || w < 0.0) throw Error("embedding weights must be finite and non-negative");
}

EmbeddingMatrix EmbeddingMatrix::from_rows(const std::vector<std::vector<double>>& rows)
{
    if (rows.empty()) throw Error("embedding needs at least one row");
    const std::size_t n = rows.front().size();
    std::vector<double> flat;
    flat.reserve(rows.size() * n);
    for (const auto& r : rows) {
        if (r.size() != n) throw Error("embedding rows must have equal length");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return EmbeddingMatrix(rows.size(), n, std::move(flat));
}

std::vector<std::vector<double>> EmbeddingMatrix::rows() const
{
    std::vector<std::vector<double>> out(m_);
    for (std::size_t i = 0; i < m_; ++i) out[i].assign(weights_.begin() + i * n_, weights_.begin() + (i + 1) * n_);
    return out;
}

EmbeddingMatrix EmbeddingMatrix::truncated(std::size_t rows) const
{
    if (rows == 0 || rows > m_) throw Error("invalid row count for truncation");
    return EmbeddingMatrix(rows, n_, std::vector<double>(weights_.begin(), weights_.begin() + rows * n_));
}

std::vector<double> EmbeddingMatrix::evaluate(const Multiset& s) const
{
    if (s.ground_size() != n_) throw Error("ground mismatch");
    const auto counts = s.dense();
    std::vector<double> out(m_);
    evaluate_dense(counts.data(), out.data());
    return out;
}

void EmbeddingMatrix::evaluate_dense(const std::uint32_t* counts, double* out) const noexcept
{
    for (std::size_t i = 0; i < m_; ++i) {
        const double* row = weights_.data() + i * n_;
        double acc = 0.0;
        for (std::size_t v = 0; v < n_; ++v)
            if (counts[v] != 0) acc += static_cast<double>(counts[v]) * row[v];
        out[i] = acc;
    }
}

EmbeddingMatrix onehot_mas(std::size_t n)
{
    if (n == 0) throw Error("ground size must be positive");
    std::vector<double> w(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) w[i * n + i] = 1.0;
    return EmbeddingMatrix(n, n, std::move(w));
}

EmbeddingOracle EmbeddingOracle::from(const EmbeddingMatrix& e)
{
    return {e.n(), e.m(), [e](const Multiset& s) { return e.evaluate(s); }};
}

std::string to_string(ViolationKind kind)
{
    switch (kind) {
    case ViolationKind::none: return "none";
    case ViolationKind::monotonicity: return "monotonicity";
    case ViolationKind::separability: return "separability";
    }
    return "none";
}

namespace {

struct Tabulated {
    std::vector<Multiset> sets;
    std::vector<std::uint32_t> counts; // sets.size() x n
    std::vector<double> values;        // sets.size() x m
};

Tabulated tabulate(const EmbeddingMatrix& e, std::size_t k, std::uint64_t cap, bool parallel)
{
    Tabulated t;
    t.sets = enumerate_multisets(e.n(), k, cap);
    const std::size_t count = t.sets.size(), n = e.n(), m = e.m();
    t.counts.assign(count * n, 0);
    t.values.assign(count * m, 0.0);
    auto fill = [&](std::size_t a) {
        for (auto [v, c] : t.sets[a].counts()) t.counts[a * n + v] = c;
        e.evaluate_dense(&t.counts[a * n], &t.values[a * m]);
    };
    if (parallel)
        parallel_for(count, fill);
    else
        for (std::size_t a = 0; a < count; ++a) fill(a);
    return t;
}

// First violating T index for a fixed S index, or npos.
struct RowResult {
    std::size_t t = std::numeric_limits<std::size_t>::max();
    ViolationKind kind = ViolationKind::none;
};

RowResult scan_row(const Tabulated& tab, std::size_t n, std::size_t m, std::size_t a, double slack)
{
    const std::uint32_t* cs = &tab.counts[a * n];
    const double* fs = &tab.values[a * m];
    for (std::size_t b = 0; b < tab.sets.size(); ++b) {
        const std::uint32_t* ct = &tab.counts[b * n];
        const double* ft = &tab.values[b * m];
        bool subset = true;
        for (std::size_t v = 0; v < n && subset; ++v) subset = cs[v] <= ct[v];
        if (subset) {
            for (std::size_t i = 0; i < m; ++i)
                if (fs[i] > ft[i] + slack) return {b, ViolationKind::monotonicity};
        } else {
            bool dominated = true;
            for (std::size_t i = 0; i < m && dominated; ++i) dominated = fs[i] <= ft[i];
            if (dominated) return {b, ViolationKind::separability};
        }
    }
    return {};
}

MasVerdict make_verdict(const Tabulated& tab, std::size_t a, const RowResult& r)
{
    MasVerdict v;
    v.is_mas = false;
    v.violation = r.kind;
    v.witness = MultisetPair{tab.sets[a], tab.sets[r.t]};
    return v;
}

} // namespace

MasVerdict verify_mas(const EmbeddingMatrix& e, std::size_t k, const VerifyOptions& options)
{
    const auto tab = tabulate(e, k, options.cap, true);
    std::vector<RowResult> rows(tab.sets.size());
    parallel_for(tab.sets.size(), [&](std::size_t a) { rows[a] = scan_row(tab, e.n(), e.m(), a, options.slack); });
    for (std::size_t a = 0; a < rows.size(); ++a)
        if (rows[a].kind != ViolationKind::none) return make_verdict(tab, a, rows[a]);
    return {};
}

MasVerdict verify_mas_serial(const EmbeddingMatrix& e, std::size_t k, const VerifyOptions& options)
{
    const auto tab = tabulate(e, k, options.cap, false);
    for (std::size_t a = 0; a < tab.sets.size(); ++a) {
        const auto r = scan_row(tab, e.n(), e.m(), a, options.slack);
        if (r.kind != ViolationKind::none) return make_verdict(tab, a, r);
    }
    return {};
}

std::uint64_t extreme_pair_count(std::size_t n, std::size_t k)
{
    if (k >= n || n < 2) return 0;
    // k-multisets over the n-1 remaining elements: C(n-1+k-1, k).
    const std::uint64_t per = multiset_count(n - 2, k);
    if (per > std::numeric_limits<std::uint64_t>::max() / n) return std::numeric_limits<std::uint64_t>::max();
    return per * n;
}

namespace {

void size_k_multisets(std::size_t n, std::size_t k, Element skip, Element first, std::vector<Element>& prefix,
                      std::vector<std::vector<Element>>& out)
{
    if (prefix.size() == k) {
        out.push_back(prefix);
        return;
    }
    for (Element v = first; v < n; ++v) {
        if (v == skip) continue;
        prefix.push_back(v);
        size_k_multisets(n, k, skip, v, prefix, out);
        prefix.pop_back();
    }
}

struct ExtremeTable {
    std::vector<Element> x;                  // singleton element per pair
    std::vector<std::vector<Element>> t;     // T as sorted element list
};

ExtremeTable extreme_table(std::size_t n, std::size_t k, std::uint64_t cap)
{
    if (k >= n) throw Error("extreme pairs need k < n");
    if (extreme_pair_count(n, k) > cap) throw Error("enumeration too large");
    ExtremeTable table;
    for (Element x = 0; x < n; ++x) {
        std::vector<std::vector<Element>> ts;
        std::vector<Element> prefix;
        size_k_multisets(n, k, x, 0, prefix, ts);
        for (auto& t : ts) {
            table.x.push_back(x);
            table.t.push_back(std::move(t));
        }
    }
    return table;
}

} // namespace

std::vector<MultisetPair> extreme_pairs(std::size_t n, std::size_t k, std::uint64_t cap)
{
    const auto table = extreme_table(n, k, cap);
    std::vector<MultisetPair> out;
    out.reserve(table.x.size());
    for (std::size_t p = 0; p < table.x.size(); ++p) {
        const Element x = table.x[p];
        out.emplace_back(Multiset::from_elements(n, std::span<const Element>(&x, 1)),
                         Multiset::from_elements(n, table.t[p]));
    }
    return out;
}

ProjectionFailure::ProjectionFailure(MultisetPair pair, int attempts, std::uint64_t unseparated)
    : Error("no separating projection found in " + std::to_string(attempts) + " attempts; best attempt left " +
            std::to_string(unseparated) + " extreme pairs unseparated"),
      pair_(std::move(pair)), unseparated_(unseparated)
{
}

std::size_t projection_rows(std::size_t n, std::size_t k, double log_base)
{
    if (n < 1) throw Error("ground size must be positive");
    if (!(log_base > 1.0)) throw Error("log base must exceed 1");
    const double kk = static_cast<double>(k) + 2.0;
    const double rows = std::pow(kk, kk) * std::log(static_cast<double>(n)) / std::log(log_base);
    return static_cast<std::size_t>(std::max(1.0, std::ceil(rows)));
}

namespace {

struct AttemptOutcome {
    std::uint64_t unseparated = 0;
    std::size_t first_unseparated = 0;
    std::vector<double> weights;
};

AttemptOutcome run_attempt(const ExtremeTable& table, std::size_t n, std::size_t m, std::uint64_t seed, int attempt)
{
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(attempt));
    AttemptOutcome out;
    out.weights.resize(m * n);
    for (double& w : out.weights) w = rng.uniform();
    const EmbeddingMatrix e(m, n, out.weights);
    std::vector<std::uint32_t> counts(n);
    std::vector<double> ft(m);
    for (std::size_t p = 0; p < table.x.size(); ++p) {
        std::fill(counts.begin(), counts.end(), 0);
        for (Element v : table.t[p]) ++counts[v];
        e.evaluate_dense(counts.data(), ft.data());
        bool separated = false;
        for (std::size_t j = 0; j < m && !separated; ++j) separated = e.weight(j, table.x[p]) > ft[j];
        if (!separated) {
            if (out.unseparated == 0) out.first_unseparated = p;
            ++out.unseparated;
        }
    }
    return out;
}

} // namespace

RandomProjectionResult random_projection_mas(std::size_t n, std::size_t k, std::size_t m, std::uint64_t seed,
                                             int max_attempts)
{
    if (k >= n) throw Error("random projection needs k < n");
    if (m < 1) throw Error("random projection needs m >= 1");
    if (max_attempts < 1) throw Error("max_attempts must be >= 1");
    const auto table = extreme_table(n, k, kDefaultEnumerationCap);

    std::uint64_t best_unseparated = std::numeric_limits<std::uint64_t>::max();
    std::size_t best_pair = 0;
    const int block = std::max(1, max_threads());
    for (int start = 0; start < max_attempts; start += block) {
        const int size = std::min(block, max_attempts - start);
        std::vector<AttemptOutcome> outcomes(size);
        parallel_for(size, [&](std::size_t i) {
            outcomes[i] = run_attempt(table, n, m, seed, start + static_cast<int>(i));
        });
        for (int i = 0; i < size; ++i) {
            if (outcomes[i].unseparated == 0)
                return {EmbeddingMatrix(m, n, std::move(outcomes[i].weights)), start + i + 1};
            if (outcomes[i].unseparated < best_unseparated) {
                best_unseparated = outcomes[i].unseparated;
                best_pair = outcomes[i].first_unseparated;
            }
        }
    }
    const Element x = table.x[best_pair];
    throw ProjectionFailure({Multiset::from_elements(n, std::span<const Element>(&x, 1)),
                             Multiset::from_elements(n, table.t[best_pair])},
                            max_attempts, best_unseparated);
}

namespace {

std::vector<std::vector<double>> singleton_values(const EmbeddingOracle& f)
{
    if (f.n == 0 || f.m == 0) throw Error("oracle needs n >= 1 and m >= 1");
    std::vector<std::vector<double>> out(f.n);
    for (Element v = 0; v < f.n; ++v) {
        out[v] = f.evaluate(Multiset(f.n, {{v, 1}}));
        if (out[v].size() != f.m) throw Error("oracle returned a vector of the wrong length");
    }
    return out;
}

bool dominated(const std::vector<double>& a, const std::vector<double>& b)
{
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!(a[i] <= b[i])) return false;
    return true;
}

std::optional<MultisetPair> checked(const EmbeddingOracle& f, Multiset s, Multiset t)
{
    if (is_subset(s, t)) return std::nullopt;
    if (!dominated(f.evaluate(s), f.evaluate(t))) return std::nullopt;
    return MultisetPair{std::move(s), std::move(t)};
}

} // namespace

std::optional<MultisetPair> refute_maximal_singleton(const EmbeddingOracle& f, std::size_t k)
{
    const auto single = singleton_values(f);
    std::vector<Element> vstar(f.m);
    for (std::size_t i = 0; i < f.m; ++i) {
        Element best = 0;
        for (Element v = 1; v < f.n; ++v)
            if (single[v][i] > single[best][i]) best = v;
        vstar[i] = best;
    }
    const std::set<Element> vstar_set(vstar.begin(), vstar.end());
    std::vector<Element> outside;
    for (Element v = 0; v < f.n; ++v)
        if (!vstar_set.contains(v)) outside.push_back(v);

    if (outside.size() >= 2) {
        Element u1 = outside[0], u2 = outside[1];
        std::size_t ge = 0;
        for (std::size_t i = 0; i < f.m; ++i)
            if (single[u1][i] >= single[u2][i]) ++ge;
        if (2 * ge < f.m) std::swap(u1, u2);
        std::map<Element, std::uint32_t> t{{u1, 1}};
        for (std::size_t j = 0; j < f.m; ++j)
            if (single[u1][j] < single[u2][j]) t[vstar[j]] = 1;
        Multiset tt(f.n, std::move(t));
        if (tt.cardinality() <= k)
            if (auto w = checked(f, Multiset(f.n, {{u2, 1}}), std::move(tt))) return w;
    }
    // Unbounded-cardinality form: a single outside element against all maximal singletons.
    if (!outside.empty() && vstar_set.size() <= k) {
        std::map<Element, std::uint32_t> t;
        for (Element v : vstar_set) t[v] = 1;
        if (auto w = checked(f, Multiset(f.n, {{outside[0], 1}}), Multiset(f.n, std::move(t)))) return w;
    }
    return std::nullopt;
}

std::optional<MultisetPair> refute_maximal_singleton(const EmbeddingMatrix& e, std::size_t k)
{
    return refute_maximal_singleton(EmbeddingOracle::from(e), k);
}

namespace {

// Longest subsequence of `seq` that is monotone in `key`, either direction.
// Non-decreasing wins ties; predecessors and endpoints prefer earlier positions.
std::vector<Element> longest_monotone(const std::vector<Element>& seq, const std::vector<std::vector<double>>& single,
                                      std::size_t coord)
{
    const std::size_t len = seq.size();
    std::vector<Element> best;
    for (int direction : {+1, -1}) {
        std::vector<std::size_t> length(len, 1), pred(len, len);
        for (std::size_t i = 0; i < len; ++i) {
            const double xi = single[seq[i]][coord];
            for (std::size_t j = 0; j < i; ++j) {
                const double xj = single[seq[j]][coord];
                const bool ok = direction > 0 ? xj <= xi : xj >= xi;
                if (ok && length[j] + 1 > length[i]) {
                    length[i] = length[j] + 1;
                    pred[i] = j;
                }
            }
        }
        std::size_t end = 0;
        for (std::size_t i = 1; i < len; ++i)
            if (length[i] > length[end]) end = i;
        if (len == 0 || length[end] <= best.size()) continue;
        std::vector<Element> chain;
        for (std::size_t i = end; i != len; i = pred[i]) chain.push_back(seq[i]);
        std::reverse(chain.begin(), chain.end());
        best = std::move(chain);
    }
    return best;
}

} // namespace

std::optional<MultisetPair> refute_erdos_szekeres(const EmbeddingOracle& f)
{
    const auto single = singleton_values(f);
    // Sorting by the first coordinate makes the whole sequence monotone there;
    // each further coordinate keeps its longest monotone subsequence.
    std::vector<Element> chain(f.n);
    std::iota(chain.begin(), chain.end(), 0);
    std::stable_sort(chain.begin(), chain.end(), [&](Element a, Element b) { return single[a][0] < single[b][0]; });
    for (std::size_t i = 1; i < f.m && chain.size() >= 3; ++i) chain = longest_monotone(chain, single, i);
    for (std::size_t p = 0; p + 2 < chain.size(); ++p) {
        const Element v1 = chain[p], v2 = chain[p + 1], v3 = chain[p + 2];
        Multiset s(f.n, {{v2, 1}});
        std::map<Element, std::uint32_t> t{{v1, 1}};
        ++t[v3];
        if (auto w = checked(f, std::move(s), Multiset(f.n, std::move(t)))) return w;
    }
    return std::nullopt;
}

std::optional<MultisetPair> refute_erdos_szekeres(const EmbeddingMatrix& e)
{
    return refute_erdos_szekeres(EmbeddingOracle::from(e));
}

std::array<double, 2> degenerate_k1_embedding(std::optional<double> x)
{
    if (!x) return {-1.0, -1.0};
    if (!(std::abs(*x) <= 1.0)) throw Error("degenerate embedding needs x in [-1, 1]");
    return {-*x, *x};
}

namespace {

std::uint64_t ceil_log2_log3(std::uint64_t n)
{
    if (n <= 3) return 0;
    const double value = std::log2(std::log(static_cast<double>(n)) / std::log(3.0));
    return value <= 0.0 ? 0 : static_cast<std::uint64_t>(std::ceil(value));
}

std::int64_t refined_term(std::uint64_t n, std::uint64_t k, std::uint64_t l)
{
    const auto ln = static_cast<std::int64_t>(n) - static_cast<std::int64_t>(l);
    const auto lk = static_cast<std::int64_t>(l * k + 2 * l) - static_cast<std::int64_t>(l * l);
    return std::min(ln, lk);
}

} // namespace

DimensionBounds dimension_bounds(std::optional<std::uint64_t> n, std::optional<std::uint64_t> k, double log_base)
{
    if (n && *n < 1) throw Error("ground size must be positive");
    if (!(log_base > 1.0)) throw Error("log base must exceed 1");
    DimensionBounds b;
    b.n = n;
    b.k = k;

    if (k && *k == 0) {
        b.exact = true;
        b.lower = b.upper = 1;
        b.note = "only the empty multiset";
        return b;
    }
    if (!n) {
        if (k && *k == 1) {
            b.exact = true;
            b.lower = b.upper = 2;
            b.note = "single-element multisets over an infinite ground set";
        } else {
            b.possible = false;
            b.note = "no MAS function exists for an infinite ground set and k >= 2";
        }
        return b;
    }
    const std::uint64_t nn = *n;
    if (!k || *k + 1 >= nn) {
        b.exact = true;
        b.lower = b.upper = nn;
        b.note = "one-hot embedding is optimal";
        return b;
    }
    const std::uint64_t kk = *k;

    std::uint64_t lower = std::max<std::uint64_t>(1, std::min(nn, kk + 1));
    if (2 * kk <= nn - 1) lower = std::max(lower, 2 * kk);
    if (kk >= 2) lower = std::max(lower, ceil_log2_log3(nn));
    b.lower = lower;

    const double projection = std::pow(static_cast<double>(kk + 2), static_cast<double>(kk + 2)) *
                              std::log(static_cast<double>(nn)) / std::log(log_base);
    const double capped = std::min(static_cast<double>(nn), std::max(1.0, std::ceil(projection)));
    b.upper = static_cast<std::uint64_t>(capped);

    std::int64_t refined = 0;
    for (std::uint64_t l = 1; l <= kk; ++l) refined = std::max(refined, refined_term(nn, kk, l));
    b.refined_lower = static_cast<std::uint64_t>(std::max<std::int64_t>(0, refined));
    const std::uint64_t center = (kk + 3) / 2;
    if (center >= 1 && center <= kk)
        b.refined_at_center = static_cast<std::uint64_t>(std::max<std::int64_t>(0, refined_term(nn, kk, center)));
    b.exact = b.lower == b.upper;
    return b;
}

MonotoneExtension::MonotoneExtension(std::vector<std::vector<double>> points, std::vector<std::vector<double>> values,
                                     std::vector<double> floor)
    : points_(std::move(points)), values_(std::move(values)), floor_(std::move(floor))
{
    if (points_.size() != values_.size()) throw Error("extension table size mismatch");
}

std::vector<double> MonotoneExtension::operator()(const std::vector<double>& v) const
{
    std::vector<double> out = floor_;
    bool any = false;
    for (std::size_t p = 0; p < points_.size(); ++p) {
        if (points_[p].size() != v.size()) throw Error("dimension mismatch");
        if (!dominated(points_[p], v)) continue;
        if (!any) {
            out = values_[p];
            any = true;
        } else {
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::max(out[i], values_[p][i]);
        }
    }
    return out;
}

MonotoneExtensionReport monotone_extension_demo(const EmbeddingMatrix& e, std::size_t k,
                                                const std::map<Multiset, std::vector<double>>& f_values)
{
    if (!verify_mas(e, k).is_mas) throw Error("embedding is not MAS on multisets of size <= k");
    const auto sets = enumerate_multisets(e.n(), k);
    std::vector<std::vector<double>> values;
    values.reserve(sets.size());
    for (const auto& s : sets) {
        auto it = f_values.find(s);
        if (it == f_values.end()) throw Error("f is not defined on " + to_json(s).dump());
        if (!values.empty() && it->second.size() != values.front().size()) throw Error("f values differ in length");
        values.push_back(it->second);
    }
    for (std::size_t a = 0; a < sets.size(); ++a)
        for (std::size_t b = 0; b < sets.size(); ++b)
            if (is_subset(sets[a], sets[b]) && !dominated(values[a], values[b]))
                throw Error("f is not monotone: S=" + to_json(sets[a]).dump() + " T=" + to_json(sets[b]).dump());

    std::vector<std::vector<double>> points;
    points.reserve(sets.size());
    for (const auto& s : sets) points.push_back(e.evaluate(s));
    // sets.front() is the empty multiset, whose value is the minimum of a monotone f.
    MonotoneExtensionReport report{MonotoneExtension(points, values, values.front()), true, true};
    for (std::size_t a = 0; a < sets.size(); ++a)
        if (report.extension(points[a]) != values[a]) report.reproduces_f = false;
    for (std::size_t a = 0; a < sets.size() && report.monotone_on_image; ++a)
        for (std::size_t b = 0; b < sets.size(); ++b)
            if (dominated(points[a], points[b]) && !dominated(report.extension(points[a]), report.extension(points[b]))) {
                report.monotone_on_image = false;
                break;
            }
    return report;
}

nlohmann::json to_json(const EmbeddingMatrix& e)
{
    return {{"m", e.m()}, {"n", e.n()}, {"rows", e.rows()}};
}

EmbeddingMatrix embedding_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("rows")) throw Error("embedding JSON needs {m, n, rows}");
    auto e = EmbeddingMatrix::from_rows(j.at("rows").get<std::vector<std::vector<double>>>());
    if (j.contains("m") && j.at("m").get<std::size_t>() != e.m()) throw Error("embedding JSON: m does not match rows");
    if (j.contains("n") && j.at("n").get<std::size_t>() != e.n()) throw Error("embedding JSON: n does not match rows");
    return e;
}

nlohmann::json to_json(const MasVerdict& v)
{
    nlohmann::json j{{"is_mas", v.is_mas}};
    if (!v.is_mas) {
        j["violation"] = to_string(v.violation);
        j["witness"] = {{"S", to_json(v.witness->first)}, {"T", to_json(v.witness->second)}};
    }
    return j;
}

nlohmann::json to_json(const DimensionBounds& b)
{
    auto opt = [](const std::optional<std::uint64_t>& x) -> nlohmann::json {
        if (x) return *x;
        return "inf";
    };
    nlohmann::json j{{"n", opt(b.n)}, {"k", opt(b.k)}, {"possible", b.possible}};
    if (b.possible) {
        j["lower"] = b.lower;
        j["upper"] = b.upper;
        j["exact"] = b.exact;
        if (b.refined_lower > 0) j["refined_lower"] = b.refined_lower;
        if (b.refined_at_center) j["refined_at_center"] = *b.refined_at_center;
    }
    j["note"] = b.note;
    return j;
}

} // namespace mas
