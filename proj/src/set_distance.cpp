#include "mas/set_distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mas/error.hpp"
#include "mas/parallel.hpp"

namespace mas {

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), costs_(rows * cols, 0.0) {}

CostMatrix CostMatrix::euclidean(const RealMultiset& s, const RealMultiset& t)
{
    if (s.dim() != t.dim()) throw Error("dimension mismatch");
    CostMatrix c(s.size(), t.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < t.size(); ++j) c(i, j) = euclidean_distance(s.point(i), t.point(j));
    return c;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct HungarianResult {
    std::vector<std::size_t> map; // row -> col
    std::vector<double> u;        // row potentials
    std::vector<double> v;        // column potentials
};

// Shortest-augmenting-path Hungarian method on a dense n x m matrix, n <= m.
// Keeps dual feasibility c(i,j) - u_i - v_j >= 0 throughout.
HungarianResult hungarian(const std::vector<double>& a, std::size_t n, std::size_t m)
{
    std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
    std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
    std::vector<char> used(m + 1);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), kInf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            double delta = kInf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= m; ++j) {
                if (used[j]) continue;
                const double cur = a[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= m; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    HungarianResult r;
    r.map.assign(n, 0);
    for (std::size_t j = 1; j <= m; ++j)
        if (p[j] != 0) r.map[p[j] - 1] = j - 1;
    r.u.assign(u.begin() + 1, u.end());
    r.v.assign(v.begin() + 1, v.end());
    return r;
}

double sub_cost(const CostMatrix& c, std::size_t first_row, const std::vector<char>& col_used)
{
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < c.cols(); ++j)
        if (!col_used[j]) cols.push_back(j);
    const std::size_t n = c.rows() - first_row;
    if (n == 0) return 0.0;
    if (n > cols.size()) return kInf;
    std::vector<double> a(n * cols.size());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) a[i * cols.size() + j] = c(first_row + i, cols[j]);
    const auto r = hungarian(a, n, cols.size());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += a[i * cols.size() + r.map[i]];
    return total;
}

} // namespace

Coupling assignment_solve(const CostMatrix& costs)
{
    const std::size_t n = costs.rows(), m = costs.cols();
    if (n > m) throw Error("pad or swap: assignment needs rows <= cols");
    Coupling out;
    if (n == 0) return out;

    double max_cost = 0.0;
    std::vector<double> a(n * m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) {
            const double c = costs(i, j);
            if (!std::isfinite(c) || c < 0.0) throw Error("costs must be finite and non-negative");
            a[i * m + j] = c;
            max_cost = std::max(max_cost, c);
        }

    const auto full = hungarian(a, n, m);
    double optimum = 0.0;
    for (std::size_t i = 0; i < n; ++i) optimum += costs(i, full.map[i]);

    // Any optimal assignment only uses tight edges (zero reduced cost). When
    // every row has a single tight edge the optimum is unique.
    const double tight_tol = 1e-9 * (1.0 + max_cost);
    std::vector<std::vector<std::size_t>> tight(n);
    bool unique = true;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j)
            if (costs(i, j) - full.u[i] - full.v[j] <= tight_tol) tight[i].push_back(j);
        if (tight[i].size() != 1) unique = false;
    }

    out.map = full.map;
    if (!unique) {
        // Fix rows one at a time to the smallest column that still admits an
        // optimal completion.
        const double eq_tol = 1e-10 * (1.0 + optimum);
        std::vector<char> used(m, 0);
        std::vector<std::size_t> chosen(n);
        double prefix = 0.0;
        bool ok = true;
        for (std::size_t i = 0; i < n && ok; ++i) {
            bool fixed = false;
            for (int pass = 0; pass < 2 && !fixed; ++pass) {
                std::vector<std::size_t> candidates = tight[i];
                if (pass == 1) {
                    candidates.clear();
                    for (std::size_t j = 0; j < m; ++j) candidates.push_back(j);
                }
                for (std::size_t j : candidates) {
                    if (used[j]) continue;
                    used[j] = 1;
                    const double total = prefix + costs(i, j) + sub_cost(costs, i + 1, used);
                    if (total <= optimum + eq_tol) {
                        chosen[i] = j;
                        prefix += costs(i, j);
                        fixed = true;
                        break;
                    }
                    used[j] = 0;
                }
            }
            ok = fixed;
        }
        if (ok) out.map = chosen;
    }
    out.total_cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) out.total_cost += costs(i, out.map[i]);
    return out;
}

double d_as(const RealMultiset& s, const RealMultiset& t)
{
    if (s.dim() != t.dim()) throw Error("dimension mismatch");
    if (s.size() > t.size()) throw Error("d_as needs |S| <= |T|");
    if (s.empty()) return 0.0;
    return assignment_solve(CostMatrix::euclidean(s, t)).total_cost;
}

std::vector<double> default_padding(std::size_t dim, double norm_bound)
{
    std::vector<double> z(dim, 0.0);
    z[0] = 3.0 * norm_bound;
    return z;
}

double padded_wasserstein_k(const RealMultiset& s, const RealMultiset& t, std::size_t k, std::span<const double> z)
{
    if (s.dim() != t.dim()) throw Error("dimension mismatch");
    if (s.size() > k || t.size() > k) throw Error("cardinality exceeds k");
    std::vector<double> pad;
    if (z.empty()) {
        pad = default_padding(s.dim());
        z = pad;
    }
    if (z.size() != s.dim()) throw Error("padding dimension mismatch");
    if (k == 0) return 0.0;
    auto padded = [&](const RealMultiset& x) {
        std::vector<double> flat(x.data().begin(), x.data().end());
        for (std::size_t i = x.size(); i < k; ++i) flat.insert(flat.end(), z.begin(), z.end());
        return RealMultiset(x.dim(), std::move(flat));
    };
    const RealMultiset ps = padded(s), pt = padded(t);
    return assignment_solve(CostMatrix::euclidean(ps, pt)).total_cost;
}

std::vector<double> d_as_batch(std::span<const std::pair<RealMultiset, RealMultiset>> pairs)
{
    std::vector<double> out(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t i) { out[i] = d_as(pairs[i].first, pairs[i].second); });
    return out;
}

std::vector<double> d_as_batch_serial(std::span<const std::pair<RealMultiset, RealMultiset>> pairs)
{
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const auto& [s, t] : pairs) out.push_back(d_as(s, t));
    return out;
}

} // namespace mas
