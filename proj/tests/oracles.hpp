#pragma once

// Independent brute-force references used by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "mas/multiset.hpp"
#include "mas/rng.hpp"
#include "mas/set_distance.hpp"

namespace oracle {

// Minimum over all injections rows -> cols, by recursion over rows.
inline double min_injection(const mas::CostMatrix& c)
{
    const std::size_t n = c.rows(), m = c.cols();
    std::vector<char> used(m, 0);
    double best = std::numeric_limits<double>::infinity();
    auto rec = [&](auto&& self, std::size_t i, double acc) -> void {
        if (acc >= best) return;
        if (i == n) {
            best = acc;
            return;
        }
        for (std::size_t j = 0; j < m; ++j) {
            if (used[j]) continue;
            used[j] = 1;
            self(self, i + 1, acc + c(i, j));
            used[j] = 0;
        }
    };
    rec(rec, 0, 0.0);
    return best;
}

// All injections rows -> cols in lexicographic order of the map.
inline std::vector<std::vector<std::size_t>> injections(std::size_t n, std::size_t m)
{
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> cur;
    std::vector<char> used(m, 0);
    auto rec = [&](auto&& self) -> void {
        if (cur.size() == n) {
            out.push_back(cur);
            return;
        }
        for (std::size_t j = 0; j < m; ++j) {
            if (used[j]) continue;
            used[j] = 1;
            cur.push_back(j);
            self(self);
            cur.pop_back();
            used[j] = 0;
        }
    };
    rec(rec);
    return out;
}

// Brute-force d_as: min over injections of summed Euclidean distances,
// costs evaluated directly from the points.
inline double d_as(const mas::RealMultiset& s, const mas::RealMultiset& t)
{
    double best = std::numeric_limits<double>::infinity();
    for (const auto& map : injections(s.size(), t.size())) {
        double total = 0.0;
        for (std::size_t i = 0; i < map.size(); ++i) {
            double sq = 0.0;
            for (std::size_t q = 0; q < s.dim(); ++q) {
                const double diff = s.point(i)[q] - t.point(map[i])[q];
                sq += diff * diff;
            }
            total += std::sqrt(sq);
        }
        best = std::min(best, total);
    }
    return s.empty() ? 0.0 : best;
}

// Exact containment by counting equal points.
inline bool is_subset_exact(const mas::RealMultiset& s, const mas::RealMultiset& t)
{
    auto sp = s.points(), tp = t.points();
    for (const auto& p : sp) {
        auto it = std::find(tp.begin(), tp.end(), p);
        if (it == tp.end()) return false;
        tp.erase(it);
    }
    return true;
}

inline std::uint64_t binomial(std::uint64_t n, std::uint64_t k)
{
    std::uint64_t r = 1;
    for (std::uint64_t j = 1; j <= k; ++j) r = r * (n - k + j) / j;
    return r;
}

inline mas::RealMultiset random_points(mas::Rng& rng, std::size_t count, std::size_t dim, double lo = -1.0,
                                       double hi = 1.0)
{
    std::vector<double> flat(count * dim);
    for (double& x : flat) x = rng.uniform(lo, hi);
    return mas::RealMultiset(dim, std::move(flat));
}

} // namespace oracle
