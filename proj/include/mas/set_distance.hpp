#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "mas/multiset.hpp"

namespace mas {

/// Dense rows x cols matrix of non-negative finite costs.
class CostMatrix {
public:
    CostMatrix(std::size_t rows, std::size_t cols);

    /// costs(i, j) = ||s_i - t_j||_2
    static CostMatrix euclidean(const RealMultiset& s, const RealMultiset& t);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double& operator()(std::size_t i, std::size_t j) noexcept { return costs_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return costs_[i * cols_ + j]; }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> costs_;
};

/// Injective map rows -> cols with its cost.
struct Coupling {
    std::vector<std::size_t> map;
    double total_cost = 0.0;
};

double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// Exact minimum-cost injective assignment (rows <= cols), Hungarian method
/// with potentials, O(rows^2 * cols). Among optimal assignments the
/// lexicographically smallest map is returned. Throws "pad or swap" when
/// rows > cols.
Coupling assignment_solve(const CostMatrix& costs);

/// Asymmetric containment distance: the cheapest injective coupling of S
/// into T under the Euclidean ground metric. Zero iff S is a sub-multiset of T.
/// Requires |S| <= |T|.
double d_as(const RealMultiset& s, const RealMultiset& t);

/// Padding point (3 * norm_bound, 0, ..., 0).
std::vector<double> default_padding(std::size_t dim, double norm_bound = 1.0);

/// Wasserstein distance between S and T after padding both to k points with
/// copies of z (default_padding(dim) when z is empty). Symmetric in S, T.
double padded_wasserstein_k(const RealMultiset& s, const RealMultiset& t, std::size_t k,
                            std::span<const double> z = {});

/// d_as over a batch of pairs. The OpenMP variant and the serial reference
/// return identical values.
std::vector<double> d_as_batch(std::span<const std::pair<RealMultiset, RealMultiset>> pairs);
std::vector<double> d_as_batch_serial(std::span<const std::pair<RealMultiset, RealMultiset>> pairs);

} // namespace mas
