#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "json.hpp"

namespace mas {

using Element = std::uint32_t;

inline constexpr std::uint64_t kDefaultEnumerationCap = 2'000'000;

/// Multiset over the finite ground set {0, ..., n-1}, stored as element -> count.
/// Absent keys have multiplicity zero; stored multiplicities are >= 1.
class Multiset {
public:
    explicit Multiset(std::size_t ground_size);
    Multiset(std::size_t ground_size, std::map<Element, std::uint32_t> counts);

    /// Builds a multiset from a list of elements with repetition.
    static Multiset from_elements(std::size_t ground_size, std::span<const Element> elements);

    std::size_t ground_size() const noexcept { return ground_size_; }
    std::uint32_t count(Element v) const noexcept;
    std::size_t cardinality() const noexcept { return cardinality_; }
    bool empty() const noexcept { return counts_.empty(); }
    const std::map<Element, std::uint32_t>& counts() const noexcept { return counts_; }

    /// Sorted element list with repetition.
    std::vector<Element> elements() const;
    /// Dense count vector of length ground_size().
    std::vector<std::uint32_t> dense() const;

    /// S with `times` more copies of v.
    Multiset with(Element v, std::uint32_t times = 1) const;

    friend bool operator==(const Multiset& a, const Multiset& b) = default;
    /// Lexicographic on elements(); ties broken by ground size.
    friend bool operator<(const Multiset& a, const Multiset& b);

private:
    std::size_t ground_size_;
    std::map<Element, std::uint32_t> counts_;
    std::size_t cardinality_ = 0;
};

/// c_S(v) <= c_T(v) for all v. Throws "ground mismatch" when ground sizes differ.
bool is_subset(const Multiset& s, const Multiset& t);

/// Number of multisets over [n] with cardinality <= k, i.e. C(n+k, k).
/// Saturates at UINT64_MAX.
std::uint64_t multiset_count(std::uint64_t n, std::uint64_t k);

/// All multisets over [n] with cardinality <= k, in lexicographic order of
/// their sorted element lists (the empty multiset first).
std::vector<Multiset> enumerate_multisets(std::size_t n, std::size_t k,
                                          std::uint64_t cap = kDefaultEnumerationCap);

/// Finite list of points in R^d with repetition. Points are kept in
/// lexicographic order so that equality, hashing and every downstream sum are
/// independent of the order the caller supplied them in.
class RealMultiset {
public:
    explicit RealMultiset(std::size_t dim);
    /// `flat` holds size*dim coordinates, point-major.
    RealMultiset(std::size_t dim, std::vector<double> flat);
    static RealMultiset from_points(std::size_t dim, const std::vector<std::vector<double>>& points);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return dim_ == 0 ? 0 : data_.size() / dim_; }
    bool empty() const noexcept { return data_.empty(); }
    std::span<const double> point(std::size_t i) const noexcept
    {
        return {data_.data() + i * dim_, dim_};
    }
    std::span<const double> data() const noexcept { return data_; }
    std::vector<std::vector<double>> points() const;

    RealMultiset with(std::span<const double> x) const;

    friend bool operator==(const RealMultiset& a, const RealMultiset& b) = default;

private:
    void canonicalize();

    std::size_t dim_;
    std::vector<double> data_;
};

/// True iff every point of s can be matched injectively to a point of t within
/// Euclidean distance tol. tol = 0 is exact containment.
bool is_subset_real(const RealMultiset& s, const RealMultiset& t, double tol = 0.0);

/// Description of the ground set V.
struct GroundSpec {
    enum class Kind { finite, cube, sphere };

    Kind kind = Kind::cube;
    std::size_t n = 0;    // finite
    std::size_t dim = 1;  // cube, sphere
    double bound = 1.0;   // cube half-width

    static GroundSpec finite(std::size_t n);
    static GroundSpec cube(std::size_t dim, double bound = 1.0);
    static GroundSpec sphere(std::size_t dim);

    void validate() const;
    /// sup over V of the Euclidean norm (cube: bound * sqrt(dim), sphere: 1).
    double norm_bound() const;
};

// JSON: finite multisets are [[elem, count], ...] sorted by element;
// real multisets are [[x1, ..., xd], ...] in canonical order.
nlohmann::json to_json(const Multiset& s);
nlohmann::json to_json(const RealMultiset& s);
Multiset multiset_from_json(const nlohmann::json& j, std::size_t ground_size);
/// dim_hint is required only for the empty list.
RealMultiset real_multiset_from_json(const nlohmann::json& j, std::size_t dim_hint = 0);

} // namespace mas
