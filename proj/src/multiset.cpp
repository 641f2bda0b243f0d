#include "mas/multiset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mas/error.hpp"
#include "mas/set_distance.hpp"

namespace mas {

Multiset::Multiset(std::size_t ground_size) : ground_size_(ground_size)
{
    if (ground_size == 0) throw Error("ground size must be positive");
}

Multiset::Multiset(std::size_t ground_size, std::map<Element, std::uint32_t> counts)
    : ground_size_(ground_size), counts_(std::move(counts))
{
    if (ground_size == 0) throw Error("ground size must be positive");
    for (auto it = counts_.begin(); it != counts_.end();) {
        if (it->first >= ground_size_) throw Error("element " + std::to_string(it->first) + " outside ground set");
        if (it->second == 0) {
            it = counts_.erase(it);
            continue;
        }
        cardinality_ += it->second;
        ++it;
    }
}

Multiset Multiset::from_elements(std::size_t ground_size, std::span<const Element> elements)
{
    std::map<Element, std::uint32_t> counts;
    for (Element v : elements) ++counts[v];
    return Multiset(ground_size, std::move(counts));
}

std::uint32_t Multiset::count(Element v) const noexcept
{
    auto it = counts_.find(v);
    return it == counts_.end() ? 0 : it->second;
}

std::vector<Element> Multiset::elements() const
{
    std::vector<Element> out;
    out.reserve(cardinality_);
    for (auto [v, c] : counts_) out.insert(out.end(), c, v);
    return out;
}

std::vector<std::uint32_t> Multiset::dense() const
{
    std::vector<std::uint32_t> out(ground_size_, 0);
    for (auto [v, c] : counts_) out[v] = c;
    return out;
}

Multiset Multiset::with(Element v, std::uint32_t times) const
{
    auto counts = counts_;
    counts[v] += times;
    return Multiset(ground_size_, std::move(counts));
}

bool operator<(const Multiset& a, const Multiset& b)
{
    const auto ea = a.elements();
    const auto eb = b.elements();
    if (ea != eb) return std::lexicographical_compare(ea.begin(), ea.end(), eb.begin(), eb.end());
    return a.ground_size() < b.ground_size();
}

bool is_subset(const Multiset& s, const Multiset& t)
{
    if (s.ground_size() != t.ground_size()) throw Error("ground mismatch");
    for (auto [v, c] : s.counts())
        if (c > t.count(v)) return false;
    return true;
}

std::uint64_t multiset_count(std::uint64_t n, std::uint64_t k)
{
    // C(n+k, k) computed incrementally; each step stays an exact integer.
    constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
    __uint128_t acc = 1;
    for (std::uint64_t j = 1; j <= k; ++j) {
        acc = acc * (n + j) / j;
        if (acc > kMax) return kMax;
    }
    return static_cast<std::uint64_t>(acc);
}

namespace {

void enumerate_from(std::size_t n, std::size_t k, Element first, std::vector<Element>& prefix,
                    std::vector<Multiset>& out)
{
    out.push_back(Multiset::from_elements(n, prefix));
    if (prefix.size() == k) return;
    for (Element v = first; v < n; ++v) {
        prefix.push_back(v);
        enumerate_from(n, k, v, prefix, out);
        prefix.pop_back();
    }
}

} // namespace

std::vector<Multiset> enumerate_multisets(std::size_t n, std::size_t k, std::uint64_t cap)
{
    if (n == 0) throw Error("ground size must be positive");
    const std::uint64_t total = multiset_count(n, k);
    if (total > cap) throw Error("enumeration too large");
    std::vector<Multiset> out;
    out.reserve(total);
    std::vector<Element> prefix;
    enumerate_from(n, k, 0, prefix, out);
    return out;
}

RealMultiset::RealMultiset(std::size_t dim) : dim_(dim)
{
    if (dim == 0) throw Error("dimension must be positive");
}

RealMultiset::RealMultiset(std::size_t dim, std::vector<double> flat) : dim_(dim), data_(std::move(flat))
{
    if (dim == 0) throw Error("dimension must be positive");
    if (data_.size() % dim != 0) throw Error("coordinate count is not a multiple of the dimension");
    for (double x : data_)
        if (!std::isfinite(x)) throw Error("non-finite coordinate");
    canonicalize();
}

RealMultiset RealMultiset::from_points(std::size_t dim, const std::vector<std::vector<double>>& points)
{
    std::vector<double> flat;
    flat.reserve(points.size() * dim);
    for (const auto& p : points) {
        if (p.size() != dim) throw Error("dimension mismatch");
        flat.insert(flat.end(), p.begin(), p.end());
    }
    return RealMultiset(dim, std::move(flat));
}

std::vector<std::vector<double>> RealMultiset::points() const
{
    std::vector<std::vector<double>> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) {
        auto p = point(i);
        out.emplace_back(p.begin(), p.end());
    }
    return out;
}

RealMultiset RealMultiset::with(std::span<const double> x) const
{
    if (x.size() != dim_) throw Error("dimension mismatch");
    auto flat = data_;
    flat.insert(flat.end(), x.begin(), x.end());
    return RealMultiset(dim_, std::move(flat));
}

void RealMultiset::canonicalize()
{
    const std::size_t count = size();
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        auto pa = point(a), pb = point(b);
        return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
    });
    std::vector<double> sorted;
    sorted.reserve(data_.size());
    for (std::size_t i : order) {
        auto p = point(i);
        sorted.insert(sorted.end(), p.begin(), p.end());
    }
    // -0.0 and 0.0 compare equal but differ bitwise; normalise so == is value equality.
    for (double& x : sorted)
        if (x == 0.0) x = 0.0;
    data_ = std::move(sorted);
}

bool is_subset_real(const RealMultiset& s, const RealMultiset& t, double tol)
{
    if (s.dim() != t.dim()) throw Error("dimension mismatch");
    if (!(tol >= 0.0)) throw Error("tolerance must be non-negative");
    if (s.size() > t.size()) return false;
    if (s.empty()) return true;
    // A perfect matching inside the tolerance graph exists iff the 0/1
    // assignment problem has zero cost.
    CostMatrix costs(s.size(), t.size());
    for (std::size_t i = 0; i < s.size(); ++i)
        for (std::size_t j = 0; j < t.size(); ++j)
            costs(i, j) = euclidean_distance(s.point(i), t.point(j)) <= tol ? 0.0 : 1.0;
    return assignment_solve(costs).total_cost == 0.0;
}

GroundSpec GroundSpec::finite(std::size_t n)
{
    GroundSpec g;
    g.kind = Kind::finite;
    g.n = n;
    g.validate();
    return g;
}

GroundSpec GroundSpec::cube(std::size_t dim, double bound)
{
    GroundSpec g;
    g.kind = Kind::cube;
    g.dim = dim;
    g.bound = bound;
    g.validate();
    return g;
}

GroundSpec GroundSpec::sphere(std::size_t dim)
{
    GroundSpec g;
    g.kind = Kind::sphere;
    g.dim = dim;
    g.validate();
    return g;
}

void GroundSpec::validate() const
{
    switch (kind) {
    case Kind::finite:
        if (n < 1) throw Error("finite ground set needs n >= 1");
        break;
    case Kind::cube:
        if (dim < 1) throw Error("cube needs dim >= 1");
        if (!(bound > 0.0)) throw Error("cube needs bound > 0");
        break;
    case Kind::sphere:
        if (dim < 2) throw Error("sphere needs dim >= 2");
        break;
    }
}

double GroundSpec::norm_bound() const
{
    switch (kind) {
    case Kind::cube: return bound * std::sqrt(static_cast<double>(dim));
    case Kind::sphere: return 1.0;
    case Kind::finite: break;
    }
    throw Error("finite ground set has no norm bound");
}

nlohmann::json to_json(const Multiset& s)
{
    auto j = nlohmann::json::array();
    for (auto [v, c] : s.counts()) j.push_back({v, c});
    return j;
}

nlohmann::json to_json(const RealMultiset& s)
{
    auto j = nlohmann::json::array();
    for (std::size_t i = 0; i < s.size(); ++i) {
        auto p = s.point(i);
        j.push_back(std::vector<double>(p.begin(), p.end()));
    }
    return j;
}

Multiset multiset_from_json(const nlohmann::json& j, std::size_t ground_size)
{
    if (!j.is_array()) throw Error("multiset JSON must be an array of [element, count]");
    std::map<Element, std::uint32_t> counts;
    for (const auto& entry : j) {
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number_unsigned() ||
            !entry[1].is_number_unsigned())
            throw Error("multiset JSON entries must be [element, count]");
        counts[entry[0].get<Element>()] += entry[1].get<std::uint32_t>();
    }
    return Multiset(ground_size, std::move(counts));
}

RealMultiset real_multiset_from_json(const nlohmann::json& j, std::size_t dim_hint)
{
    if (!j.is_array()) throw Error("real multiset JSON must be an array of points");
    if (j.empty()) {
        if (dim_hint == 0) throw Error("empty real multiset needs a dimension");
        return RealMultiset(dim_hint);
    }
    std::vector<std::vector<double>> points;
    for (const auto& p : j) {
        if (!p.is_array()) throw Error("each point must be an array of numbers");
        points.push_back(p.get<std::vector<double>>());
    }
    const std::size_t dim = points.front().size();
    if (dim_hint != 0 && dim != dim_hint) throw Error("dimension mismatch");
    return RealMultiset::from_points(dim, points);
}

} // namespace mas
