#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mas/error.hpp"
#include "mas/multiset.hpp"

namespace mas {

using MultisetPair = std::pair<Multiset, Multiset>;

/// Linear multiset embedding F(S) = W * counts(S) with a non-negative m x n
/// weight matrix W. Non-negativity makes F monotone by construction.
class EmbeddingMatrix {
public:
    EmbeddingMatrix(std::size_t m, std::size_t n, std::vector<double> weights);
    static EmbeddingMatrix from_rows(const std::vector<std::vector<double>>& rows);

    std::size_t m() const noexcept { return m_; }
    std::size_t n() const noexcept { return n_; }
    double weight(std::size_t row, Element v) const noexcept { return weights_[row * n_ + v]; }
    std::vector<std::vector<double>> rows() const;
    /// First `rows` rows only.
    EmbeddingMatrix truncated(std::size_t rows) const;

    std::vector<double> evaluate(const Multiset& s) const;
    /// Evaluation from a dense count vector. Terms are accumulated in element
    /// order, so for S subset of T every output coordinate satisfies
    /// F(S) <= F(T) exactly in floating point (rounding is monotone and all
    /// terms are non-negative).
    void evaluate_dense(const std::uint32_t* counts, double* out) const noexcept;

private:
    std::size_t m_;
    std::size_t n_;
    std::vector<double> weights_;
};

/// The one-hot (identity) embedding: MAS for multisets of any cardinality.
EmbeddingMatrix onehot_mas(std::size_t n);

/// Black-box embedding used by the refuters. The lower-bound constructions
/// only look at singleton and small-union values, so any candidate (linear or
/// not) can be refuted through this interface.
struct EmbeddingOracle {
    std::size_t n = 0;
    std::size_t m = 0;
    std::function<std::vector<double>(const Multiset&)> evaluate;

    static EmbeddingOracle from(const EmbeddingMatrix& e);
};

enum class ViolationKind { none, monotonicity, separability };
std::string to_string(ViolationKind kind);

struct MasVerdict {
    bool is_mas = true;
    ViolationKind violation = ViolationKind::none;
    std::optional<MultisetPair> witness;
};

struct VerifyOptions {
    /// Monotonicity is only reported as violated when F(S)[i] > F(T)[i] + slack.
    /// Linear embeddings are exactly monotone in floating point, so the default is 0.
    double slack = 0.0;
    std::uint64_t cap = kDefaultEnumerationCap;
};

/// Exhaustive MAS check over all ordered pairs of P_{<=k}([n]). Pairs are
/// scanned in enumeration order (S major, T minor) and the first violation
/// wins; within a pair monotonicity is checked before separability.
MasVerdict verify_mas(const EmbeddingMatrix& e, std::size_t k, const VerifyOptions& options = {});
/// Serial reference for verify_mas; same verdict, no threads.
MasVerdict verify_mas_serial(const EmbeddingMatrix& e, std::size_t k, const VerifyOptions& options = {});

/// Pairs (S = {x}, T) with |T| = k and x not in T, in (x, T-lexicographic) order.
std::vector<MultisetPair> extreme_pairs(std::size_t n, std::size_t k, std::uint64_t cap = kDefaultEnumerationCap);
std::uint64_t extreme_pair_count(std::size_t n, std::size_t k);

struct RandomProjectionResult {
    EmbeddingMatrix matrix;
    int attempts = 0;
};

/// Raised when every attempt leaves some extreme pair unseparated. Carries
/// the first unseparated pair of the attempt with the fewest of them.
class ProjectionFailure : public Error {
public:
    ProjectionFailure(MultisetPair pair, int attempts, std::uint64_t unseparated);
    const MultisetPair& pair() const noexcept { return pair_; }
    std::uint64_t unseparated() const noexcept { return unseparated_; }

private:
    MultisetPair pair_;
    std::uint64_t unseparated_;
};

/// Randomized construction of a MAS embedding for P_{<=k}([n]): m rows drawn
/// i.i.d. uniform on [0,1]^n, accepted once every extreme pair is separated by
/// some row. Attempt a uses the stream Rng::stream(seed, a), so the accepted
/// matrix and attempt count depend only on the seed.
RandomProjectionResult random_projection_mas(std::size_t n, std::size_t k, std::size_t m, std::uint64_t seed,
                                             int max_attempts);

/// ceil((k+2)^(k+2) * log_base(n)); log_base defaults to e.
std::size_t projection_rows(std::size_t n, std::size_t k, double log_base = std::numbers::e);

/// Maximal-singleton construction. Returns (S, T) with F(S) <= F(T) and S not
/// a subset of T when the construction succeeds with |T| <= k.
std::optional<MultisetPair> refute_maximal_singleton(const EmbeddingOracle& f, std::size_t k);
std::optional<MultisetPair> refute_maximal_singleton(const EmbeddingMatrix& e, std::size_t k);

/// Chain construction via repeated longest monotone subsequences of the
/// singleton values. Returns (S = {v2}, T = {v1, v3}) when a chain of three
/// elements is monotone in every coordinate and the union re-checks.
std::optional<MultisetPair> refute_erdos_szekeres(const EmbeddingOracle& f);
std::optional<MultisetPair> refute_erdos_szekeres(const EmbeddingMatrix& e);

/// MAS embedding of P_{<=1}([-1, 1]) into R^2: {} -> (-1, -1), {x} -> (-x, x).
std::array<double, 2> degenerate_k1_embedding(std::optional<double> x);

/// Bounds on the smallest MAS dimension. A missing n or k means infinity.
struct DimensionBounds {
    std::optional<std::uint64_t> n;
    std::optional<std::uint64_t> k;
    bool possible = true;
    bool exact = false;
    std::uint64_t lower = 0;
    std::uint64_t upper = 0;
    /// max over l in [k] of min(n - l, l k + 2 l - l^2); 0 when not applicable.
    std::uint64_t refined_lower = 0;
    /// The same expression at l = ceil((k+2)/2), when that l lies in [k].
    std::optional<std::uint64_t> refined_at_center;
    std::string note;
};

DimensionBounds dimension_bounds(std::optional<std::uint64_t> n, std::optional<std::uint64_t> k,
                                 double log_base = std::numbers::e);

/// Monotone vector-to-vector map M with M(F(S)) = f(S), tabulated on the image
/// of a MAS embedding and extended by M(v) = max{ M(u) : u <= v, u in image }.
class MonotoneExtension {
public:
    MonotoneExtension(std::vector<std::vector<double>> points, std::vector<std::vector<double>> values,
                      std::vector<double> floor);

    std::vector<double> operator()(const std::vector<double>& v) const;
    std::size_t size() const noexcept { return points_.size(); }
    const std::vector<std::vector<double>>& points() const noexcept { return points_; }
    const std::vector<std::vector<double>>& values() const noexcept { return values_; }

private:
    std::vector<std::vector<double>> points_;
    std::vector<std::vector<double>> values_;
    std::vector<double> floor_;
};

struct MonotoneExtensionReport {
    MonotoneExtension extension;
    bool reproduces_f = false;        // M(F(S)) == f(S) for every S
    bool monotone_on_image = false;   // u <= v  =>  M(u) <= M(v) on image points
};

/// Requires verify_mas(e, k) to pass and f to be defined and monotone on all
/// of P_{<=k}([n]); a non-monotone f raises an error naming the offending pair.
MonotoneExtensionReport monotone_extension_demo(const EmbeddingMatrix& e, std::size_t k,
                                                const std::map<Multiset, std::vector<double>>& f_values);

nlohmann::json to_json(const EmbeddingMatrix& e);
EmbeddingMatrix embedding_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MasVerdict& v);
nlohmann::json to_json(const DimensionBounds& b);

} // namespace mas
