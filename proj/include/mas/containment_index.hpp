#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mas/masnet.hpp"
#include "mas/multiset.hpp"

namespace mas {

struct IndexEntry {
    std::string id;
    std::vector<double> embedding;
    std::optional<RealMultiset> set;
};

struct IndexMetadata {
    std::uint64_t model_ref = 0; // MasNet::fingerprint of the embedding model
    std::size_t m = 0;
    std::size_t d = 0;
    double delta_eval = 0.0;
    std::int64_t build_time = 0; // seconds since epoch; 0 unless requested
};

struct BuildOptions {
    bool store_sets = true;
    double delta_eval = 0.0;
    std::int64_t build_time = 0;
};

struct QueryOptions {
    double delta_eval = 0.0;
    /// Keep only hits that pass is_subset_real(S, T, verify_tol).
    bool verify = false;
    double verify_tol = 0.0;
    /// Also scan non-hits for exact sub-multisets and raise if one is found.
    bool audit = false;
};

struct QueryHit {
    std::string id;
    /// min_i (F(T)_i - F(S)_i); at least -delta_eval for every hit.
    double margin = 0.0;
};

using Corpus = std::vector<std::pair<std::string, RealMultiset>>;

/// Dominance index over target embeddings. Entries are kept sorted by id,
/// so contents and query results do not depend on insertion order. Scans are
/// linear.
class ContainmentIndex {
public:
    ContainmentIndex() = default;

    static ContainmentIndex build(const MasNet& model, const Corpus& corpus, const BuildOptions& options = {});

    const IndexMetadata& metadata() const noexcept { return meta_; }
    const std::vector<IndexEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool stores_sets() const noexcept;

    /// Embeds S with `model`, which must match model_ref.
    std::vector<QueryHit> query(const MasNet& model, const RealMultiset& s, const QueryOptions& options = {}) const;
    /// One model check for the whole batch; queries run in parallel.
    std::vector<std::vector<QueryHit>> query_batch(const MasNet& model, const std::vector<RealMultiset>& queries,
                                                   const QueryOptions& options = {}) const;
    /// Hits sorted by margin descending, then id.
    std::vector<QueryHit> query_embedding(std::span<const double> fs, const QueryOptions& options = {},
                                          const RealMultiset* s = nullptr) const;
    std::vector<QueryHit> query_embedding_serial(std::span<const double> fs, const QueryOptions& options = {},
                                                 const RealMultiset* s = nullptr) const;

    /// "MASIDX1\0", u64 LE header length, JSON header, then float64 LE
    /// embeddings (entry-major) followed by stored set points.
    void save(const std::string& path) const;
    static ContainmentIndex load(const std::string& path);
    std::string serialize() const;
    static ContainmentIndex deserialize(const std::string& bytes);

    nlohmann::json header() const;

private:
    std::vector<QueryHit> finish(std::vector<char> hit, std::vector<double> margin,
                                 const QueryOptions& options, const RealMultiset* s) const;

    IndexMetadata meta_;
    std::vector<IndexEntry> entries_;
};

nlohmann::json to_json(const std::vector<QueryHit>& hits);

} // namespace mas
