#include "mas/containment_index.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "mas/error.hpp"
#include "mas/parallel.hpp"

namespace mas {

namespace {

constexpr char kMagic[8] = {'M', 'A', 'S', 'I', 'D', 'X', '1', '\0'};
constexpr std::size_t kScanBlock = 256;

void put_u64(std::string& out, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& in, std::size_t at)
{
    if (at + 8 > in.size()) throw Error("index file truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return v;
}

std::string hex64(std::uint64_t v)
{
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << v;
    return os.str();
}

std::uint64_t parse_hex64(const std::string& s)
{
    if (s.size() != 16 || s.find_first_not_of("0123456789abcdef") != std::string::npos)
        throw Error("malformed model_ref");
    return std::stoull(s, nullptr, 16);
}

double margin_of(std::span<const double> fs, const std::vector<double>& ft) noexcept
{
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < fs.size(); ++i) worst = std::min(worst, ft[i] - fs[i]);
    return worst;
}

} // namespace

ContainmentIndex ContainmentIndex::build(const MasNet& model, const Corpus& corpus, const BuildOptions& options)
{
    if (!(options.delta_eval >= 0.0)) throw Error("delta_eval must be non-negative");
    ContainmentIndex idx;
    idx.meta_.model_ref = model.fingerprint();
    idx.meta_.m = model.output_dim();
    idx.meta_.d = model.d();
    idx.meta_.delta_eval = options.delta_eval;
    idx.meta_.build_time = options.build_time;

    std::set<std::string> seen;
    for (const auto& [id, t] : corpus) {
        if (!seen.insert(id).second) throw Error("duplicate id: " + id);
        if (t.dim() != model.d())
            throw Error("target " + id + " has dimension " + std::to_string(t.dim()) + ", model expects " +
                        std::to_string(model.d()));
    }
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return corpus[a].first < corpus[b].first; });

    idx.entries_.resize(corpus.size());
    parallel_for(order.size(), [&](std::size_t k) {
        const auto& [id, t] = corpus[order[k]];
        auto& e = idx.entries_[k];
        e.id = id;
        e.embedding = model.forward(t);
        if (options.store_sets) e.set = t;
    });
    return idx;
}

bool ContainmentIndex::stores_sets() const noexcept
{
    return !entries_.empty() && entries_.front().set.has_value();
}

std::vector<QueryHit> ContainmentIndex::query(const MasNet& model, const RealMultiset& s,
                                              const QueryOptions& options) const
{
    if (model.fingerprint() != meta_.model_ref) throw Error("model does not match the index model_ref");
    if (s.dim() != meta_.d) throw Error("query dimension mismatch");
    const auto fs = model.forward(s);
    return query_embedding(fs, options, &s);
}

std::vector<std::vector<QueryHit>> ContainmentIndex::query_batch(const MasNet& model,
                                                                 const std::vector<RealMultiset>& queries,
                                                                 const QueryOptions& options) const
{
    if (model.fingerprint() != meta_.model_ref) throw Error("model does not match the index model_ref");
    for (const auto& s : queries)
        if (s.dim() != meta_.d) throw Error("query dimension mismatch");
    std::vector<std::vector<QueryHit>> out(queries.size());
    parallel_for(queries.size(), [&](std::size_t q) {
        out[q] = query_embedding_serial(model.forward(queries[q]), options, &queries[q]);
    });
    return out;
}

std::vector<QueryHit> ContainmentIndex::finish(std::vector<char> hit,
                                               std::vector<double> margin, const QueryOptions& options,
                                               const RealMultiset* s) const
{
    if ((options.verify || options.audit) && !entries_.empty()) {
        if (!s) throw Error("verification needs the query multiset");
        if (!stores_sets()) throw Error("index was built without stored sets");
    }
    if (options.audit) {
        for (std::size_t i = 0; i < entries_.size(); ++i)
            if (!hit[i] && is_subset_real(*s, *entries_[i].set, 0.0))
                throw Error("false negative: " + entries_[i].id + " contains the query but was not returned");
    }
    std::vector<QueryHit> out;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (!hit[i]) continue;
        if (options.verify && !is_subset_real(*s, *entries_[i].set, options.verify_tol)) continue;
        out.push_back({entries_[i].id, margin[i]});
    }
    std::sort(out.begin(), out.end(), [](const QueryHit& a, const QueryHit& b) {
        if (a.margin != b.margin) return a.margin > b.margin;
        return a.id < b.id;
    });
    return out;
}

std::vector<QueryHit> ContainmentIndex::query_embedding(std::span<const double> fs, const QueryOptions& options,
                                                        const RealMultiset* s) const
{
    if (fs.size() != meta_.m) throw Error("query embedding size mismatch");
    const std::size_t n = entries_.size();
    std::vector<char> hit(n, 0);
    std::vector<double> margin(n, 0.0);
    const std::size_t blocks = (n + kScanBlock - 1) / kScanBlock;
    parallel_for(blocks, [&](std::size_t b) {
        const std::size_t end = std::min(n, (b + 1) * kScanBlock);
        for (std::size_t i = b * kScanBlock; i < end; ++i) {
            margin[i] = margin_of(fs, entries_[i].embedding);
            hit[i] = margin[i] >= -options.delta_eval ? 1 : 0;
        }
    });
    return finish(std::move(hit), std::move(margin), options, s);
}

std::vector<QueryHit> ContainmentIndex::query_embedding_serial(std::span<const double> fs,
                                                               const QueryOptions& options,
                                                               const RealMultiset* s) const
{
    if (fs.size() != meta_.m) throw Error("query embedding size mismatch");
    const std::size_t n = entries_.size();
    std::vector<char> hit(n, 0);
    std::vector<double> margin(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        margin[i] = margin_of(fs, entries_[i].embedding);
        hit[i] = margin[i] >= -options.delta_eval ? 1 : 0;
    }
    return finish(std::move(hit), std::move(margin), options, s);
}

nlohmann::json ContainmentIndex::header() const
{
    auto entries = nlohmann::json::array();
    for (const auto& e : entries_) {
        nlohmann::json j{{"id", e.id}};
        if (e.set) j["set_size"] = e.set->size();
        entries.push_back(j);
    }
    return {{"format", "MASIDX1"},
            {"model_ref", hex64(meta_.model_ref)},
            {"m", meta_.m},
            {"d", meta_.d},
            {"delta_eval", meta_.delta_eval},
            {"build_time", meta_.build_time},
            {"stores_sets", stores_sets()},
            {"count", entries_.size()},
            {"entries", entries}};
}

std::string ContainmentIndex::serialize() const
{
    const std::string head = header().dump();
    std::string out(kMagic, sizeof kMagic);
    put_u64(out, head.size());
    out += head;
    for (const auto& e : entries_)
        for (double v : e.embedding) put_u64(out, std::bit_cast<std::uint64_t>(v));
    for (const auto& e : entries_)
        if (e.set)
            for (double v : e.set->data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
    return out;
}

ContainmentIndex ContainmentIndex::deserialize(const std::string& bytes)
{
    if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
        throw Error("not a MASIDX1 index file");
    const std::uint64_t len = get_u64(bytes, 8);
    if (len > bytes.size() - 16) throw Error("index file truncated");
    ContainmentIndex idx;
    try {
        const auto head = nlohmann::json::parse(bytes.substr(16, len));
        if (head.at("format").get<std::string>() != "MASIDX1") throw Error("unsupported index format");
        idx.meta_.model_ref = parse_hex64(head.at("model_ref").get<std::string>());
        idx.meta_.m = head.at("m").get<std::size_t>();
        idx.meta_.d = head.at("d").get<std::size_t>();
        idx.meta_.delta_eval = head.at("delta_eval").get<double>();
        idx.meta_.build_time = head.at("build_time").get<std::int64_t>();
        const bool sets = head.at("stores_sets").get<bool>();
        const auto& entries = head.at("entries");
        if (entries.size() != head.at("count").get<std::size_t>()) throw Error("entry count mismatch");
        std::size_t at = 16 + len;
        idx.entries_.resize(entries.size());
        for (std::size_t i = 0; i < entries.size(); ++i) {
            auto& e = idx.entries_[i];
            e.id = entries[i].at("id").get<std::string>();
            e.embedding.resize(idx.meta_.m);
            for (double& v : e.embedding) {
                v = std::bit_cast<double>(get_u64(bytes, at));
                at += 8;
            }
        }
        if (sets) {
            for (std::size_t i = 0; i < entries.size(); ++i) {
                const std::size_t count = entries[i].at("set_size").get<std::size_t>() * idx.meta_.d;
                std::vector<double> flat(count);
                for (double& v : flat) {
                    v = std::bit_cast<double>(get_u64(bytes, at));
                    at += 8;
                }
                idx.entries_[i].set = RealMultiset(idx.meta_.d, std::move(flat));
            }
        }
        if (at != bytes.size()) throw Error("trailing bytes in index file");
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed index header: ") + e.what());
    }
    return idx;
}

void ContainmentIndex::save(const std::string& path) const
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    const std::string bytes = serialize();
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed: " + path);
}

ContainmentIndex ContainmentIndex::load(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize(buf.str());
}

nlohmann::json to_json(const std::vector<QueryHit>& hits)
{
    auto j = nlohmann::json::array();
    for (const auto& h : hits) j.push_back({{"id", h.id}, {"margin", h.margin}});
    return j;
}

} // namespace mas
