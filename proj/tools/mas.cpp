// mas: command-line front end for the multiset embedding library.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mas/activations.hpp"
#include "mas/config.hpp"
#include "mas/containment_index.hpp"
#include "mas/error.hpp"
#include "mas/exact_mas.hpp"
#include "mas/format.hpp"
#include "mas/masnet.hpp"
#include "mas/parallel.hpp"
#include "mas/rng.hpp"
#include "mas/separation_lab.hpp"
#include "mas/set_distance.hpp"
#include "mas/weak_mas.hpp"

using nlohmann::json;

namespace {

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw mas::Error("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json parse_json_arg(const std::string& text, const std::string& what)
{
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw mas::Error("malformed " + what + ": " + e.what());
    }
}

std::vector<json> read_jsonl(const std::string& path)
{
    std::istringstream in(read_file(path));
    std::vector<json> out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::exception& e) {
            throw mas::Error(path + " line " + std::to_string(number) + ": " + e.what());
        }
    }
    return out;
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

template <class T>
void set_if(json& j, const char* key, const std::optional<T>& v)
{
    if (v) j[key] = *v;
}

void set_flag(json& j, const char* key, bool given)
{
    if (given) j[key] = true;
}

struct Globals {
    std::optional<std::uint64_t> seed;
    int threads = 1;
    std::string output;
    std::string format = "json";
    std::string config;
};

class Context {
public:
    Globals g;

    void load()
    {
        file_ = g.config.empty() ? json::object() : mas::load_toml_file(g.config);
        if (!file_.is_object()) throw mas::Error("config root must be a table");
        if (g.threads < 1) throw mas::Error("--threads must be at least 1");
        mas::set_threads(g.threads);
    }

    /// Table at `path` in the config file, or {}.
    json section(const std::vector<std::string>& path) const
    {
        const json* at = &file_;
        for (const auto& key : path) {
            if (!at->is_object() || !at->contains(key)) return json::object();
            at = &(*at)[key];
        }
        if (!at->is_object()) throw mas::Error("config entry for '" + command_name(path) + "' must be a table");
        return *at;
    }

    /// Config-file table for the command with flag overrides applied on top.
    json settings(const std::vector<std::string>& path, const json& flags) const
    {
        json out = section(path);
        mas::merge_json(out, flags);
        return out;
    }

    std::uint64_t seed()
    {
        used_seed_ = true;
        if (g.seed) return *g.seed;
        if (file_.contains("seed")) return file_.at("seed").get<std::uint64_t>();
        if (const char* env = std::getenv("MAS_SEED")) {
            try {
                std::size_t used = 0;
                const auto v = std::stoull(env, &used);
                if (used == std::string(env).size()) return v;
            } catch (const std::exception&) {
            }
            throw mas::Error("MAS_SEED must be an unsigned integer");
        }
        return 0;
    }

    static std::string command_name(const std::vector<std::string>& path)
    {
        std::string out;
        for (const auto& p : path) out += (out.empty() ? "" : " ") + p;
        return out;
    }

    void emit(const std::vector<std::string>& path, json result, const json& config, const std::string* csv = nullptr)
    {
        std::string text;
        if (g.format == "json") {
            result["command"] = command_name(path);
            result["config"] = config;
            if (used_seed_) result["seed"] = seed();
            text = result.dump(2) + "\n";
        } else {
            if (!csv) throw mas::Error("csv output is not available for '" + command_name(path) + "'");
            text = "# command: " + command_name(path) + "\n";
            if (used_seed_) text += "# seed: " + std::to_string(seed()) + "\n";
            text += "# config: " + config.dump() + "\n" + *csv;
        }
        if (g.output.empty()) {
            std::cout << text;
            std::cout.flush();
            return;
        }
        std::ofstream out(g.output, std::ios::binary | std::ios::trunc);
        if (!out) throw mas::Error("cannot write " + g.output);
        out << text;
        if (!out) throw mas::Error("write failed: " + g.output);
    }

private:
    json file_ = json::object();
    bool used_seed_ = false;
};

// ---------------------------------------------------------------------------
// Finite embeddings

struct LoadedEmbedding {
    mas::EmbeddingMatrix matrix;
    json info;
};

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    return out;
}

std::size_t to_size(const std::string& s, const std::string& what)
{
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw mas::Error("bad " + what + ": '" + s + "'");
}

/// onehot:N, random:N:M, projection:N:K[:M], file:PATH, rows:JSON.
LoadedEmbedding load_embedding(const std::string& spec, Context& ctx)
{
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
    const auto parts = split(rest, ':');
    json info{{"spec", spec}, {"kind", kind}};
    auto matrix = [&]() -> mas::EmbeddingMatrix {
        if (kind == "onehot" && parts.size() == 1) return mas::onehot_mas(to_size(parts[0], "n"));
        if (kind == "random" && parts.size() == 2) {
            const std::size_t n = to_size(parts[0], "n"), m = to_size(parts[1], "m");
            mas::Rng rng = mas::Rng::stream(ctx.seed(), 0x656d62);
            std::vector<double> w(n * m);
            for (double& v : w) v = rng.uniform();
            return mas::EmbeddingMatrix(m, n, std::move(w));
        }
        if (kind == "projection" && (parts.size() == 2 || parts.size() == 3)) {
            const std::size_t n = to_size(parts[0], "n"), k = to_size(parts[1], "k");
            const std::size_t m = parts.size() == 3 ? to_size(parts[2], "m") : mas::projection_rows(n, k);
            auto res = mas::random_projection_mas(n, k, m, ctx.seed(), 20);
            info["attempts"] = res.attempts;
            return std::move(res.matrix);
        }
        if (kind == "file" && !rest.empty())
            return mas::embedding_from_json(parse_json_arg(read_file(rest), rest));
        if (kind == "rows" && !rest.empty()) return mas::embedding_from_json(parse_json_arg(rest, "embedding rows"));
        throw mas::Error("bad embedding spec '" + spec +
                         "' (expected onehot:N, random:N:M, projection:N:K[:M], file:PATH or rows:JSON)");
    }();
    info["n"] = matrix.n();
    info["m"] = matrix.m();
    return {std::move(matrix), std::move(info)};
}

mas::Multiset parse_elements(const std::string& text, std::size_t n)
{
    std::vector<mas::Element> elems;
    for (const auto& tok : split(text, ','))
        if (!tok.empty()) elems.push_back(static_cast<mas::Element>(to_size(tok, "element")));
    return mas::Multiset::from_elements(n, elems);
}

json pair_json(const mas::EmbeddingMatrix& e, const mas::MultisetPair& p)
{
    return {{"S", mas::to_json(p.first)},
            {"T", mas::to_json(p.second)},
            {"F_S", e.evaluate(p.first)},
            {"F_T", e.evaluate(p.second)},
            {"S_subset_T", mas::is_subset(p.first, p.second)}};
}

// ---------------------------------------------------------------------------
// Containment data

mas::SyntheticSpec synthetic_from(const json& j, std::uint64_t seed)
{
    mas::SyntheticSpec s;
    s.num_pairs = j.value("num_pairs", s.num_pairs);
    s.s_size = j.value("s_size", s.s_size);
    s.t_size = j.value("t_size", s.t_size);
    s.d = j.value("d", s.d);
    s.noise_std = j.value("noise_std", s.noise_std);
    s.pos_ratio = j.value("pos_ratio", s.pos_ratio);
    s.seed = seed;
    return s;
}

json to_json(const mas::SyntheticSpec& s)
{
    return {{"num_pairs", s.num_pairs}, {"s_size", s.s_size},       {"t_size", s.t_size},
            {"d", s.d},                 {"noise_std", s.noise_std}, {"pos_ratio", s.pos_ratio}};
}

mas::MasNet load_checkpoint(const std::string& path)
{
    if (path.empty()) throw mas::Error("--checkpoint is required");
    return mas::MasNet::from_json(parse_json_arg(read_file(path), path));
}

mas::Corpus read_corpus(const std::string& path)
{
    mas::Corpus corpus;
    for (const auto& row : read_jsonl(path)) {
        if (!row.contains("id") || !row.contains("T")) throw mas::Error(path + ": corpus rows need \"id\" and \"T\"");
        corpus.emplace_back(row.at("id").get<std::string>(), mas::real_multiset_from_json(row.at("T")));
    }
    return corpus;
}

std::string hits_csv(const std::vector<std::pair<std::string, std::vector<mas::QueryHit>>>& results)
{
    std::string out = "query,id,margin\n";
    for (const auto& [q, hits] : results)
        for (const auto& h : hits) out += q + "," + h.id + "," + mas::format_double(h.margin) + "\n";
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"mas: monotone and separating multiset embeddings"};
    app.require_subcommand(1);
    app.fallthrough();
    Context ctx;
    app.add_option("--seed", ctx.g.seed, "RNG seed (else config 'seed', else MAS_SEED, else 0)");
    app.add_option("--threads", ctx.g.threads, "worker threads")->capture_default_str();
    app.add_option("--output,-o", ctx.g.output, "write the result here instead of stdout");
    app.add_option("--format", ctx.g.format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}))
        ->capture_default_str();
    app.add_option("--config", ctx.g.config, "TOML file; the table named after the command supplies defaults")
        ->check(CLI::ExistingFile);

    std::function<void()> run;

    // verify ---------------------------------------------------------------
    struct {
        std::optional<std::string> embedding;
        std::optional<std::size_t> k;
        std::optional<double> slack;
    } verify;
    auto* verify_cmd = app.add_subcommand(
        "verify", "Exhaustive check that a linear embedding is monotone and separating on multisets of size <= k");
    verify_cmd->add_option("--embedding", verify.embedding, "onehot:N | random:N:M | projection:N:K[:M] | file:PATH");
    verify_cmd->add_option("--k", verify.k, "maximum multiset cardinality");
    verify_cmd->add_option("--slack", verify.slack, "tolerance for monotonicity comparisons");
    verify_cmd->callback([&] {
        run = [&] {
            const std::vector<std::string> path{"verify"};
            json flags = json::object();
            set_if(flags, "embedding", verify.embedding);
            set_if(flags, "k", verify.k);
            set_if(flags, "slack", verify.slack);
            json cfg{{"embedding", "onehot:2"}, {"k", 1}, {"slack", 0.0}};
            mas::merge_json(cfg, ctx.settings(path, flags));
            const auto emb = load_embedding(cfg.at("embedding").get<std::string>(), ctx);
            mas::VerifyOptions opts;
            opts.slack = cfg.at("slack").get<double>();
            const auto k = cfg.at("k").get<std::size_t>();
            json result = mas::to_json(mas::verify_mas(emb.matrix, k, opts));
            result["embedding"] = emb.info;
            result["multisets"] = mas::multiset_count(emb.matrix.n(), k);
            ctx.emit(path, result, cfg);
        };
    });

    // refute ---------------------------------------------------------------
    struct {
        std::optional<std::string> embedding;
        std::optional<std::size_t> k;
        std::optional<std::string> method;
    } refute;
    auto* refute_cmd = app.add_subcommand(
        "refute", "Search for a witness that an embedding is not a MAS (maximal-singleton or Erdos-Szekeres argument)");
    refute_cmd->add_option("--embedding", refute.embedding, "embedding spec, as for verify");
    refute_cmd->add_option("--k", refute.k, "maximum multiset cardinality");
    refute_cmd->add_option("--method", refute.method, "erdos-szekeres | maximal-singleton | auto")
        ->check(CLI::IsMember({"erdos-szekeres", "maximal-singleton", "auto"}));
    refute_cmd->callback([&] {
        run = [&] {
            const std::vector<std::string> path{"refute"};
            json flags = json::object();
            set_if(flags, "embedding", refute.embedding);
            set_if(flags, "k", refute.k);
            set_if(flags, "method", refute.method);
            json cfg{{"embedding", "onehot:2"}, {"k", 2}, {"method", "auto"}};
            mas::merge_json(cfg, ctx.settings(path, flags));
            const auto emb = load_embedding(cfg.at("embedding").get<std::string>(), ctx);
            const auto method = cfg.at("method").get<std::string>();
            const auto k = cfg.at("k").get<std::size_t>();
            std::optional<mas::MultisetPair> witness;
            std::string used = "none";
            if (method == "maximal-singleton" || method == "auto") {
                witness = mas::refute_maximal_singleton(emb.matrix, k);
                if (witness) used = "maximal-singleton";
            }
            if (!witness && (method == "erdos-szekeres" || method == "auto")) {
                witness = mas::refute_erdos_szekeres(emb.matrix);
                if (witness) used = "erdos-szekeres";
            }
            json result{{"embedding", emb.info}, {"refuted", witness.has_value()}, {"method_used", used}};
            result["witness"] = witness ? pair_json(emb.matrix, *witness) : json(nullptr);
            ctx.emit(path, result, cfg);
        };
    });

    // embed ----------------------------------------------------------------
    struct {
        std::optional<std::string> embedding;
        std::optional<std::string> multiset;
        std::optional<std::string> checkpoint;
        std::optional<std::string> set;
    } embed;
    auto* embed_cmd =
        app.add_subcommand("embed", "Print an embedding matrix, or evaluate an embedding on one multiset");
    embed_cmd->add_option("--embedding", embed.embedding, "finite embedding spec, as for verify");
    embed_cmd->add_option("--multiset", embed.multiset, "comma-separated elements, e.g. 0,0,2");
    embed_cmd->add_option("--checkpoint", embed.checkpoint, "MasNet checkpoint (instead of --embedding)");
    embed_cmd->add_option("--set", embed.set, "real multiset as JSON [[x,...],...] for --checkpoint");
    embed_cmd->callback([&] {
        run = [&] {
            const std::vector<std::string> path{"embed"};
            json flags = json::object();
            set_if(flags, "embedding", embed.embedding);
            set_if(flags, "multiset", embed.multiset);
            set_if(flags, "checkpoint", embed.checkpoint);
            set_if(flags, "set", embed.set);
            const json cfg = ctx.settings(path, flags);
            json result;
            if (cfg.contains("checkpoint")) {
                const auto model = load_checkpoint(cfg.at("checkpoint").get<std::string>());
                if (!cfg.contains("set")) throw mas::Error("--set is required with --checkpoint");
                const auto s = mas::real_multiset_from_json(parse_json_arg(cfg.at("set").get<std::string>(), "--set"),
                                                            model.d());
                result = {{"model_ref", hex64(model.fingerprint())}, {"F", model.forward(s)}};
            } else {
                const auto emb = load_embedding(cfg.value("embedding", std::string("onehot:2")), ctx);
                result = {{"embedding", emb.info}, {"matrix", mas::to_json(emb.matrix)}};
                if (cfg.contains("multiset")) {
                    const auto s = parse_elements(cfg.at("multiset").get<std::string>(), emb.matrix.n());
                    result["multiset"] = mas::to_json(s);
                    result["F"] = emb.matrix.evaluate(s);
                }
            }
            ctx.emit(path, result, cfg);
        };
    });

    // distance -------------------------------------------------------------
    struct {
        std::optional<std::string> s, t, pairs;
        std::optional<std::size_t> k;
    } dist;
    auto* dist_cmd = app.add_subcommand(
        "distance", "Assignment distance d_AS and padded Wasserstein W_k between real multisets");
    dist_cmd->add_option("--s", dist.s, "S as JSON [[x,...],...]");
    dist_cmd->add_option("--t", dist.t, "T as JSON [[x,...],...]");
    dist_cmd->add_option("--pairs", dist.pairs, "JSONL file of {\"S\":...,\"T\":...}");
    dist_cmd->add_option("--k", dist.k, "padding size for W_k (default max(|S|,|T|))");
    dist_cmd->callback([&] {
        run = [&] {
            const std::vector<std::string> path{"distance"};
            json flags = json::object();
            set_if(flags, "s", dist.s);
            set_if(flags, "t", dist.t);
            set_if(flags, "pairs", dist.pairs);
            set_if(flags, "k", dist.k);
            const json cfg = ctx.settings(path, flags);
            std::vector<std::pair<mas::RealMultiset, mas::RealMultiset>> pairs;
            if (cfg.contains("pairs")) {
                for (const auto& row : read_jsonl(cfg.at("pairs").get<std::string>())) {
                    auto s = mas::real_multiset_from_json(row.at("S"));
                    auto t = mas::real_multiset_from_json(row.at("T"), s.dim());
                    pairs.emplace_back(std::move(s), std::move(t));
                }
            } else {
                if (!cfg.contains("s") || !cfg.contains("t")) throw mas::Error("need --s and --t, or --pairs");
                auto s = mas::real_multiset_from_json(parse_json_arg(cfg.at("s").get<std::string>(), "--s"));
                auto t = mas::real_multiset_from_json(parse_json_arg(cfg.at("t").get<std::string>(), "--t"), s.dim());
                pairs.emplace_back(std::move(s), std::move(t));
            }
            const auto d = mas::d_as_batch(pairs);
            json rows = json::array();
            std::string csv = "pair,d_as,k,w_k\n";
            for (std::size_t i = 0; i < pairs.size(); ++i) {
                const auto& [s, t] = pairs[i];
                const std::size_t k = cfg.value("k", std::max(s.size(), t.size()));
                const double w = mas::padded_wasserstein_k(s, t, k);
                rows.push_back({{"d_as", d[i]}, {"k", k}, {"w_k", w}});
                csv += std::to_string(i) + "," + mas::format_double(d[i]) + "," + std::to_string(k) + "," +
                       mas::format_double(w) + "\n";
            }
            json result = cfg.contains("pairs") ? json{{"pairs", rows}} : rows[0];
            ctx.emit(path, result, cfg, &csv);
        };
    });

    // separation experiments ----------------------------------------------
    struct {
        std::optional<std::size_t> k, num_pairs, draws, s_size, controls, dim;
        std::optional<std::vector<std::size_t>> m_list;
        std::optional<double> eps_min, eps_max;
        std::optional<std::string> scenario, activation, config_json;
        bool sweep = false;
    } exp;
    auto add_experiment = [&](const std::string& name, const std::string& help) {
        auto* cmd = app.add_subcommand(name, help);
        cmd->add_option("--experiment", exp.config_json, "experiment config as a JSON object");
        cmd->add_option("--k", exp.k, "multiset size bound");
        cmd->add_option("--num-pairs", exp.num_pairs, "random (S, T) pairs");
        cmd->add_option("--draws", exp.draws, "parameter draws per pair");
        cmd->add_option("--m-list", exp.m_list, "embedding dimensions")->delimiter(',');
        cmd->add_option("--eps-min", exp.eps_min, "smallest displacement");
        cmd->add_option("--eps-max", exp.eps_max, "largest displacement");
        cmd->add_option("--s-size", exp.s_size, "|S| before displacement (0 = random)");
        cmd->add_option("--controls", exp.controls, "extra pairs with S a sub-multiset of T");
        cmd->add_option("--dim", exp.dim, "ground dimension");
        cmd->add_option("--scenario", exp.scenario, "hat_cube | relu_sphere");
        cmd->add_option("--activation", exp.activation, "activation name (tri, relu, hat, scaled_hat)");
        cmd->add_flag("--sweep", exp.sweep, "reuse pair 0's base and vary only the displacement");
        return cmd;
    };
    auto experiment_config = [&](const std::vector<std::string>& path) {
        json flags = exp.config_json ? parse_json_arg(*exp.config_json, "--experiment") : json::object();
        if (!flags.is_object()) throw mas::Error("--experiment must be a JSON object");
        set_if(flags, "k", exp.k);
        set_if(flags, "num_pairs", exp.num_pairs);
        set_if(flags, "num_param_draws", exp.draws);
        set_if(flags, "m_list", exp.m_list);
        set_if(flags, "eps_min", exp.eps_min);
        set_if(flags, "eps_max", exp.eps_max);
        set_if(flags, "s_size", exp.s_size);
        set_if(flags, "num_controls", exp.controls);
        set_if(flags, "scenario", exp.scenario);
        set_flag(flags, "sweep", exp.sweep);
        if (exp.activation) flags["activation"] = mas::to_json(mas::activation_from_name(*exp.activation));
        if (exp.dim) flags["ground"] = {{"dim", *exp.dim}};
        json merged = ctx.settings(path, flags);
        merged.erase("seed");
        auto cfg = mas::experiment_config_from_json(merged);
        cfg.seed = ctx.seed();
        cfg.validate();
        return cfg;
    };
    add_experiment("separation-experiment",
                   "Monte Carlo separation rate of random hat embeddings versus dimension m")
        ->callback([&] {
            run = [&] {
                const std::vector<std::string> path{"separation-experiment"};
                const auto cfg = experiment_config(path);
                const auto report = mas::run_separation_experiment(cfg);
                const auto csv = report.to_csv();
                ctx.emit(path, report.to_json(), mas::to_json(cfg), &csv);
            };
        });
    add_experiment("holder", "Lower Holder bound: expected positive-part gap versus squared assignment distance")
        ->callback([&] {
            run = [&] {
                const std::vector<std::string> path{"holder"};
                const auto cfg = experiment_config(path);
                const auto report = cfg.scenario == mas::Scenario::relu_sphere ? mas::run_sphere_relu_experiment(cfg)
                                                                               : mas::run_holder_experiment(cfg);
                const auto csv = report.to_csv();
                ctx.emit(path, report.to_json(), mas::to_json(report.raw.config), &csv);
            };
        });
    add_experiment("lipschitz", "Upper Lipschitz bound: expected embedding gap versus padded Wasserstein distance")
        ->callback([&] {
            run = [&] {
                const std::vector<std::string> path{"lipschitz"};
                const auto cfg = experiment_config(path);
                const auto report = mas::run_lipschitz_experiment(cfg);
                const auto csv = report.to_csv();
                ctx.emit(path, report.to_json(), mas::to_json(report.raw.config), &csv);
            };
        });

    // train / eval ---------------------------------------------------------
    struct {
        std::optional<std::string> data, save, checkpoint, variant, optimizer, loss_form, split;
        std::optional<std::size_t> num_pairs, s_size, t_size, d, m, hidden_width, epochs, batch_size, patience;
        std::optional<double> noise_std, pos_ratio, lr, lr_final, delta, delta_eval;
    } tr;
    auto add_data_options = [&](CLI::App* cmd) {
        cmd->add_option("--data", tr.data, "JSONL containment pairs (default: synthetic)");
        cmd->add_option("--num-pairs", tr.num_pairs, "synthetic pairs");
        cmd->add_option("--s-size", tr.s_size, "synthetic |S|");
        cmd->add_option("--t-size", tr.t_size, "synthetic |T|");
        cmd->add_option("--d", tr.d, "synthetic point dimension");
        cmd->add_option("--noise-std", tr.noise_std, "synthetic noise on positives");
        cmd->add_option("--pos-ratio", tr.pos_ratio, "synthetic positive fraction");
    };
    auto data_flags = [&] {
        json j = json::object();
        set_if(j, "data", tr.data);
        json syn = json::object();
        set_if(syn, "num_pairs", tr.num_pairs);
        set_if(syn, "s_size", tr.s_size);
        set_if(syn, "t_size", tr.t_size);
        set_if(syn, "d", tr.d);
        set_if(syn, "noise_std", tr.noise_std);
        set_if(syn, "pos_ratio", tr.pos_ratio);
        if (!syn.empty()) j["synthetic"] = syn;
        return j;
    };
    // Returns the pairs and records the data source in `eff`.
    auto load_pairs = [&](const json& cfg, json& eff) {
        if (cfg.contains("data")) {
            eff["data"] = cfg.at("data");
            return mas::pairs_from_jsonl(read_file(cfg.at("data").get<std::string>()));
        }
        const auto spec = synthetic_from(cfg.value("synthetic", json::object()), ctx.seed());
        eff["synthetic"] = to_json(spec);
        return mas::generate_synthetic(spec);
    };

    auto* train_cmd = app.add_subcommand(
        "train", "Train a MAS network on containment pairs with the hinge loss and early stopping on dev accuracy");
    add_data_options(train_cmd);
    train_cmd->add_option("--variant", tr.variant, "relu_mas | hat_mas | tri_mas");
    train_cmd->add_option("--m", tr.m, "embedding dimension");
    train_cmd->add_option("--hidden-width", tr.hidden_width, "hidden layer width (0 = 4m)");
    train_cmd->add_option("--epochs", tr.epochs, "epochs");
    train_cmd->add_option("--batch-size", tr.batch_size, "mini-batch size");
    train_cmd->add_option("--lr", tr.lr, "learning rate");
    train_cmd->add_option("--lr-final", tr.lr_final, "final learning rate as a fraction of --lr");
    train_cmd->add_option("--delta", tr.delta, "hinge margin");
    train_cmd->add_option("--delta-eval", tr.delta_eval, "evaluation slack");
    train_cmd->add_option("--optimizer", tr.optimizer, "adam | sgd");
    train_cmd->add_option("--patience", tr.patience, "early-stopping patience in epochs");
    train_cmd->add_option("--loss-form", tr.loss_form, "separating | display");
    train_cmd->add_option("--save", tr.save, "write the best checkpoint here");
    train_cmd->callback([&] {
        run = [&] {
            const std::vector<std::string> path{"train"};
            json flags = data_flags();
            set_if(flags, "save", tr.save);
            json model_flags = json::object();
            set_if(model_flags, "variant", tr.variant);
            set_if(model_flags, "m", tr.m);
            set_if(model_flags, "hidden_width", tr.hidden_width);
            if (!model_flags.empty()) flags["model"] = model_flags;
            json train_flags = json::object();
            set_if(train_flags, "epochs", tr.epochs);
            set_if(train_flags, "batch_size", tr.batch_size);
            set_if(train_flags, "lr", tr.lr);
            set_if(train_flags, "lr_final", tr.lr_final);
            set_if(train_flags, "delta", tr.delta);
            set_if(train_flags, "delta_eval", tr.delta_eval);
            set_if(train_flags, "optimizer", tr.optimizer);
            set_if(train_flags, "patience", tr.patience);
            set_if(train_flags, "loss_form", tr.loss_form);
            if (!train_flags.empty()) flags["train"] = train_flags;
            const json cfg = ctx.settings(path, flags);

            json eff = json::object();
            const auto pairs = load_pairs(cfg, eff);
            if (pairs.empty()) throw mas::Error("no training data");
            const auto splits = mas::split_dataset(pairs);

            const json mj = cfg.value("model", json::object());
            const auto variant = mas::variant_from_name(mj.value("variant", std::string("hat_mas")));
            const std::size_t m = mj.value("m", std::size_t{64});
            const std::size_t hidden = mj.value("hidden_width", std::size_t{0});
            const auto seed = ctx.seed();
            json tj = cfg.value("train", json::object());
            tj.erase("seed");
            auto tc = mas::train_config_from_json(tj);
            tc.seed = seed;
            tc.validate();
            eff["model"] = {{"variant", mas::to_string(variant)}, {"m", m}, {"hidden_width", hidden}};
            eff["train"] = mas::to_json(tc);

            mas::MasNet init(mas::MasNetConfig::for_variant(variant, pairs.front().s.dim(), m, hidden), seed);
            const auto res = mas::train(std::move(init), splits.train, splits.dev, tc);
            json history = json::array();
            std::string csv = "epoch,train_loss,dev_loss,dev_accuracy\n";
            for (const auto& r : res.history) {
                history.push_back(mas::to_json(r));
                csv += std::to_string(r.epoch) + "," + mas::format_double(r.train_loss) + "," +
                       mas::format_double(r.dev_loss) + "," + mas::format_double(r.dev_accuracy) + "\n";
            }
            const auto test = mas::evaluate_containment(res.model, splits.test, tc.delta_eval);
            json result{{"history", history},
                         {"best_epoch", res.best_epoch},
                         {"best_dev_accuracy", res.best_dev_accuracy},
                         {"test", mas::to_json(test)},
                         {"sizes", {{"train", splits.train.size()}, {"dev", splits.dev.size()}, {"test", splits.test.size()}}},
                         {"model_ref", hex64(res.model.fingerprint())}};
            if (cfg.contains("save")) {
                const auto out = cfg.at("save").get<std::string>();
                std::ofstream f(out, std::ios::trunc);
                if (!f) throw mas::Error("cannot write " + out);
                f << res.model.to_json().dump() << "\n";
                if (!f) throw mas::Error("write failed: " + out);
                eff["save"] = out;
                result["checkpoint"] = out;
            }
            ctx.emit(path, result, eff, &csv);
        };
    });

    auto* eval_cmd = app.add_subcommand("eval", "Containment confusion matrix of a trained checkpoint");
    add_data_options(eval_cmd);
    eval_cmd->add_option("--checkpoint", tr.checkpoint, "MasNet checkpoint");
    eval_cmd->add_option("--delta-eval", tr.delta_eval, "evaluation slack");
    eval_cmd->add_option("--split", tr.split, "all | train | dev | test")
        ->check(CLI::IsMember({"all", "train", "dev", "test"}));
    eval_cmd->callback([&] {
        run = [&] {
            const std::vector<std::string> path{"eval"};
            json flags = data_flags();
            set_if(flags, "checkpoint", tr.checkpoint);
            set_if(flags, "delta_eval", tr.delta_eval);
            set_if(flags, "split", tr.split);
            const json cfg = ctx.settings(path, flags);
            const auto model = load_checkpoint(cfg.value("checkpoint", std::string()));
            json eff{{"checkpoint", cfg.at("checkpoint")}};
            auto pairs = load_pairs(cfg, eff);
            const auto split = cfg.value("split", std::string("all"));
            const double delta_eval = cfg.value("delta_eval", 0.0);
            eff["split"] = split;
            eff["delta_eval"] = delta_eval;
            if (split != "all") {
                auto s = mas::split_dataset(pairs);
                pairs = split == "train" ? s.train : split == "dev" ? s.dev : s.test;
            }
            const auto c = mas::evaluate_containment(model, pairs, delta_eval);
            json result = mas::to_json(c);
            result["model_ref"] = hex64(model.fingerprint());
            const std::string csv = "tp,fp,tn,fn,accuracy\n" + std::to_string(c.tp) + "," + std::to_string(c.fp) + "," +
                                    std::to_string(c.tn) + "," + std::to_string(c.fn) + "," +
                                    mas::format_double(c.accuracy()) + "\n";
            ctx.emit(path, result, eff, &csv);
        };
    });

    // fit-monotone ---------------------------------------------------------
    struct {
        std::optional<std::string> target, output;
        std::optional<std::size_t> d, max_size, train_size, test_size, m, hidden_width, outer_width, epochs;
        std::optional<double> lr;
    } fit;
    auto* fit_cmd = app.add_subcommand(
        "fit-monotone", "Regress a monotone set function with a scalar MAS network and a monotone outer map");
    fit_cmd->add_option("--target", fit.target, "cardinality | constant | coverage | sum_of_max");
    fit_cmd->add_option("--output-activation", fit.output, "hat | relu | tri");
    fit_cmd->add_option("--d", fit.d, "point dimension");
    fit_cmd->add_option("--max-size", fit.max_size, "largest set size");
    fit_cmd->add_option("--train-size", fit.train_size, "training samples");
    fit_cmd->add_option("--test-size", fit.test_size, "test samples");
    fit_cmd->add_option("--m", fit.m, "embedding dimension");
    fit_cmd->add_option("--hidden-width", fit.hidden_width, "inner hidden width");
    fit_cmd->add_option("--outer-width", fit.outer_width, "outer hidden width");
    fit_cmd->add_option("--epochs", fit.epochs, "epochs");
    fit_cmd->add_option("--lr", fit.lr, "learning rate");
    fit_cmd->callback([&] {
        run = [&] {
            const std::vector<std::string> path{"fit-monotone"};
            json flags = json::object();
            set_if(flags, "target", fit.target);
            set_if(flags, "output", fit.output);
            set_if(flags, "d", fit.d);
            set_if(flags, "max_size", fit.max_size);
            set_if(flags, "train_size", fit.train_size);
            set_if(flags, "test_size", fit.test_size);
            set_if(flags, "m", fit.m);
            set_if(flags, "hidden_width", fit.hidden_width);
            set_if(flags, "outer_width", fit.outer_width);
            json train_flags = json::object();
            set_if(train_flags, "epochs", fit.epochs);
            set_if(train_flags, "lr", fit.lr);
            if (!train_flags.empty()) flags["train"] = train_flags;
            mas::TrainConfig base;
            base.lr = 1e-2;
            base.lr_final = 0.01;
            base.epochs = 150;
            json cfg{{"target", "cardinality"}, {"output", "hat"}, {"d", 2},         {"max_size", 10},
                     {"train_size", 2000},      {"test_size", 500}, {"m", 16},       {"hidden_width", 32},
                     {"outer_width", 32}};
            mas::merge_json(cfg, ctx.settings(path, flags));
            json tj = cfg.value("train", json::object());
            tj.erase("seed");
            auto tc = mas::train_config_from_json(tj, base);
            const auto seed = ctx.seed();
            tc.seed = seed;
            tc.validate();
            cfg["train"] = mas::to_json(tc);

            const std::size_t d = cfg.at("d").get<std::size_t>();
            const auto target =
                mas::MonotoneTarget::make(mas::target_kind_from_name(cfg.at("target").get<std::string>()), d, seed);
            const std::size_t max_size = cfg.at("max_size").get<std::size_t>();
            const auto train_set =
                mas::generate_regression(target, cfg.at("train_size").get<std::size_t>(), max_size, mas::mix64(seed ^ 1));
            const auto test_set =
                mas::generate_regression(target, cfg.at("test_size").get<std::size_t>(), max_size, mas::mix64(seed ^ 2));
            mas::MasNet model(
                mas::MasNetConfig::scalar(mas::output_kind_from_name(cfg.at("output").get<std::string>()), d,
                                          cfg.at("m").get<std::size_t>(), cfg.at("hidden_width").get<std::size_t>(),
                                          cfg.at("outer_width").get<std::size_t>()),
                seed);
            const auto res = mas::fit_monotone_function(std::move(model), train_set, test_set, tc);
            std::string csv = "epoch,loss\n";
            for (std::size_t i = 0; i < res.loss_history.size(); ++i)
                csv += std::to_string(i + 1) + "," + mas::format_double(res.loss_history[i]) + "\n";
            json result{{"train_mae", res.train_mae},
                        {"test_mae", res.test_mae},
                        {"loss_history", res.loss_history},
                        {"model_ref", hex64(res.model.fingerprint())}};
            ctx.emit(path, result, cfg, &csv);
        };
    });

    // index ----------------------------------------------------------------
    struct {
        std::optional<std::string> checkpoint, corpus, out, index, query, queries;
        std::optional<double> delta_eval, verify_tol;
        bool no_sets = false, timestamp = false, verify = false, audit = false;
    } ix;
    auto* index_cmd = app.add_subcommand("index", "Dominance index over target embeddings for sub-multiset retrieval");
    index_cmd->require_subcommand(1);
    auto* build_cmd = index_cmd->add_subcommand("build", "Embed a JSONL corpus of {\"id\",\"T\"} and write an index");
    build_cmd->add_option("--checkpoint", ix.checkpoint, "MasNet checkpoint");
    build_cmd->add_option("--corpus", ix.corpus, "JSONL corpus");
    build_cmd->add_option("--out", ix.out, "index file to write");
    build_cmd->add_option("--delta-eval", ix.delta_eval, "default query slack stored in the index");
    build_cmd->add_flag("--no-sets", ix.no_sets, "do not store target sets (disables --verify)");
    build_cmd->add_flag("--timestamp", ix.timestamp, "record the build time (makes output non-reproducible)");
    build_cmd->callback([&] {
        run = [&] {
            const std::vector<std::string> path{"index", "build"};
            json flags = json::object();
            set_if(flags, "checkpoint", ix.checkpoint);
            set_if(flags, "corpus", ix.corpus);
            set_if(flags, "out", ix.out);
            set_if(flags, "delta_eval", ix.delta_eval);
            set_flag(flags, "no_sets", ix.no_sets);
            set_flag(flags, "timestamp", ix.timestamp);
            json cfg{{"delta_eval", 0.0}, {"no_sets", false}, {"timestamp", false}};
            mas::merge_json(cfg, ctx.settings(path, flags));
            if (!cfg.contains("corpus") || !cfg.contains("out")) throw mas::Error("--corpus and --out are required");
            const auto model = load_checkpoint(cfg.value("checkpoint", std::string()));
            mas::BuildOptions opts;
            opts.store_sets = !cfg.at("no_sets").get<bool>();
            opts.delta_eval = cfg.at("delta_eval").get<double>();
            if (cfg.at("timestamp").get<bool>())
                opts.build_time = std::chrono::duration_cast<std::chrono::seconds>(
                                      std::chrono::system_clock::now().time_since_epoch())
                                      .count();
            const auto idx = mas::ContainmentIndex::build(model, read_corpus(cfg.at("corpus").get<std::string>()), opts);
            idx.save(cfg.at("out").get<std::string>());
            json head = idx.header();
            head.erase("entries");
            ctx.emit(path, {{"index", head}, {"path", cfg.at("out")}}, cfg);
        };
    });
    auto* query_cmd = index_cmd->add_subcommand("query", "Targets T with F(S) <= F(T) + delta_eval, best margin first");
    query_cmd->add_option("--index", ix.index, "index file");
    query_cmd->add_option("--checkpoint", ix.checkpoint, "the checkpoint the index was built with");
    query_cmd->add_option("--query", ix.query, "S as JSON [[x,...],...]");
    query_cmd->add_option("--queries", ix.queries, "JSONL of {\"id\",\"S\"}");
    query_cmd->add_option("--delta-eval", ix.delta_eval, "slack (default: the index's)");
    query_cmd->add_flag("--verify", ix.verify, "drop hits that are not exact sub-multisets");
    query_cmd->add_option("--verify-tol", ix.verify_tol, "point-matching tolerance for --verify");
    query_cmd->add_flag("--audit", ix.audit, "raise if any stored set contains S but was missed");
    query_cmd->callback([&] {
        run = [&] {
            const std::vector<std::string> path{"index", "query"};
            json flags = json::object();
            set_if(flags, "index", ix.index);
            set_if(flags, "checkpoint", ix.checkpoint);
            set_if(flags, "query", ix.query);
            set_if(flags, "queries", ix.queries);
            set_if(flags, "delta_eval", ix.delta_eval);
            set_if(flags, "verify_tol", ix.verify_tol);
            set_flag(flags, "verify", ix.verify);
            set_flag(flags, "audit", ix.audit);
            json cfg{{"verify", false}, {"audit", false}, {"verify_tol", 0.0}};
            mas::merge_json(cfg, ctx.settings(path, flags));
            if (!cfg.contains("index")) throw mas::Error("--index is required");
            const auto idx = mas::ContainmentIndex::load(cfg.at("index").get<std::string>());
            const auto model = load_checkpoint(cfg.value("checkpoint", std::string()));
            mas::QueryOptions opts;
            opts.delta_eval = cfg.value("delta_eval", idx.metadata().delta_eval);
            opts.verify = cfg.at("verify").get<bool>();
            opts.verify_tol = cfg.at("verify_tol").get<double>();
            opts.audit = cfg.at("audit").get<bool>();
            cfg["delta_eval"] = opts.delta_eval;

            std::vector<std::string> ids;
            std::vector<mas::RealMultiset> queries;
            if (cfg.contains("queries")) {
                std::size_t i = 0;
                for (const auto& row : read_jsonl(cfg.at("queries").get<std::string>())) {
                    ids.push_back(row.contains("id") ? row.at("id").get<std::string>() : "q" + std::to_string(i));
                    queries.push_back(mas::real_multiset_from_json(row.at("S"), idx.metadata().d));
                    ++i;
                }
            } else if (cfg.contains("query")) {
                ids.push_back("q0");
                queries.push_back(mas::real_multiset_from_json(
                    parse_json_arg(cfg.at("query").get<std::string>(), "--query"), idx.metadata().d));
            } else {
                throw mas::Error("need --query or --queries");
            }
            const auto hits = idx.query_batch(model, queries, opts);
            std::vector<std::pair<std::string, std::vector<mas::QueryHit>>> named;
            json results = json::array();
            for (std::size_t i = 0; i < hits.size(); ++i) {
                named.emplace_back(ids[i], hits[i]);
                results.push_back({{"query", ids[i]}, {"hits", mas::to_json(hits[i])}, {"count", hits[i].size()}});
            }
            const auto csv = hits_csv(named);
            json result = cfg.contains("queries") ? json{{"results", results}} : results[0];
            ctx.emit(path, result, cfg, &csv);
        };
    });

    // bounds ---------------------------------------------------------------
    struct {
        std::optional<std::uint64_t> n, k;
    } bd;
    auto* bounds_cmd = app.add_subcommand(
        "bounds", "Upper and lower bounds on the smallest MAS dimension for multisets of size <= k over n elements");
    bounds_cmd->add_option("--n", bd.n, "ground set size (omit for infinite)");
    bounds_cmd->add_option("--k", bd.k, "cardinality bound (omit for unbounded)");
    bounds_cmd->callback([&] {
        run = [&] {
            const std::vector<std::string> path{"bounds"};
            json flags = json::object();
            set_if(flags, "n", bd.n);
            set_if(flags, "k", bd.k);
            const json cfg = ctx.settings(path, flags);
            std::optional<std::uint64_t> n, k;
            if (cfg.contains("n")) n = cfg.at("n").get<std::uint64_t>();
            if (cfg.contains("k")) k = cfg.at("k").get<std::uint64_t>();
            json eff{{"n", n ? json(*n) : json(nullptr)}, {"k", k ? json(*k) : json(nullptr)}};
            ctx.emit(path, mas::to_json(mas::dimension_bounds(n, k)), eff);
        };
    });

    // demo -----------------------------------------------------------------
    struct {
        std::optional<std::size_t> d, points;
        std::optional<std::uint64_t> draws;
        std::optional<std::vector<double>> x, y;
    } demo;
    auto* demo_cmd = app.add_subcommand("demo", "Small constructions behind the main results");
    demo_cmd->require_subcommand(1);

    auto* midpoint_cmd = demo_cmd->add_subcommand(
        "midpoint", "S = {(x+y)/2} is not in T = {x,y}: ReLU coordinates never separate it, hat coordinates do");
    midpoint_cmd->alias("prop6");
    midpoint_cmd->add_option("--d", demo.d, "dimension");
    midpoint_cmd->add_option("--draws", demo.draws, "random coordinates per family");
    midpoint_cmd->add_option("--x", demo.x, "point x (comma-separated)")->delimiter(',');
    midpoint_cmd->add_option("--y", demo.y, "point y (comma-separated)")->delimiter(',');
    midpoint_cmd->callback([&] {
        run = [&] {
            const std::vector<std::string> path{"demo", "midpoint"};
            json flags = json::object();
            set_if(flags, "d", demo.d);
            set_if(flags, "draws", demo.draws);
            set_if(flags, "x", demo.x);
            set_if(flags, "y", demo.y);
            json cfg{{"d", 2}, {"draws", 10000}};
            mas::merge_json(cfg, ctx.settings(path, flags));
            const auto seed = ctx.seed();
            std::vector<double> x, y;
            if (cfg.contains("x") && cfg.contains("y")) {
                x = cfg.at("x").get<std::vector<double>>();
                y = cfg.at("y").get<std::vector<double>>();
                cfg["d"] = x.size();
            } else {
                const std::size_t d = cfg.at("d").get<std::size_t>();
                mas::Rng rng = mas::Rng::stream(seed, 0x6d6964);
                for (std::size_t i = 0; i < d; ++i) x.push_back(rng.normal());
                for (std::size_t i = 0; i < d; ++i) y.push_back(rng.normal());
            }
            const auto [s, t] = mas::midpoint_witness(x, y);
            const auto draws = cfg.at("draws").get<std::uint64_t>();
            mas::SampleOptions relu;
            relu.activation = mas::Activation::relu();
            relu.unit_c = true;
            const mas::SampleOptions hat;
            const auto relu_hits = mas::count_separations(s, t, draws, mas::mix64(seed ^ 1), relu);
            const auto hat_hits = mas::count_separations(s, t, draws, mas::mix64(seed ^ 2), hat);
            ctx.emit(path,
                     {{"S", mas::to_json(s)},
                      {"T", mas::to_json(t)},
                      {"draws", draws},
                      {"relu_separations", relu_hits},
                      {"hat_separations", hat_hits}},
                     cfg);
        };
    });

    auto* attention_cmd = demo_cmd->add_subcommand(
        "attention", "Sum-pooled self-attention is not monotone: adding the zero point to {x} lowers a coordinate");
    attention_cmd->alias("prop7");
    attention_cmd->add_option("--d", demo.d, "dimension");
    attention_cmd->callback([&] {
        run = [&] {
            const std::vector<std::string> path{"demo", "attention"};
            json flags = json::object();
            set_if(flags, "d", demo.d);
            json cfg{{"d", 2}};
            mas::merge_json(cfg, ctx.settings(path, flags));
            const auto r = mas::set_transformer_nonmonotone_demo(cfg.at("d").get<std::size_t>(), ctx.seed());
            json result = mas::to_json(r);
            result["monotonicity_violated"] = r.ft < r.fs;
            ctx.emit(path, result, cfg);
        };
    });

    auto* tri_cmd = demo_cmd->add_subcommand(
        "tri-identity", "TRI(x) equals its three-ReLU expression on a dyadic grid over [-1, 2]");
    tri_cmd->callback([&] {
        run = [&] {
            const std::vector<std::string> path{"demo", "tri-identity"};
            std::vector<double> grid;
            for (int k = -1024; k <= 2048; ++k) grid.push_back(k / 1024.0);
            ctx.emit(path,
                     {{"grid_points", grid.size()}, {"max_abs_deviation", mas::tri_relu_identity_check(grid)}},
                     ctx.section(path));
        };
    });

    auto* k1_cmd = demo_cmd->add_subcommand(
        "k1", "Two-dimensional MAS for multisets of size <= 1 over [-1, 1], checked on a grid");
    k1_cmd->add_option("--points", demo.points, "grid points on [-1, 1]");
    k1_cmd->callback([&] {
        run = [&] {
            const std::vector<std::string> path{"demo", "k1"};
            json flags = json::object();
            set_if(flags, "points", demo.points);
            json cfg{{"points", 21}};
            mas::merge_json(cfg, ctx.settings(path, flags));
            const std::size_t points = cfg.at("points").get<std::size_t>();
            if (points < 2) throw mas::Error("--points must be at least 2");
            std::vector<std::optional<double>> sets{std::nullopt};
            for (std::size_t i = 0; i < points; ++i)
                sets.push_back(-1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(points - 1));
            std::uint64_t checked = 0, violations = 0;
            for (const auto& s : sets) {
                const auto fs = mas::degenerate_k1_embedding(s);
                for (const auto& t : sets) {
                    const auto ft = mas::degenerate_k1_embedding(t);
                    const bool subset = !s || (t && *s == *t);
                    const bool dominated = fs[0] <= ft[0] && fs[1] <= ft[1];
                    ++checked;
                    if (subset != dominated) ++violations;
                }
            }
            ctx.emit(path, {{"pairs_checked", checked}, {"violations", violations}, {"is_mas", violations == 0}},
                     cfg);
        };
    });

    try {
        app.parse(argc, argv);
        ctx.load();
        run();
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << json{{"error", e.what()}, {"kind", "usage"}}.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", e.what()}}.dump() << "\n";
        return 1;
    }
    return 0;
}
