#include "scar/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "scar/error.hpp"
#include "scar/jsonl.hpp"
#include "scar/parallel.hpp"
#include "scar/rng.hpp"
#include "scar/stylometry.hpp"

namespace scar {

std::vector<std::string> SelectionManifest::selected_ids() const {
    std::vector<std::string> ids;
    for (const auto& item : items) {
        if (item.selected) ids.push_back(item.id);
    }
    return ids;
}

std::string SelectionManifest::to_jsonl() const {
    std::string out;
    nlohmann::ordered_json header;
    header["method"] = method;
    header["k_percent"] = k_percent;
    header["count"] = count;
    header["config_hash"] = config_hash;
    out += header.dump();
    out += '\n';
    for (const auto& item : items) {
        nlohmann::ordered_json line;
        line["id"] = item.id;
        line["score"] = item.score;
        line["rank"] = item.rank;
        line["selected"] = item.selected;
        out += line.dump();
        out += '\n';
    }
    return out;
}

void SelectionManifest::write(const std::filesystem::path& path) const {
    jsonl::write_file(path, to_jsonl());
}

std::size_t selection_count(std::size_t n, double k_percent) {
    if (!(k_percent > 0.0) || k_percent > 100.0) {
        fail(ErrorKind::argument, "k must be in (0, 100], got " + std::to_string(k_percent));
    }
    const double raw = std::floor(k_percent * static_cast<double>(n) / 100.0);
    return std::clamp<std::size_t>(static_cast<std::size_t>(raw), 1, n);
}

SelectionManifest select_top_k(const ScoreMap& scores, double k_percent, std::string method,
                               std::string config_hash) {
    if (scores.empty()) fail(ErrorKind::argument, "select_top_k: no scores");
    SelectionManifest m;
    m.method = std::move(method);
    m.k_percent = k_percent;
    m.count = selection_count(scores.size(), k_percent);
    m.config_hash = std::move(config_hash);
    m.items.reserve(scores.size());
    for (const auto& [id, s] : scores) {
        if (std::isnan(s)) fail(ErrorKind::validation, "score for '" + id + "' is NaN");
        m.items.push_back({id, s, 0, false});
    }
    // The map is already id-ascending, so a stable sort on score keeps the tie-break.
    std::stable_sort(m.items.begin(), m.items.end(),
                     [](const ScoredExample& a, const ScoredExample& b) { return a.score > b.score; });
    for (std::size_t i = 0; i < m.items.size(); ++i) {
        m.items[i].rank = i + 1;
        m.items[i].selected = i < m.count;
    }
    return m;
}

ScoreMap score_dataset(const RankerParams& params, const EmbeddingStore& store, const Dataset& ds,
                       std::size_t threads) {
    std::vector<std::string> missing;
    for (const auto& ex : ds.records) {
        if (!store.contains(text_key(ex.id, Role::instruction)) ||
            !store.contains(text_key(ex.id, Role::response))) {
            missing.push_back(ex.id);
        }
    }
    if (!missing.empty()) {
        std::string msg = "missing embeddings for " + std::to_string(missing.size()) + " examples:";
        for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg += " " + missing[i];
        if (missing.size() > 10) msg += " ...";
        fail(ErrorKind::lookup, msg);
    }
    std::vector<double> values(ds.size());
    parallel_for(ds.size(), threads,
                 [&](std::size_t i) { values[i] = score_example(params, store, ds.records[i].id); });
    ScoreMap out;
    for (std::size_t i = 0; i < ds.size(); ++i) out.emplace(ds.records[i].id, values[i]);
    return out;
}

Baseline parse_baseline(std::string_view name) {
    if (name == "random") return Baseline::random;
    if (name == "longest") return Baseline::longest;
    if (name == "perplexity") return Baseline::perplexity;
    if (name == "ifd") return Baseline::ifd;
    fail(ErrorKind::argument,
         "unknown baseline '" + std::string(name) + "' (random|longest|perplexity|ifd)");
}

std::string_view to_string(Baseline b) noexcept {
    switch (b) {
        case Baseline::random: return "random";
        case Baseline::longest: return "longest";
        case Baseline::perplexity: return "perplexity";
        case Baseline::ifd: return "ifd";
    }
    return "random";
}

SelectionManifest baseline_select(const Dataset& ds, Baseline method, double k_percent,
                                  const BaselineAux& aux, std::string config_hash) {
    if (ds.empty()) fail(ErrorKind::argument, "baseline_select: empty dataset");
    ScoreMap scores;
    auto ppl = [&](const std::string& id, std::string_view suffix) {
        if (aux.scores == nullptr) {
            fail(ErrorKind::argument, std::string(to_string(method)) + " baseline needs a score table");
        }
        const auto key = id + std::string(suffix);
        const auto it = aux.scores->find(key);
        if (it == aux.scores->end()) fail(ErrorKind::lookup, "no score entry for '" + key + "'");
        return perplexity(it->second);
    };

    switch (method) {
        case Baseline::random: {
            // Position in a seeded permutation; the top `count` form the sample.
            std::vector<std::size_t> order(ds.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            Rng rng(aux.seed);
            rng.shuffle(std::span<std::size_t>(order));
            for (std::size_t pos = 0; pos < order.size(); ++pos) {
                scores[ds.records[order[pos]].id] = static_cast<double>(order.size() - pos);
            }
            break;
        }
        case Baseline::longest:
            for (const auto& ex : ds.records) {
                double len = 0.0;
                if (aux.lengths != nullptr) {
                    const auto it = aux.lengths->find(ex.id);
                    if (it == aux.lengths->end()) {
                        fail(ErrorKind::lookup, "no length entry for '" + ex.id + "'");
                    }
                    len = it->second;
                } else {
                    len = static_cast<double>(style::tokenize(ex.response).word_tokens.size());
                }
                scores[ex.id] = len;
            }
            break;
        case Baseline::perplexity:
            for (const auto& ex : ds.records) scores[ex.id] = -ppl(ex.id, ":cond");
            break;
        case Baseline::ifd:
            for (const auto& ex : ds.records) {
                scores[ex.id] = ppl(ex.id, ":cond") / ppl(ex.id, ":uncond");
            }
            break;
    }
    return select_top_k(scores, k_percent, std::string(to_string(method)), std::move(config_hash));
}

ScoreTable unigram_score_table(const UnigramLm& lm, const Dataset& ds) {
    ScoreTable table;
    for (const auto& ex : ds.records) {
        auto s = lm.score("", ex.response);
        s.id = ex.id + ":uncond";
        table.emplace(s.id, s);
        s.id = ex.id + ":cond";
        table.emplace(s.id, s);
    }
    return table;
}

}  // namespace scar
