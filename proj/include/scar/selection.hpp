#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "scar/corpus.hpp"
#include "scar/embeddings.hpp"
#include "scar/ranker.hpp"
#include "scar/surprisal.hpp"

namespace scar {

/// id -> score. Ordered so iteration never depends on hashing.
using ScoreMap = std::map<std::string, double>;

struct ScoredExample {
    std::string id;
    double score = 0.0;
    std::size_t rank = 0;  // 1-based
    bool selected = false;

    bool operator==(const ScoredExample&) const = default;
};

struct SelectionManifest {
    std::string method;
    double k_percent = 0.0;
    std::size_t count = 0;
    std::string config_hash;
    std::vector<ScoredExample> items;  // by rank

    std::vector<std::string> selected_ids() const;

    /// Header line {method, k_percent, count, config_hash}, then one
    /// {id, score, rank, selected} line per example.
    std::string to_jsonl() const;
    void write(const std::filesystem::path& path) const;
};

/// max(1, floor(k * n / 100)).
std::size_t selection_count(std::size_t n, double k_percent);

/// Sorts by score descending, ties by id ascending, and marks the first
/// selection_count(n, k) entries selected.
SelectionManifest select_top_k(const ScoreMap& scores, double k_percent,
                               std::string method = "scar", std::string config_hash = "");

/// Ranker score of every example. Missing embeddings raise one lookup error
/// listing the example ids.
ScoreMap score_dataset(const RankerParams& params, const EmbeddingStore& store, const Dataset& ds,
                       std::size_t threads = 1);

enum class Baseline { random, longest, perplexity, ifd };

Baseline parse_baseline(std::string_view name);
std::string_view to_string(Baseline b) noexcept;

/// Inputs the baselines need. `scores` holds "<id>:cond" (PPL(y|x)) and
/// "<id>:uncond" (PPL(y)) entries. `lengths` overrides the response
/// word-token count for `longest`.
struct BaselineAux {
    std::uint64_t seed = 0;
    const ScoreTable* scores = nullptr;
    const std::map<std::string, double>* lengths = nullptr;
};

/// random: seeded sample without replacement; longest: most response word
/// tokens; perplexity: lowest PPL(y|x); ifd: highest PPL(y|x) / PPL(y).
SelectionManifest baseline_select(const Dataset& ds, Baseline method, double k_percent,
                                  const BaselineAux& aux, std::string config_hash = "");

/// Unigram stand-in for exported log-probabilities: "<id>:cond" and
/// "<id>:uncond" for every response (identical, since the unigram model
/// ignores the instruction).
ScoreTable unigram_score_table(const UnigramLm& lm, const Dataset& ds);

}  // namespace scar
