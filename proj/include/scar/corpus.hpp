#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace scar {

/// One instruction-response pair.
struct Example {
    std::string id;
    std::string instruction;
    std::string response;
    std::string source;
    std::map<std::string, std::string> meta;
    std::size_t line = 0;  // 1-based line in the source file, 0 if not loaded from a file

    bool operator==(const Example& other) const {
        return id == other.id && instruction == other.instruction && response == other.response &&
               source == other.source && meta == other.meta;
    }
};

/// An instruction with its human, referenced (LLM rewrite of the human answer)
/// and direct (LLM answer from scratch) responses.
struct Triplet {
    std::string id;
    std::string instruction;
    std::string human;
    std::string referenced;
    std::string direct;
    std::size_t line = 0;

    bool operator==(const Triplet& other) const {
        return id == other.id && instruction == other.instruction && human == other.human &&
               referenced == other.referenced && direct == other.direct;
    }
};

struct Provenance {
    std::string source_path;
    std::string loaded_at;  // ISO-8601 UTC
};

struct Dataset {
    std::vector<Example> records;
    Provenance provenance;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
};

struct TripletSet {
    std::vector<Triplet> records;
    Provenance provenance;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
};

/// Which text of a record an embedding, score or quality entry refers to.
enum class Role { instruction, response, human, referenced, direct };

std::string_view to_string(Role role) noexcept;
Role parse_role(std::string_view name);

/// Key used by embedding stores and PPL lookups: "<id>:<role>".
std::string text_key(std::string_view id, Role role);

Dataset load_examples(const std::filesystem::path& path);
TripletSet load_triplets(const std::filesystem::path& path);

/// Parse already-read JSONL text; `origin` is used in error messages.
Dataset parse_examples(std::string_view jsonl, std::string_view origin = "<memory>");
TripletSet parse_triplets(std::string_view jsonl, std::string_view origin = "<memory>");

std::string serialize_examples(const Dataset& ds);
std::string serialize_triplets(const TripletSet& ts);
void write_examples(const Dataset& ds, const std::filesystem::path& path);
void write_triplets(const TripletSet& ts, const std::filesystem::path& path);

struct DedupReport {
    std::vector<std::string> removed;
    std::map<std::string, std::string> kept_map;  // duplicate id -> id of the kept record

    nlohmann::json to_json() const;
};

/// Collapse whitespace runs to a single space and trim.
std::string normalize_whitespace(std::string_view text);

/// Keeps the first occurrence of each whitespace-normalized
/// (instruction, response) pair. Case-sensitive.
std::pair<Dataset, DedupReport> dedup_exact(const Dataset& ds);

struct FilterReport {
    std::size_t kept = 0;
    std::size_t removed = 0;
    std::vector<std::string> removed_ids;

    nlohmann::json to_json() const;
};

/// Perplexity per text key (see text_key).
using PplLookup = std::unordered_map<std::string, double>;

struct SurprisalFilter {
    double abs_tol = 0.15;
    double cap = 2.5;
};

/// Keeps a triplet iff |PPL(referenced) - PPL(human)| <= abs_tol and
/// PPL(referenced) <= cap.
std::pair<TripletSet, FilterReport> filter_surprisal_deviation(const TripletSet& ts,
                                                               const PplLookup& ppl,
                                                               SurprisalFilter thresholds = {});

struct SplitSpec {
    double train_fraction = 0.8;
    double val_fraction = 0.1;
    double test_fraction = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Splits {
    TripletSet train;
    TripletSet val;
    TripletSet test;
};

/// Seeded Fisher-Yates shuffle (see Rng), then contiguous partition
/// [train | val | test]. val and test get floor(f * N) records; the remainder
/// goes to train.
Splits split(const TripletSet& ts, const SplitSpec& spec);

}  // namespace scar
