#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scar/corpus.hpp"

namespace scar {

/// Summed natural-log probability of a target text and its token count.
struct LmScore {
    std::string id;
    double logprob_sum = 0.0;
    std::int64_t token_count = 0;
};

/// exp(-logprob_sum / token_count).
double perplexity(const LmScore& score);

/// Anything that scores a target text conditioned on a context.
class Scorer {
public:
    virtual ~Scorer() = default;
    virtual LmScore score(std::string_view context, std::string_view target) const = 0;
};

/// Add-one smoothed unigram model over lowercased word tokens, with one shared
/// bucket for unseen tokens: P(t) = (count(t) + 1) / (total + |vocab| + 1).
class UnigramLm final : public Scorer {
public:
    UnigramLm() = default;
    UnigramLm(std::unordered_map<std::string, std::int64_t> counts, std::int64_t total);

    double probability(std::string_view lowered_token) const;
    double unseen_probability() const;

    /// Ignores the context: the fallback model cannot condition.
    LmScore score(std::string_view context, std::string_view target) const override;

    const std::unordered_map<std::string, std::int64_t>& counts() const { return counts_; }
    std::int64_t total() const { return total_; }
    std::size_t vocab_size() const { return counts_.size(); }

    bool operator==(const UnigramLm& other) const {
        return total_ == other.total_ && counts_ == other.counts_;
    }

private:
    double probability_of_count(std::int64_t count) const;

    std::unordered_map<std::string, std::int64_t> counts_;
    std::int64_t total_ = 0;
};

UnigramLm fit_unigram(const Dataset& corpus);
UnigramLm fit_unigram(std::span<const std::string> texts);

LmScore unigram_score(const UnigramLm& lm, std::string_view context, std::string_view target);

using ScoreTable = std::unordered_map<std::string, LmScore>;

/// JSONL lines {id, logprob_sum, token_count}.
ScoreTable load_scores(const std::filesystem::path& path);
ScoreTable parse_scores(std::string_view jsonl, std::string_view origin = "<memory>");

/// Log-probabilities (natural log) of the semantic tokens y_c and functional
/// tokens y_p of one response, with and without the instruction x.
struct CmiSample {
    double logp_c_given_x_p = 0.0;
    double logp_c_given_p = 0.0;
    double logp_p_given_x_c = 0.0;
    double logp_p_given_c = 0.0;
};

struct CmiResult {
    double i_semantic = 0.0;  // I(y_c; x | y_p)
    double i_form = 0.0;      // I(y_p; x | y_c)
    std::size_t n = 0;
};

/// Sample means of the conditional log-ratios.
CmiResult cmi(std::span<const CmiSample> samples);

/// JSONL lines with the four CmiSample fields.
std::vector<CmiSample> load_cmi_samples(const std::filesystem::path& path);
std::vector<CmiSample> parse_cmi_samples(std::string_view jsonl,
                                         std::string_view origin = "<memory>");

struct PplStats {
    double mean = 0.0;
    double std = 0.0;
};

/// Mean and population std of per-text perplexities.
PplStats ppl_stats(std::span<const LmScore> scores);

}  // namespace scar
