#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace scar::style {

/// Half-open range of word-token indices.
struct SentenceSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool operator==(const SentenceSpan&) const = default;
};

/// Tokenization of one response.
///
/// Word tokens are maximal runs of letters, digits and word-internal
/// apostrophes. Fenced code blocks (``` or ~~~) become one opaque token that
/// forms its own sentence; inline `code` spans become one opaque token inside
/// the current sentence. `is_code[i]` marks those opaque tokens.
struct TokenizedText {
    std::vector<std::string> word_tokens;
    std::vector<bool> is_code;
    std::vector<SentenceSpan> sentences;
    std::size_t punctuation_count = 0;
};

/// Sentences end at a run of . ! ? followed by end of text, or by whitespace
/// and then anything other than a lowercase letter. A single period that
/// closes a guarded abbreviation (abbreviation_guards()) or a list marker
/// ("3." at the start of a line) never ends a sentence.
TokenizedText tokenize(std::string_view text);

std::span<const std::string_view> abbreviation_guards();

/// Version tag of the shipped function-word lexicon.
std::string_view lexicon_version();

/// `word` must already be lowercased.
bool is_function_word(std::string_view word);

/// Functional (lexicon) tokens vs semantic tokens (everything else, plus all
/// code tokens). Tokens keep their original casing.
struct TokenSplit {
    std::vector<std::string> functional;
    std::vector<std::string> semantic;
};

TokenSplit split_functional_semantic(std::string_view text);
TokenSplit split_functional_semantic(const TokenizedText& tt);

std::string to_lower_ascii(std::string_view s);

/// Type-token ratio in percent. Types compare lowercased, with ’ folded to '.
double ttr(std::span<const std::string> tokens);

inline constexpr double kMtldThreshold = 0.72;

/// Bidirectional MTLD (mean of forward and reversed passes), types compared
/// as in ttr(). A pass that completes no factor at all returns N.
double mtld(std::span<const std::string> tokens, double threshold = kMtldThreshold);

/// Vowel-group syllable heuristic:
///   count runs of [aeiouy]; subtract one for a final "e" that follows a
///   consonant, unless the word ends in consonant + "le"; floor at one.
int count_syllables(std::string_view word);

/// Flesch reading ease. Code tokens count as one word of one syllable.
double flesch(std::string_view text);
double flesch(const TokenizedText& tt);

double avg_sentence_length(const TokenizedText& tt);
std::size_t punctuation_count(const TokenizedText& tt);

/// Layout features outside fenced code: a line whose first non-blank
/// characters are a bullet (-, *, •) or "N." followed by whitespace; a line
/// starting with one or more '#' then whitespace or end of line; and every
/// **bold** span.
std::size_t layout_feature_count(std::string_view text);
double layout_frequency(std::string_view text, const TokenizedText& tt);

struct StyleProfile {
    double ttr_functional = 0.0;
    double mtld_functional = 0.0;
    double avg_sentence_len = 0.0;
    double punct_count = 0.0;
    double flesch = 0.0;
    double layout_freq = 0.0;
};

/// The six form metrics. TTR and MTLD use functional tokens only; a text with
/// no functional tokens gets ttr_functional = 100 and mtld_functional = 0.
StyleProfile style_profile(std::string_view text);

struct MetricSummary {
    double mean = 0.0;
    double std = 0.0;  // population (divide by N)
};

MetricSummary summarize(std::span<const double> values);

struct CorpusStyleReport {
    MetricSummary ttr_functional;
    MetricSummary mtld_functional;
    MetricSummary avg_sentence_len;
    MetricSummary punct_count;
    MetricSummary flesch;
    MetricSummary layout_freq;
    std::optional<MetricSummary> ppl;
    std::size_t n_texts = 0;

    nlohmann::ordered_json to_json() const;
    std::string to_table() const;
};

CorpusStyleReport corpus_report(std::span<const StyleProfile> profiles,
                                std::optional<std::span<const double>> ppl = std::nullopt);

}  // namespace scar::style
