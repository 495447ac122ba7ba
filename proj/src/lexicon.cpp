// Function-word lexicon used to separate form-bearing tokens from content.
// Bump kVersion whenever the list changes; reports and tests pin it.

#include <algorithm>
#include <array>
#include <string_view>

#include "scar/stylometry.hpp"

namespace scar::style {

namespace {

constexpr std::string_view kVersion = "function-words/1";

constexpr auto kWords = std::to_array<std::string_view>({
    // determiners, quantifiers, pronouns, prepositions, conjunctions,
    // auxiliaries and modals, particles, degree adverbs, contractions
    "a",         "about",     "above",   "across",  "after",    "again",   "against",
    "all",       "almost",    "along",   "also",    "although", "am",      "among",
    "an",        "and",       "another", "any",     "anybody",  "anyone",  "anything",
    "are",       "aren't",    "around",  "as",      "at",       "be",      "because",
    "been",      "before",    "behind",  "being",   "below",    "beneath", "beside",
    "besides",   "between",   "beyond",  "both",    "but",      "by",      "can",
    "can't",     "cannot",    "could",   "couldn't", "did",     "didn't",  "do",
    "does",      "doesn't",   "doing",   "don't",   "down",     "during",  "each",
    "either",    "enough",    "even",    "every",   "everybody", "everyone", "everything",
    "extremely", "few",       "for",     "from",    "fully",    "had",     "has",
    "hasn't",    "have",      "haven't", "having",  "he",       "her",     "hers",
    "herself",   "him",       "himself", "his",     "how",      "however", "i",
    "i'm",       "if",        "in",      "inside",  "into",     "is",      "isn't",
    "it",        "it's",      "its",     "itself",  "just",     "least",   "less",
    "let's",     "many",      "may",     "me",      "might",    "mine",    "more",
    "most",      "much",      "must",    "my",      "myself",   "near",    "neither",
    "no",        "nobody",    "none",    "nor",     "not",      "nothing", "of",
    "off",       "on",        "once",    "onto",    "or",       "other",   "others",
    "our",       "ours",      "ourselves", "out",   "outside",  "over",    "per",
    "quite",     "rather",    "really",  "same",    "several",  "shall",   "she",
    "should",    "shouldn't", "since",   "so",      "some",     "somebody", "someone",
    "something", "such",      "than",    "that",    "that's",   "the",     "their",
    "theirs",    "them",      "themselves", "then", "there",    "there's", "these",
    "they",      "they're",   "this",    "those",   "though",   "through", "throughout",
    "thus",      "to",        "too",     "toward",  "towards",  "under",   "unless",
    "until",     "up",        "upon",    "us",      "very",     "via",     "was",
    "wasn't",    "we",        "we're",   "were",    "weren't",  "what",    "whatever",
    "when",      "whenever",  "where",   "whereas", "wherever", "whether", "which",
    "whichever", "while",     "who",     "whoever", "whom",     "whose",   "why",
    "will",      "with",      "within",  "without", "won't",    "would",   "wouldn't",
    "yet",       "you",       "you're",  "your",    "yours",    "yourself", "yourselves",
    "fairly",    "slightly",
});

constexpr auto sorted_words() {
    auto words = kWords;
    std::sort(words.begin(), words.end());
    return words;
}

constexpr auto kSorted = sorted_words();

}  // namespace

std::string_view lexicon_version() { return kVersion; }

bool is_function_word(std::string_view word) {
    return std::binary_search(kSorted.begin(), kSorted.end(), word);
}

}  // namespace scar::style
