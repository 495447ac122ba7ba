#include "scar/stylometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <unordered_set>

#include "scar/error.hpp"

namespace scar::style {

namespace {

constexpr auto kAbbreviations = std::to_array<std::string_view>({
    "e.g.", "i.e.", "mr.", "mrs.", "ms.", "dr.", "prof.", "sr.", "jr.", "st.", "vs.", "cf.",
    "fig.", "approx.",
});

bool is_ascii_alnum(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_space(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_punct(unsigned char c) {
    switch (c) {
        case '.': case ',': case ';': case ':': case '!': case '?': case '-': case '(':
        case ')': case '[': case ']': case '{': case '}': case '"': case '\'': case '`':
        case '/': case '\\':
            return true;
        default:
            return false;
    }
}

bool is_terminator(unsigned char c) { return c == '.' || c == '!' || c == '?'; }

// Decodes the UTF-8 sequence at `i`; returns the code point and its length.
// Invalid bytes decode as U+FFFD with length 1.
std::pair<char32_t, std::size_t> decode(std::string_view s, std::size_t i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) return {b0, 1};
    std::size_t len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return {U'�', 1};
    }
    if (i + len > s.size()) return {U'�', 1};
    for (std::size_t k = 1; k < len; ++k) {
        const auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) return {U'�', 1};
        cp = (cp << 6) | (b & 0x3F);
    }
    return {cp, len};
}

enum class CharClass { space, word, apostrophe, punct, other };

// Non-ASCII code points outside the Latin-1 symbol range and the general
// punctuation block are treated as letters.
CharClass classify(char32_t cp) {
    if (cp < 0x80) {
        const auto c = static_cast<unsigned char>(cp);
        if (is_space(c)) return CharClass::space;
        if (is_ascii_alnum(c)) return CharClass::word;
        if (c == '\'') return CharClass::apostrophe;
        if (is_ascii_punct(c)) return CharClass::punct;
        return CharClass::other;
    }
    if (cp == U'’') return CharClass::apostrophe;
    if (cp == U'—' || cp == U'–') return CharClass::punct;  // em and en dash
    if (cp == U' ') return CharClass::space;
    if ((cp >= 0x80 && cp <= 0xBF) || (cp >= 0x2000 && cp <= 0x206F) || cp == U'�') {
        return CharClass::other;
    }
    return CharClass::word;
}

std::size_t line_end(std::string_view s, std::size_t i) {
    const auto e = s.find('\n', i);
    return e == std::string_view::npos ? s.size() : e;
}

// If a fence (``` or ~~~) opens at line start `i` (after up to 3 spaces),
// returns the fence marker.
std::string_view fence_at(std::string_view s, std::size_t i) {
    std::size_t j = i;
    while (j < s.size() && j - i < 3 && s[j] == ' ') ++j;
    if (s.substr(j, 3) == "```") return "```";
    if (s.substr(j, 3) == "~~~") return "~~~";
    return {};
}

// End (exclusive) of a fenced block that opens on the line starting at `i`:
// the end of the closing fence line, or end of text if unclosed.
std::size_t fenced_block_end(std::string_view s, std::size_t i, std::string_view fence) {
    std::size_t pos = line_end(s, i);
    while (pos < s.size()) {
        const std::size_t next = pos + 1;
        if (next >= s.size()) return s.size();
        if (fence_at(s, next) == fence) return line_end(s, next);
        pos = line_end(s, next);
    }
    return s.size();
}

std::string_view trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool guarded_abbreviation(std::string_view text, std::size_t period) {
    std::size_t b = period;
    while (b > 0 && !is_space(static_cast<unsigned char>(text[b - 1]))) --b;
    std::string_view chunk = text.substr(b, period + 1 - b);
    while (!chunk.empty() && (chunk.front() == '(' || chunk.front() == '"' ||
                              chunk.front() == '\'' || chunk.front() == '[')) {
        chunk.remove_prefix(1);
    }
    const auto lowered = to_lower_ascii(chunk);
    if (std::find(kAbbreviations.begin(), kAbbreviations.end(), lowered) != kAbbreviations.end()) {
        return true;
    }
    // "12." opening a line is a list marker.
    const auto digits = text.substr(b, period - b);
    if (digits.empty() ||
        !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        return false;
    }
    std::size_t k = b;
    while (k > 0 && (text[k - 1] == ' ' || text[k - 1] == '\t')) --k;
    return k == 0 || text[k - 1] == '\n';
}

class Tokenizer {
public:
    explicit Tokenizer(std::string_view text) : s_(text) {}

    TokenizedText run() {
        std::size_t i = 0;
        bool at_line_start = true;
        while (i < s_.size()) {
            if (at_line_start) {
                if (const auto fence = fence_at(s_, i); !fence.empty()) {
                    const std::size_t end = fenced_block_end(s_, i, fence);
                    close_sentence();
                    push_token(std::string(trim(s_.substr(i, end - i))), true);
                    close_sentence();
                    i = end;
                    continue;
                }
            }
            const auto [cp, len] = decode(s_, i);
            at_line_start = cp == U'\n';

            if (cp == U'`') {
                const std::size_t le = line_end(s_, i);
                const auto close = s_.find('`', i + 1);
                if (close != std::string_view::npos && close < le && close > i + 1) {
                    flush_word();
                    push_token(std::string(s_.substr(i, close + 1 - i)), true);
                    i = close + 1;
                    continue;
                }
            }

            switch (classify(cp)) {
                case CharClass::word:
                    word_.append(s_.substr(i, len));
                    i += len;
                    break;
                case CharClass::apostrophe: {
                    const bool inside = !word_.empty() && i + len < s_.size() &&
                                        classify(decode(s_, i + len).first) == CharClass::word;
                    if (inside) {
                        word_.append(s_.substr(i, len));
                    } else {
                        flush_word();
                        ++out_.punctuation_count;
                    }
                    i += len;
                    break;
                }
                case CharClass::punct:
                    flush_word();
                    if (is_terminator(static_cast<unsigned char>(cp))) {
                        i = terminator_run(i);
                    } else {
                        ++out_.punctuation_count;
                        i += len;
                    }
                    break;
                case CharClass::space:
                case CharClass::other:
                    flush_word();
                    i += len;
                    break;
            }
        }
        flush_word();
        close_sentence();
        return std::move(out_);
    }

private:
    // Consumes . ! ? and any closing quotes/brackets that trail them, then
    // decides whether a sentence ends here.
    std::size_t terminator_run(std::size_t i) {
        const std::size_t start = i;
        while (i < s_.size() && is_terminator(static_cast<unsigned char>(s_[i]))) {
            ++out_.punctuation_count;
            ++i;
        }
        const bool single_period = i - start == 1 && s_[start] == '.';
        while (i < s_.size() &&
               (s_[i] == '"' || s_[i] == '\'' || s_[i] == ')' || s_[i] == ']')) {
            ++out_.punctuation_count;
            ++i;
        }

        std::size_t j = i;
        while (j < s_.size() && is_space(static_cast<unsigned char>(s_[j]))) ++j;
        bool boundary = false;
        if (j == s_.size()) {
            boundary = true;
        } else if (j > i) {
            const auto next = static_cast<unsigned char>(s_[j]);
            boundary = !(next >= 'a' && next <= 'z');
        }
        if (boundary && single_period && guarded_abbreviation(s_, start)) boundary = false;
        if (boundary) close_sentence();
        return i;
    }

    void flush_word() {
        if (word_.empty()) return;
        push_token(std::move(word_), false);
        word_.clear();
    }

    void push_token(std::string tok, bool code) {
        out_.word_tokens.push_back(std::move(tok));
        out_.is_code.push_back(code);
    }

    void close_sentence() {
        flush_word();
        const std::size_t n = out_.word_tokens.size();
        if (n > sentence_start_) out_.sentences.push_back({sentence_start_, n});
        sentence_start_ = n;
    }

    std::string_view s_;
    TokenizedText out_;
    std::string word_;
    std::size_t sentence_start_ = 0;
};

// Lowercases ASCII and folds the typographic apostrophe to '.
std::string normalize_token(std::string_view tok) {
    std::string out;
    out.reserve(tok.size());
    for (std::size_t i = 0; i < tok.size(); ++i) {
        if (tok.compare(i, 3, "\xE2\x80\x99") == 0) {
            out += '\'';
            i += 2;
            continue;
        }
        const auto c = static_cast<unsigned char>(tok[i]);
        out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
    }
    return out;
}

bool is_vowel(char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

bool is_ascii_letter(char c) { return (c >= 'a' && c <= 'z'); }

double mtld_pass(std::span<const std::string> tokens, double threshold, bool reversed) {
    const std::size_t n = tokens.size();
    double factors = 0.0;
    std::unordered_set<std::string> types;
    std::size_t count = 0;
    double current_ttr = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& tok = tokens[reversed ? n - 1 - k : k];
        types.insert(normalize_token(tok));
        ++count;
        current_ttr = static_cast<double>(types.size()) / static_cast<double>(count);
        if (current_ttr <= threshold) {
            factors += 1.0;
            types.clear();
            count = 0;
            current_ttr = 1.0;
        }
    }
    if (count > 0) factors += (1.0 - current_ttr) / (1.0 - threshold);
    if (factors == 0.0) return static_cast<double>(n);
    return static_cast<double>(n) / factors;
}

// Exact MTLD for a threshold p / q, carried as integer ratios so the result
// is one rounding away from the true rational.
using Wide = unsigned __int128;

struct Ratio {
    Wide num = 0;
    Wide den = 1;
};

Wide gcd(Wide a, Wide b) {
    while (b != 0) {
        const Wide t = a % b;
        a = b;
        b = t;
    }
    return a;
}

Ratio reduced(Ratio r) {
    const Wide g = gcd(r.num, r.den);
    return g > 1 ? Ratio{r.num / g, r.den / g} : r;
}

Ratio mtld_pass_exact(std::span<const std::string> tokens, std::uint64_t p, std::uint64_t q,
                      bool reversed) {
    const std::size_t n = tokens.size();
    Wide factors = 0;
    std::unordered_set<std::string> types;
    Wide count = 0;
    for (std::size_t k = 0; k < n; ++k) {
        types.insert(normalize_token(tokens[reversed ? n - 1 - k : k]));
        ++count;
        if (static_cast<Wide>(types.size()) * q <= p * count) {
            ++factors;
            types.clear();
            count = 0;
        }
    }
    // factors + (1 - t / l) / (1 - p / q) = (F l (q - p) + (l - t) q) / (l (q - p))
    Ratio f{factors, 1};
    if (count > 0) {
        const Wide t = types.size();
        f = {factors * count * (q - p) + (count - t) * q, count * (q - p)};
    }
    if (f.num == 0) return {n, 1};
    return reduced({static_cast<Wide>(n) * f.den, f.num});
}

double to_double(Ratio r) {
    constexpr Wide exact_limit = Wide(1) << 53;
    if (r.num < exact_limit && r.den < exact_limit) {
        return static_cast<double>(r.num) / static_cast<double>(r.den);
    }
    return static_cast<double>(static_cast<long double>(r.num) / static_cast<long double>(r.den));
}

// p / q with q <= 1000 whose double is exactly `threshold`, if one exists.
std::optional<std::pair<std::uint64_t, std::uint64_t>> small_ratio(double threshold) {
    for (std::uint64_t q = 1; q <= 1000; ++q) {
        const auto p = static_cast<std::uint64_t>(std::llround(threshold * static_cast<double>(q)));
        if (p > 0 && p < q && static_cast<double>(p) / static_cast<double>(q) == threshold) {
            return std::pair{p, q};
        }
    }
    return std::nullopt;
}

bool is_bullet_line(std::string_view line) {
    for (std::string_view marker : {"-", "*", "\xE2\x80\xA2"}) {
        if (line.substr(0, marker.size()) == marker) {
            return line.size() > marker.size() &&
                   (line[marker.size()] == ' ' || line[marker.size()] == '\t');
        }
    }
    std::size_t d = 0;
    while (d < line.size() && line[d] >= '0' && line[d] <= '9') ++d;
    return d > 0 && d + 1 < line.size() && line[d] == '.' &&
           (line[d + 1] == ' ' || line[d + 1] == '\t');
}

bool is_header_line(std::string_view line) {
    std::size_t h = 0;
    while (h < line.size() && line[h] == '#') ++h;
    return h > 0 && (h == line.size() || line[h] == ' ' || line[h] == '\t');
}

std::size_t bold_spans(std::string_view line) {
    std::size_t count = 0;
    std::size_t pos = 0;
    while (true) {
        const auto open = line.find("**", pos);
        if (open == std::string_view::npos) break;
        const auto close = line.find("**", open + 2);
        if (close == std::string_view::npos) break;
        const auto inner = line.substr(open + 2, close - open - 2);
        if (!inner.empty() && inner.find('*') == std::string_view::npos) {
            ++count;
            pos = close + 2;
        } else {
            pos = open + 1;
        }
    }
    return count;
}

}  // namespace

std::span<const std::string_view> abbreviation_guards() { return kAbbreviations; }

std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    for (auto& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

TokenizedText tokenize(std::string_view text) {
    if (text.empty()) fail(ErrorKind::argument, "tokenize: empty text");
    return Tokenizer(text).run();
}

TokenSplit split_functional_semantic(const TokenizedText& tt) {
    TokenSplit out;
    for (std::size_t i = 0; i < tt.word_tokens.size(); ++i) {
        const auto& tok = tt.word_tokens[i];
        if (!tt.is_code[i] && is_function_word(normalize_token(tok))) {
            out.functional.push_back(tok);
        } else {
            out.semantic.push_back(tok);
        }
    }
    return out;
}

TokenSplit split_functional_semantic(std::string_view text) {
    if (text.empty()) fail(ErrorKind::argument, "split_functional_semantic: empty text");
    return split_functional_semantic(tokenize(text));
}

double ttr(std::span<const std::string> tokens) {
    if (tokens.empty()) fail(ErrorKind::argument, "ttr: empty token list");
    std::unordered_set<std::string> types;
    for (const auto& t : tokens) types.insert(normalize_token(t));
    return 100.0 * static_cast<double>(types.size()) / static_cast<double>(tokens.size());
}

double mtld(std::span<const std::string> tokens, double threshold) {
    if (tokens.empty()) fail(ErrorKind::argument, "mtld: empty token list");
    if (!(threshold > 0.0 && threshold < 1.0)) {
        fail(ErrorKind::argument, "mtld: threshold must lie in (0, 1)");
    }
    if (const auto pq = small_ratio(threshold)) {
        const auto [p, q] = *pq;
        const auto a = mtld_pass_exact(tokens, p, q, false);
        const auto b = mtld_pass_exact(tokens, p, q, true);
        return to_double(reduced({a.num * b.den + b.num * a.den, 2 * a.den * b.den}));
    }
    const double forward = mtld_pass(tokens, threshold, false);
    const double backward = mtld_pass(tokens, threshold, true);
    return (forward + backward) / 2.0;
}

int count_syllables(std::string_view word) {
    const auto w = to_lower_ascii(word);
    int groups = 0;
    bool in_group = false;
    for (char c : w) {
        const bool v = is_vowel(c);
        if (v && !in_group) ++groups;
        in_group = v;
    }
    const std::size_t n = w.size();
    if (n >= 2 && w[n - 1] == 'e' && is_ascii_letter(w[n - 2]) && !is_vowel(w[n - 2])) {
        const bool consonant_le =
            w[n - 2] == 'l' && n >= 3 && is_ascii_letter(w[n - 3]) && !is_vowel(w[n - 3]);
        if (!consonant_le) --groups;
    }
    return std::max(groups, 1);
}

double flesch(const TokenizedText& tt) {
    if (tt.word_tokens.empty()) fail(ErrorKind::argument, "flesch: text has no words");
    if (tt.sentences.empty()) fail(ErrorKind::argument, "flesch: text has no sentences");
    double syllables = 0.0;
    for (std::size_t i = 0; i < tt.word_tokens.size(); ++i) {
        syllables += tt.is_code[i] ? 1.0 : static_cast<double>(count_syllables(tt.word_tokens[i]));
    }
    const auto words = static_cast<double>(tt.word_tokens.size());
    const auto sentences = static_cast<double>(tt.sentences.size());
    return 206.835 - 1.015 * (words / sentences) - 84.6 * (syllables / words);
}

double flesch(std::string_view text) { return flesch(tokenize(text)); }

double avg_sentence_length(const TokenizedText& tt) {
    if (tt.sentences.empty()) fail(ErrorKind::argument, "avg_sentence_length: no sentences");
    return static_cast<double>(tt.word_tokens.size()) / static_cast<double>(tt.sentences.size());
}

std::size_t punctuation_count(const TokenizedText& tt) { return tt.punctuation_count; }

std::size_t layout_feature_count(std::string_view text) {
    std::size_t count = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        if (const auto fence = fence_at(text, i); !fence.empty()) {
            i = fenced_block_end(text, i, fence);
            if (i < text.size()) ++i;
            continue;
        }
        const std::size_t e = line_end(text, i);
        auto line = text.substr(i, e - i);
        while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (is_bullet_line(line) || is_header_line(line)) ++count;
        count += bold_spans(line);
        i = e + 1;
    }
    return count;
}

double layout_frequency(std::string_view text, const TokenizedText& tt) {
    if (tt.sentences.empty()) fail(ErrorKind::argument, "layout_frequency: no sentences");
    return static_cast<double>(layout_feature_count(text)) /
           static_cast<double>(tt.sentences.size());
}

StyleProfile style_profile(std::string_view text) {
    if (text.empty()) fail(ErrorKind::argument, "style_profile: empty text");
    const auto tt = tokenize(text);
    if (tt.word_tokens.empty()) fail(ErrorKind::argument, "style_profile: text has no words");
    const auto split = split_functional_semantic(tt);

    StyleProfile p;
    if (split.functional.empty()) {
        p.ttr_functional = 100.0;
        p.mtld_functional = 0.0;
    } else {
        p.ttr_functional = ttr(split.functional);
        p.mtld_functional = mtld(split.functional);
    }
    p.avg_sentence_len = avg_sentence_length(tt);
    p.punct_count = static_cast<double>(punctuation_count(tt));
    p.flesch = flesch(tt);
    p.layout_freq = layout_frequency(text, tt);
    return p;
}

MetricSummary summarize(std::span<const double> values) {
    if (values.empty()) fail(ErrorKind::argument, "summarize: no values");
    const auto n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / n;
    double sq = 0.0;
    for (double v : values) sq += (v - mean) * (v - mean);
    return {mean, std::sqrt(sq / n)};
}

CorpusStyleReport corpus_report(std::span<const StyleProfile> profiles,
                                std::optional<std::span<const double>> ppl) {
    if (profiles.empty()) fail(ErrorKind::argument, "corpus_report: no profiles");
    if (ppl && ppl->size() != profiles.size()) {
        fail(ErrorKind::argument, "corpus_report: PPL column length differs from profile count");
    }
    auto column = [&](double StyleProfile::*field) {
        std::vector<double> v;
        v.reserve(profiles.size());
        for (const auto& p : profiles) v.push_back(p.*field);
        return summarize(v);
    };
    CorpusStyleReport r;
    r.ttr_functional = column(&StyleProfile::ttr_functional);
    r.mtld_functional = column(&StyleProfile::mtld_functional);
    r.avg_sentence_len = column(&StyleProfile::avg_sentence_len);
    r.punct_count = column(&StyleProfile::punct_count);
    r.flesch = column(&StyleProfile::flesch);
    r.layout_freq = column(&StyleProfile::layout_freq);
    if (ppl) r.ppl = summarize(*ppl);
    r.n_texts = profiles.size();
    return r;
}

namespace {

std::vector<std::pair<std::string_view, const MetricSummary*>> rows(const CorpusStyleReport& r) {
    std::vector<std::pair<std::string_view, const MetricSummary*>> out = {
        {"ttr_functional", &r.ttr_functional}, {"mtld_functional", &r.mtld_functional},
        {"avg_sentence_len", &r.avg_sentence_len}, {"punct_count", &r.punct_count},
        {"flesch", &r.flesch}, {"layout_freq", &r.layout_freq},
    };
    if (r.ppl) out.emplace_back("ppl", &*r.ppl);
    return out;
}

}  // namespace

nlohmann::ordered_json CorpusStyleReport::to_json() const {
    nlohmann::ordered_json j;
    for (const auto& [name, m] : rows(*this)) {
        j[std::string(name)] = {{"mean", m->mean}, {"std", m->std}};
    }
    j["n_texts"] = n_texts;
    return j;
}

std::string CorpusStyleReport::to_table() const {
    std::string out;
    char buf[128];
    std::snprintf(buf, sizeof buf, "%-18s %14s %14s\n", "metric", "mean", "std");
    out += buf;
    for (const auto& [name, m] : rows(*this)) {
        std::snprintf(buf, sizeof buf, "%-18.*s %14.4f %14.4f\n", static_cast<int>(name.size()),
                      name.data(), m->mean, m->std);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, "n_texts: %zu\n", n_texts);
    out += buf;
    return out;
}

}  // namespace scar::style
