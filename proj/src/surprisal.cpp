#include "scar/surprisal.hpp"

#include <cmath>

#include "scar/error.hpp"
#include "scar/jsonl.hpp"
#include "scar/stylometry.hpp"

namespace scar {

double perplexity(const LmScore& score) {
    if (score.token_count <= 0) fail(ErrorKind::argument, "perplexity: token_count must be >= 1");
    return std::exp(-score.logprob_sum / static_cast<double>(score.token_count));
}

UnigramLm::UnigramLm(std::unordered_map<std::string, std::int64_t> counts, std::int64_t total)
    : counts_(std::move(counts)), total_(total) {}

double UnigramLm::unseen_probability() const { return probability_of_count(0); }

double UnigramLm::probability_of_count(std::int64_t count) const {
    const auto denominator = total_ + static_cast<std::int64_t>(counts_.size()) + 1;
    return static_cast<double>(count + 1) / static_cast<double>(denominator);
}

double UnigramLm::probability(std::string_view lowered_token) const {
    const auto it = counts_.find(std::string(lowered_token));
    return probability_of_count(it == counts_.end() ? 0 : it->second);
}

LmScore UnigramLm::score(std::string_view /*context*/, std::string_view target) const {
    if (target.empty()) fail(ErrorKind::argument, "unigram_score: empty target");
    const auto tt = style::tokenize(target);
    if (tt.word_tokens.empty()) fail(ErrorKind::argument, "unigram_score: target has no tokens");
    LmScore out;
    for (const auto& tok : tt.word_tokens) {
        out.logprob_sum += std::log(probability(style::to_lower_ascii(tok)));
    }
    out.token_count = static_cast<std::int64_t>(tt.word_tokens.size());
    return out;
}

UnigramLm fit_unigram(std::span<const std::string> texts) {
    std::unordered_map<std::string, std::int64_t> counts;
    std::int64_t total = 0;
    for (const auto& text : texts) {
        if (text.empty()) continue;
        for (const auto& tok : style::tokenize(text).word_tokens) {
            ++counts[style::to_lower_ascii(tok)];
            ++total;
        }
    }
    if (total == 0) fail(ErrorKind::argument, "fit_unigram: corpus has no response tokens");
    return UnigramLm(std::move(counts), total);
}

UnigramLm fit_unigram(const Dataset& corpus) {
    std::vector<std::string> texts;
    texts.reserve(corpus.size());
    for (const auto& ex : corpus.records) texts.push_back(ex.response);
    return fit_unigram(texts);
}

LmScore unigram_score(const UnigramLm& lm, std::string_view context, std::string_view target) {
    return lm.score(context, target);
}

ScoreTable parse_scores(std::string_view text, std::string_view origin) {
    ScoreTable table;
    std::unordered_map<std::string, std::size_t> first_line;
    jsonl::for_each_object(text, origin, [&](const nlohmann::json& obj, std::size_t line) {
        LmScore s;
        s.id = jsonl::require_string(obj, "id", origin, line);
        s.logprob_sum = jsonl::require_number(obj, "logprob_sum", origin, line);
        const double count = jsonl::require_number(obj, "token_count", origin, line);
        if (s.logprob_sum > 0.0) {
            fail(ErrorKind::validation, jsonl::where(origin, line) + ": logprob_sum must be <= 0");
        }
        if (count < 1.0 || count != std::floor(count) || count > 9.0e15) {
            fail(ErrorKind::validation,
                 jsonl::where(origin, line) + ": token_count must be a positive integer");
        }
        s.token_count = static_cast<std::int64_t>(count);
        const auto [it, inserted] = first_line.emplace(s.id, line);
        if (!inserted) {
            fail(ErrorKind::duplicate_id, std::string(origin) + ": duplicate id \"" + s.id +
                                              "\" on lines " + std::to_string(it->second) +
                                              " and " + std::to_string(line));
        }
        table.emplace(s.id, std::move(s));
    });
    return table;
}

ScoreTable load_scores(const std::filesystem::path& path) {
    return parse_scores(jsonl::read_file(path), path.string());
}

CmiResult cmi(std::span<const CmiSample> samples) {
    if (samples.empty()) fail(ErrorKind::argument, "cmi: no samples");
    double semantic = 0.0;
    double form = 0.0;
    for (const auto& s : samples) {
        semantic += s.logp_c_given_x_p - s.logp_c_given_p;
        form += s.logp_p_given_x_c - s.logp_p_given_c;
    }
    const auto n = static_cast<double>(samples.size());
    return {semantic / n, form / n, samples.size()};
}

std::vector<CmiSample> parse_cmi_samples(std::string_view text, std::string_view origin) {
    std::vector<CmiSample> out;
    jsonl::for_each_object(text, origin, [&](const nlohmann::json& obj, std::size_t line) {
        CmiSample s;
        s.logp_c_given_x_p = jsonl::require_number(obj, "logp_c_given_x_p", origin, line);
        s.logp_c_given_p = jsonl::require_number(obj, "logp_c_given_p", origin, line);
        s.logp_p_given_x_c = jsonl::require_number(obj, "logp_p_given_x_c", origin, line);
        s.logp_p_given_c = jsonl::require_number(obj, "logp_p_given_c", origin, line);
        out.push_back(s);
    });
    return out;
}

std::vector<CmiSample> load_cmi_samples(const std::filesystem::path& path) {
    return parse_cmi_samples(jsonl::read_file(path), path.string());
}

PplStats ppl_stats(std::span<const LmScore> scores) {
    if (scores.empty()) fail(ErrorKind::argument, "ppl_stats: no scores");
    std::vector<double> values;
    values.reserve(scores.size());
    for (const auto& s : scores) values.push_back(perplexity(s));
    const auto m = style::summarize(values);
    return {m.mean, m.std};
}

}  // namespace scar
