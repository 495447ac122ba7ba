#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>

#include "scar/corpus.hpp"

namespace scar {

enum class QualityRole { human, referenced, direct, single };

std::string_view to_string(QualityRole role) noexcept;
QualityRole parse_quality_role(std::string_view name);

/// Judge scores for one response; both on the 1-5 scale.
struct QualityRecord {
    std::string id;
    QualityRole role = QualityRole::single;
    double helpfulness = 1.0;
    double correctness = 1.0;

    void validate() const;
};

/// f(x, y): mean of helpfulness and correctness.
double quality_of(const QualityRecord& rec);

/// Keyed by "<id>:<role>" (quality_key).
using QualityTable = std::unordered_map<std::string, QualityRecord>;

std::string quality_key(std::string_view id, QualityRole role);

/// JSONL lines {id, role, helpfulness, correctness}.
QualityTable load_quality(const std::filesystem::path& path);
QualityTable parse_quality(std::string_view jsonl, std::string_view origin = "<memory>");

/// Which of the three ordered pairs (d,r), (r,h), (d,h) take part in the
/// ranking loss.
struct PairMask {
    bool direct_referenced = true;
    bool referenced_human = true;
    bool direct_human = true;

    bool any() const { return direct_referenced || referenced_human || direct_human; }
    bool operator==(const PairMask&) const = default;
};

/// A pair is active iff min(f_a, f_b) > sigma (strict).
PairMask pair_mask(std::string_view triplet_id, const QualityTable& table, double sigma);

enum class JudgeDomain { code, open };

JudgeDomain parse_judge_domain(std::string_view name);

/// Version tag of the shipped judge templates.
std::string_view judge_template_version();

/// Fills the domain template with the instruction and response verbatim.
std::string render_judge_prompt(std::string_view instruction, std::string_view response,
                                JudgeDomain domain);
std::string render_judge_prompt(std::string_view instruction, std::string_view response,
                                std::string_view domain);

struct JudgeOptions {
    std::string endpoint;  // e.g. http://localhost:8080/judge
    std::string api_key;   // sent as "Authorization: Bearer <key>" when non-empty
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{200};
    std::chrono::seconds timeout{30};
};

/// POSTs {instruction, response, domain} and expects {helpfulness, correctness}.
/// Retries transport failures and 5xx replies with exponential backoff.
QualityRecord judge_remote(const JudgeOptions& options, std::string_view id, QualityRole role,
                           std::string_view instruction, std::string_view response,
                           JudgeDomain domain);

}  // namespace scar
