#include "scar/quality.hpp"

#include <cmath>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "scar/error.hpp"
#include "scar/jsonl.hpp"

namespace scar {

namespace {

constexpr std::string_view kTemplateVersion = "judge-templates/1";

constexpr std::string_view kCodeTemplate =
    R"(You are reviewing an answer to a programming request.

Request:
{instruction}

Answer:
{response}

Rate the answer on two integer scales from 1 (worst) to 5 (best).
helpfulness: does the answer address the request and help the user get the task done?
correctness: is the code and the explanation free of errors, and would the code run as described?

Reply with a single JSON object and nothing else, for example:
{"helpfulness": 4, "correctness": 5}
)";

constexpr std::string_view kOpenTemplate =
    R"(You are reviewing a response to a user's request.

Request:
{instruction}

Response:
{response}

Rate the response on two integer scales from 1 (worst) to 5 (best).
helpfulness: does the response address the request in a useful and complete way?
correctness: are the statements in the response accurate and free of errors?

Reply with a single JSON object and nothing else, for example:
{"helpfulness": 4, "correctness": 5}
)";

void replace_once(std::string& text, std::string_view placeholder, std::string_view value) {
    const auto pos = text.find(placeholder);
    if (pos != std::string::npos) text.replace(pos, placeholder.size(), value);
}

// Splits "http://host:port/path" into ("http://host:port", "/path").
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    const auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos) {
        fail(ErrorKind::config, "judge endpoint must start with http:// (got '" + endpoint + "')");
    }
    const auto scheme = endpoint.substr(0, scheme_end);
    if (scheme != "http") {
        fail(ErrorKind::config, "judge endpoint scheme '" + scheme + "' is not supported");
    }
    const auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

double judge_score(const nlohmann::json& body, const char* key) {
    const auto it = body.find(key);
    if (it == body.end() || !it->is_number()) {
        fail(ErrorKind::protocol, std::string("judge reply lacks numeric '") + key + "'");
    }
    return it->get<double>();
}

}  // namespace

std::string_view to_string(QualityRole role) noexcept {
    switch (role) {
        case QualityRole::human: return "human";
        case QualityRole::referenced: return "referenced";
        case QualityRole::direct: return "direct";
        case QualityRole::single: return "single";
    }
    return "single";
}

QualityRole parse_quality_role(std::string_view name) {
    if (name == "human") return QualityRole::human;
    if (name == "referenced") return QualityRole::referenced;
    if (name == "direct") return QualityRole::direct;
    if (name == "single") return QualityRole::single;
    fail(ErrorKind::argument, "unknown quality role '" + std::string(name) + "'");
}

void QualityRecord::validate() const {
    auto check = [&](double v, const char* name) {
        if (!std::isfinite(v) || v < 1.0 || v > 5.0) {
            fail(ErrorKind::validation, "quality " + std::string(name) + " for '" + id +
                                            "' must be in [1, 5], got " + std::to_string(v));
        }
    };
    check(helpfulness, "helpfulness");
    check(correctness, "correctness");
}

double quality_of(const QualityRecord& rec) { return (rec.helpfulness + rec.correctness) / 2.0; }

std::string quality_key(std::string_view id, QualityRole role) {
    std::string key(id);
    key += ':';
    key += to_string(role);
    return key;
}

QualityTable parse_quality(std::string_view text, std::string_view origin) {
    QualityTable table;
    jsonl::for_each_object(text, origin, [&](const nlohmann::json& obj, std::size_t line) {
        QualityRecord rec;
        rec.id = jsonl::require_string(obj, "id", origin, line);
        const auto role = jsonl::require_string(obj, "role", origin, line);
        try {
            rec.role = parse_quality_role(role);
        } catch (const Error& e) {
            fail(ErrorKind::schema, jsonl::where(origin, line) + ": " + e.what());
        }
        rec.helpfulness = jsonl::require_number(obj, "helpfulness", origin, line);
        rec.correctness = jsonl::require_number(obj, "correctness", origin, line);
        try {
            rec.validate();
        } catch (const Error& e) {
            fail(e.kind(), jsonl::where(origin, line) + ": " + e.what());
        }
        auto key = quality_key(rec.id, rec.role);
        if (!table.emplace(key, std::move(rec)).second) {
            fail(ErrorKind::duplicate_id,
                 jsonl::where(origin, line) + ": duplicate quality entry '" + key + "'");
        }
    });
    return table;
}

QualityTable load_quality(const std::filesystem::path& path) {
    return parse_quality(jsonl::read_file(path), path.string());
}

PairMask pair_mask(std::string_view triplet_id, const QualityTable& table, double sigma) {
    auto f = [&](QualityRole role) {
        const auto key = quality_key(triplet_id, role);
        const auto it = table.find(key);
        if (it == table.end()) fail(ErrorKind::lookup, "no quality entry for '" + key + "'");
        return quality_of(it->second);
    };
    const double f_d = f(QualityRole::direct);
    const double f_r = f(QualityRole::referenced);
    const double f_h = f(QualityRole::human);
    return {std::min(f_d, f_r) > sigma, std::min(f_r, f_h) > sigma, std::min(f_d, f_h) > sigma};
}

JudgeDomain parse_judge_domain(std::string_view name) {
    if (name == "code") return JudgeDomain::code;
    if (name == "open") return JudgeDomain::open;
    fail(ErrorKind::argument, "unknown judge domain '" + std::string(name) + "' (code|open)");
}

std::string_view judge_template_version() { return kTemplateVersion; }

std::string render_judge_prompt(std::string_view instruction, std::string_view response,
                                JudgeDomain domain) {
    std::string text(domain == JudgeDomain::code ? kCodeTemplate : kOpenTemplate);
    // Response first so an instruction containing "{response}" is left alone.
    replace_once(text, "{response}", response);
    const auto pos = text.find("{instruction}");
    text.replace(pos, std::string_view("{instruction}").size(), instruction);
    return text;
}

std::string render_judge_prompt(std::string_view instruction, std::string_view response,
                                std::string_view domain) {
    return render_judge_prompt(instruction, response, parse_judge_domain(domain));
}

QualityRecord judge_remote(const JudgeOptions& options, std::string_view id, QualityRole role,
                           std::string_view instruction, std::string_view response,
                           JudgeDomain domain) {
    if (options.attempts < 1) fail(ErrorKind::config, "judge attempts must be >= 1");
    const auto [base, path] = split_endpoint(options.endpoint);

    nlohmann::json request;
    request["instruction"] = instruction;
    request["response"] = response;
    request["domain"] = domain == JudgeDomain::code ? "code" : "open";
    const std::string payload = request.dump();

    httplib::Headers headers;
    if (!options.api_key.empty()) headers.emplace("Authorization", "Bearer " + options.api_key);

    httplib::Client client(base);
    client.set_connection_timeout(options.timeout);
    client.set_read_timeout(options.timeout);
    client.set_write_timeout(options.timeout);

    std::string last_error;
    auto backoff = options.initial_backoff;
    for (int attempt = 1; attempt <= options.attempts; ++attempt) {
        auto res = client.Post(path, headers, payload, "application/json");
        if (!res) {
            last_error = "request failed: " + httplib::to_string(res.error());
        } else if (res->status >= 500) {
            last_error = "server returned HTTP " + std::to_string(res->status);
        } else if (res->status != 200) {
            fail(ErrorKind::protocol,
                 "judge returned HTTP " + std::to_string(res->status) + " for '" + std::string(id) + "'");
        } else {
            nlohmann::json body;
            try {
                body = nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception&) {
                fail(ErrorKind::protocol, "judge reply is not JSON");
            }
            if (!body.is_object()) fail(ErrorKind::protocol, "judge reply is not a JSON object");
            QualityRecord rec;
            rec.id = std::string(id);
            rec.role = role;
            // An out-of-range helpfulness is reported even when correctness is missing.
            rec.helpfulness = judge_score(body, "helpfulness");
            rec.validate();
            rec.correctness = judge_score(body, "correctness");
            rec.validate();
            return rec;
        }
        if (attempt < options.attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    fail(ErrorKind::transport, "judge at " + options.endpoint + " failed after " +
                                   std::to_string(options.attempts) + " attempts: " + last_error);
}

}  // namespace scar
