#include "scar/corpus.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <unordered_map>

#include "scar/error.hpp"
#include "scar/jsonl.hpp"
#include "scar/rng.hpp"

namespace scar {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool blank(std::string_view s) {
    for (char c : s)
        if (!is_space(c)) return false;
    return true;
}

std::string now_utc() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string require_text(const nlohmann::json& obj, std::string_view key, std::string_view origin,
                         std::size_t line) {
    auto s = jsonl::require_string(obj, key, origin, line);
    if (blank(s)) {
        fail(ErrorKind::schema,
             jsonl::where(origin, line) + ": \"" + std::string(key) + "\" is empty");
    }
    return s;
}

// Tracks first-seen line per id and raises on a repeat.
class IdRegistry {
public:
    explicit IdRegistry(std::string_view origin) : origin_(origin) {}

    void add(const std::string& id, std::size_t line) {
        const auto [it, inserted] = seen_.emplace(id, line);
        if (!inserted) {
            fail(ErrorKind::duplicate_id, std::string(origin_) + ": duplicate id \"" + id +
                                              "\" on lines " + std::to_string(it->second) +
                                              " and " + std::to_string(line));
        }
    }

private:
    std::string_view origin_;
    std::unordered_map<std::string, std::size_t> seen_;
};

}  // namespace

std::string_view to_string(Role role) noexcept {
    switch (role) {
        case Role::instruction: return "instruction";
        case Role::response: return "response";
        case Role::human: return "human";
        case Role::referenced: return "referenced";
        case Role::direct: return "direct";
    }
    return "response";
}

Role parse_role(std::string_view name) {
    for (Role r : {Role::instruction, Role::response, Role::human, Role::referenced, Role::direct}) {
        if (to_string(r) == name) return r;
    }
    fail(ErrorKind::argument, "unknown role \"" + std::string(name) + "\"");
}

std::string text_key(std::string_view id, Role role) {
    std::string key(id);
    key += ':';
    key += to_string(role);
    return key;
}

Dataset parse_examples(std::string_view text, std::string_view origin) {
    Dataset ds;
    IdRegistry ids(origin);
    jsonl::for_each_object(text, origin, [&](const nlohmann::json& obj, std::size_t line) {
        Example ex;
        ex.id = jsonl::require_string(obj, "id", origin, line);
        if (ex.id.empty()) fail(ErrorKind::schema, jsonl::where(origin, line) + ": empty id");
        ex.instruction = require_text(obj, "instruction", origin, line);
        ex.response = require_text(obj, "response", origin, line);
        if (auto it = obj.find("source"); it != obj.end() && !it->is_null()) {
            if (!it->is_string()) {
                fail(ErrorKind::schema, jsonl::where(origin, line) + ": \"source\" must be a string");
            }
            ex.source = it->get<std::string>();
        }
        if (auto it = obj.find("meta"); it != obj.end() && !it->is_null()) {
            if (!it->is_object()) {
                fail(ErrorKind::schema, jsonl::where(origin, line) + ": \"meta\" must be an object");
            }
            for (const auto& [k, v] : it->items()) {
                if (!v.is_string()) {
                    fail(ErrorKind::schema,
                         jsonl::where(origin, line) + ": meta values must be strings");
                }
                ex.meta.emplace(k, v.get<std::string>());
            }
        }
        ex.line = line;
        ids.add(ex.id, line);
        ds.records.push_back(std::move(ex));
    });
    return ds;
}

TripletSet parse_triplets(std::string_view text, std::string_view origin) {
    TripletSet ts;
    IdRegistry ids(origin);
    jsonl::for_each_object(text, origin, [&](const nlohmann::json& obj, std::size_t line) {
        Triplet t;
        t.id = jsonl::require_string(obj, "id", origin, line);
        if (t.id.empty()) fail(ErrorKind::schema, jsonl::where(origin, line) + ": empty id");
        t.instruction = require_text(obj, "instruction", origin, line);
        t.human = require_text(obj, "human", origin, line);
        t.referenced = require_text(obj, "referenced", origin, line);
        t.direct = require_text(obj, "direct", origin, line);
        t.line = line;
        ids.add(t.id, line);
        ts.records.push_back(std::move(t));
    });
    return ts;
}

Dataset load_examples(const std::filesystem::path& path) {
    auto ds = parse_examples(jsonl::read_file(path), path.string());
    ds.provenance = {path.string(), now_utc()};
    return ds;
}

TripletSet load_triplets(const std::filesystem::path& path) {
    auto ts = parse_triplets(jsonl::read_file(path), path.string());
    ts.provenance = {path.string(), now_utc()};
    return ts;
}

std::string serialize_examples(const Dataset& ds) {
    std::string out;
    for (const auto& ex : ds.records) {
        nlohmann::ordered_json obj;
        obj["id"] = ex.id;
        obj["instruction"] = ex.instruction;
        obj["response"] = ex.response;
        if (!ex.source.empty()) obj["source"] = ex.source;
        if (!ex.meta.empty()) obj["meta"] = ex.meta;
        out += obj.dump();
        out += '\n';
    }
    return out;
}

std::string serialize_triplets(const TripletSet& ts) {
    std::string out;
    for (const auto& t : ts.records) {
        nlohmann::ordered_json obj;
        obj["id"] = t.id;
        obj["instruction"] = t.instruction;
        obj["human"] = t.human;
        obj["referenced"] = t.referenced;
        obj["direct"] = t.direct;
        out += obj.dump();
        out += '\n';
    }
    return out;
}

void write_examples(const Dataset& ds, const std::filesystem::path& path) {
    jsonl::write_file(path, serialize_examples(ds));
}

void write_triplets(const TripletSet& ts, const std::filesystem::path& path) {
    jsonl::write_file(path, serialize_triplets(ts));
}

nlohmann::json DedupReport::to_json() const {
    nlohmann::json j;
    j["removed"] = removed;
    j["kept_map"] = kept_map;
    return j;
}

std::string normalize_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += c;
    }
    return out;
}

std::pair<Dataset, DedupReport> dedup_exact(const Dataset& ds) {
    Dataset kept;
    kept.provenance = ds.provenance;
    DedupReport report;
    std::unordered_map<std::string, std::string> first_by_key;
    for (const auto& ex : ds.records) {
        const auto instr = normalize_whitespace(ex.instruction);
        std::string key = std::to_string(instr.size());
        key += ':';
        key += instr;
        key += normalize_whitespace(ex.response);
        const auto [it, inserted] = first_by_key.emplace(std::move(key), ex.id);
        if (inserted) {
            kept.records.push_back(ex);
        } else {
            report.removed.push_back(ex.id);
            report.kept_map[ex.id] = it->second;
        }
    }
    return {std::move(kept), std::move(report)};
}

nlohmann::json FilterReport::to_json() const {
    nlohmann::json j;
    j["kept"] = kept;
    j["removed"] = removed;
    j["removed_ids"] = removed_ids;
    return j;
}

std::pair<TripletSet, FilterReport> filter_surprisal_deviation(const TripletSet& ts,
                                                               const PplLookup& ppl,
                                                               SurprisalFilter thresholds) {
    if (!(thresholds.abs_tol > 0.0) || !(thresholds.cap > 0.0)) {
        fail(ErrorKind::argument, "surprisal filter thresholds must be positive");
    }
    auto lookup = [&](const std::string& id, Role role) {
        const auto key = text_key(id, role);
        const auto it = ppl.find(key);
        if (it == ppl.end()) fail(ErrorKind::lookup, "no perplexity for " + key);
        return it->second;
    };

    TripletSet out;
    out.provenance = ts.provenance;
    FilterReport report;
    for (const auto& t : ts.records) {
        const double ref = lookup(t.id, Role::referenced);
        const double human = lookup(t.id, Role::human);
        if (std::abs(ref - human) <= thresholds.abs_tol && ref <= thresholds.cap) {
            out.records.push_back(t);
            ++report.kept;
        } else {
            report.removed_ids.push_back(t.id);
            ++report.removed;
        }
    }
    return {std::move(out), std::move(report)};
}

void SplitSpec::validate() const {
    for (double f : {train_fraction, val_fraction, test_fraction}) {
        if (!(f >= 0.0 && f <= 1.0)) fail(ErrorKind::config, "split fractions must lie in [0, 1]");
    }
    if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-12) {
        fail(ErrorKind::config, "split fractions must sum to 1");
    }
}

Splits split(const TripletSet& ts, const SplitSpec& spec) {
    spec.validate();
    std::vector<std::size_t> order(ts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(spec.seed);
    rng.shuffle(std::span<std::size_t>(order));

    // The 1e-9 slack absorbs binary representation error (0.29 * 100 = 28.999...).
    const auto n = static_cast<double>(ts.size());
    const auto n_val = static_cast<std::size_t>(std::floor(spec.val_fraction * n + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(spec.test_fraction * n + 1e-9));
    const std::size_t n_train = ts.size() - n_val - n_test;

    Splits out;
    for (auto* part : {&out.train, &out.val, &out.test}) part->provenance = ts.provenance;
    for (std::size_t i = 0; i < order.size(); ++i) {
        auto& dest = i < n_train ? out.train : (i < n_train + n_val ? out.val : out.test);
        dest.records.push_back(ts.records[order[i]]);
    }
    return out;
}

}  // namespace scar
