#include "scar/jsonl.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "scar/error.hpp"

namespace scar::jsonl {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) fail(ErrorKind::io, "read failed: " + path.string());
    return std::move(buf).str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::io, "cannot open for writing: " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) fail(ErrorKind::io, "write failed: " + path.string());
}

std::string where(std::string_view origin, std::size_t line) {
    return std::string(origin) + ":" + std::to_string(line);
}

void for_each_object(std::string_view text, std::string_view origin,
                     const std::function<void(const nlohmann::json&, std::size_t)>& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto end = text.find('\n', pos);
        auto line = text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos);
        pos = end == std::string_view::npos ? text.size() : end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            fail(ErrorKind::parse, where(origin, line_no) + ": malformed JSON: " + e.what());
        }
        if (!obj.is_object()) {
            fail(ErrorKind::parse, where(origin, line_no) + ": expected a JSON object");
        }
        fn(obj, line_no);
    }
}

std::string require_string(const nlohmann::json& obj, std::string_view key,
                           std::string_view origin, std::size_t line) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        fail(ErrorKind::schema,
             where(origin, line) + ": missing key \"" + std::string(key) + "\"");
    }
    if (!it->is_string()) {
        fail(ErrorKind::schema,
             where(origin, line) + ": key \"" + std::string(key) + "\" must be a string");
    }
    return it->get<std::string>();
}

double require_number(const nlohmann::json& obj, std::string_view key, std::string_view origin,
                      std::size_t line) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        fail(ErrorKind::schema,
             where(origin, line) + ": missing key \"" + std::string(key) + "\"");
    }
    if (!it->is_number()) {
        fail(ErrorKind::schema,
             where(origin, line) + ": key \"" + std::string(key) + "\" must be a number");
    }
    const double v = it->get<double>();
    if (!std::isfinite(v)) {
        fail(ErrorKind::validation,
             where(origin, line) + ": key \"" + std::string(key) + "\" is not finite");
    }
    return v;
}

}  // namespace scar::jsonl
