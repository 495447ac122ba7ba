#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace scar::jsonl {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Calls `fn(object, line_number)` for every non-blank line. Lines that are
/// not JSON objects raise a parse error naming the line.
void for_each_object(std::string_view text, std::string_view origin,
                     const std::function<void(const nlohmann::json&, std::size_t)>& fn);

/// Required string field. Raises a schema error naming the line.
std::string require_string(const nlohmann::json& obj, std::string_view key,
                           std::string_view origin, std::size_t line);

/// Required finite number field.
double require_number(const nlohmann::json& obj, std::string_view key, std::string_view origin,
                      std::size_t line);

std::string where(std::string_view origin, std::size_t line);

}  // namespace scar::jsonl
