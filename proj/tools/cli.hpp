#pragma once

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scar/error.hpp"

namespace scar::cli {

/// 0 success, 2 usage or config, 3 data, 4 io.
int exit_code(ErrorKind kind) noexcept;

/// 16 hex digits of FNV-1a over the compact dump of the resolved settings.
std::string fingerprint(const nlohmann::ordered_json& resolved);

/// Entry point behind the `scar` binary. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace scar::cli
