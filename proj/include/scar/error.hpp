#pragma once

#include <stdexcept>
#include <string>

namespace scar {

/// Failure categories shared by every module. The CLI maps them onto exit codes.
enum class ErrorKind {
    argument,
    config,
    parse,
    schema,
    duplicate_id,
    lookup,
    validation,
    format,
    corruption,
    shape,
    degenerate_data,
    io,
    transport,
    protocol,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace scar
