#include "scar/error.hpp"

namespace scar {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::argument: return "argument error";
        case ErrorKind::config: return "config error";
        case ErrorKind::parse: return "parse error";
        case ErrorKind::schema: return "schema error";
        case ErrorKind::duplicate_id: return "duplicate-id error";
        case ErrorKind::lookup: return "lookup error";
        case ErrorKind::validation: return "validation error";
        case ErrorKind::format: return "format error";
        case ErrorKind::corruption: return "corruption error";
        case ErrorKind::shape: return "shape error";
        case ErrorKind::degenerate_data: return "degenerate-data error";
        case ErrorKind::io: return "io error";
        case ErrorKind::transport: return "transport error";
        case ErrorKind::protocol: return "protocol error";
    }
    return "error";
}

}  // namespace scar
