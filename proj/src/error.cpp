#include "responsivity/error.hpp"

#include <utility>

namespace responsivity {

const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::parse: return "parse error";
    case ErrorKind::validation: return "validation error";
    case ErrorKind::lookup: return "lookup error";
    case ErrorKind::argument: return "argument error";
    case ErrorKind::numeric: return "numeric error";
    case ErrorKind::state: return "state error";
    case ErrorKind::transport: return "transport error";
    case ErrorKind::protocol: return "protocol error";
    case ErrorKind::cache_miss: return "cache miss";
    case ErrorKind::quote_mismatch: return "quote mismatch";
    case ErrorKind::run: return "run error";
    }
    return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

TransportError::TransportError(const std::string& message, int attempts)
    : Error(ErrorKind::transport, message + " (after " + std::to_string(attempts) + " attempts)"),
      attempts_(attempts) {}

QuoteMismatchError::QuoteMismatchError(const std::string& message, std::size_t closest_offset)
    : Error(ErrorKind::quote_mismatch,
            message + " (closest match at offset " + std::to_string(closest_offset) + ")"),
      closest_offset_(closest_offset) {}

RunError::RunError(const std::string& message, std::vector<int> failed_turns)
    : Error(ErrorKind::run, message), failed_turns_(std::move(failed_turns)) {}

} // namespace responsivity
