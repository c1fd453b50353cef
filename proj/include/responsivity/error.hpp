#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace responsivity {

enum class ErrorKind {
    parse,
    validation,
    lookup,
    argument,
    numeric,
    state,
    transport,
    protocol,
    cache_miss,
    quote_mismatch,
    run,
};

const char* to_string(ErrorKind kind);

// Base error for everything the toolkit throws on contract violations.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class TransportError : public Error {
public:
    TransportError(const std::string& message, int attempts);

    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

// A quoted segment that could not be located in its turn. `closest_offset` is
// the offset (in the whitespace-collapsed turn text) where the longest prefix
// of the quote matched.
class QuoteMismatchError : public Error {
public:
    QuoteMismatchError(const std::string& message, std::size_t closest_offset);

    std::size_t closest_offset() const noexcept { return closest_offset_; }

private:
    std::size_t closest_offset_;
};

class RunError : public Error {
public:
    RunError(const std::string& message, std::vector<int> failed_turns);

    const std::vector<int>& failed_turns() const noexcept { return failed_turns_; }

private:
    std::vector<int> failed_turns_;
};

} // namespace responsivity
