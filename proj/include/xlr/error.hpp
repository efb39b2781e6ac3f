#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xlr {

enum class ErrorCode {
    io,
    json,
    schema,
    duplicate_id,
    invalid_argument,
    diff_parse,
    diff_apply,
    diff_invalid,
    template_invalid,
    reply_parse,
    provider,
    inconsistent,
    unsupported_pair,
    lex,
    numeric,
    protocol,
    backend,
    guard,
    fingerprint_mismatch,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every module reports failures through this type; the code is stable and
// the message carries the location detail (line number, hunk index, ...).
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace xlr
