#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sixway {

enum class ErrorCode {
    invalid_argument,
    dimension_mismatch,
    io_failure,
    bad_magic,
    unsupported_version,
    truncated,
    non_finite,
    missing_record,
    unexpected_record,
    duplicate_record,
    shape_mismatch,
    unknown_kind,
    out_of_range,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::invalid_argument: return "invalid argument";
    case ErrorCode::dimension_mismatch: return "dimension mismatch";
    case ErrorCode::io_failure: return "i/o failure";
    case ErrorCode::bad_magic: return "bad magic";
    case ErrorCode::unsupported_version: return "unsupported version";
    case ErrorCode::truncated: return "truncated";
    case ErrorCode::non_finite: return "non-finite value";
    case ErrorCode::missing_record: return "missing record";
    case ErrorCode::unexpected_record: return "unexpected record";
    case ErrorCode::duplicate_record: return "duplicate record";
    case ErrorCode::shape_mismatch: return "shape mismatch";
    case ErrorCode::unknown_kind: return "unknown kind";
    case ErrorCode::out_of_range: return "out of range";
    }
    return "error";
}

/// Library-wide exception. The message is prefixed with the code's text so
/// callers that only log `what()` still see which failure occurred.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) {
    throw Error(code, detail);
}

inline void require(bool condition, ErrorCode code, const std::string& detail) {
    if (!condition) fail(code, detail);
}

} // namespace sixway
