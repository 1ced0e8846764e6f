#pragma once
// Error type shared by every module. The code lets the service map failures
// onto HTTP statuses without string matching.

#include <stdexcept>
#include <string>
#include <string_view>

namespace srta {

enum class ErrorCode {
    Parse,        // malformed input record or document
    Validation,   // well-formed but violates an invariant (duplicate id, range)
    Capacity,     // bank cannot supply a required quota
    Exhaustion,   // no unused question of a type remains
    State,        // operation not allowed in the session's current state
    Clock,        // timestamps out of order
    Domain,       // numeric argument outside its admissible range
    Shape,        // vector/matrix dimension mismatch
    Empty,        // operation needs at least one element
    NotFound,
    Conflict,
    Unauthorized,
    Forbidden,
    Integrity,    // signature or log verification failed
    Io,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::Parse: return "parse_error";
        case ErrorCode::Validation: return "validation_error";
        case ErrorCode::Capacity: return "capacity_error";
        case ErrorCode::Exhaustion: return "exhaustion_error";
        case ErrorCode::State: return "state_error";
        case ErrorCode::Clock: return "clock_error";
        case ErrorCode::Domain: return "domain_error";
        case ErrorCode::Shape: return "shape_error";
        case ErrorCode::Empty: return "empty_error";
        case ErrorCode::NotFound: return "not_found";
        case ErrorCode::Conflict: return "conflict";
        case ErrorCode::Unauthorized: return "unauthorized";
        case ErrorCode::Forbidden: return "forbidden";
        case ErrorCode::Integrity: return "integrity_error";
        case ErrorCode::Io: return "io_error";
    }
    return "unknown_error";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace srta
