#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace heuler {

enum class ErrorKind {
    InvalidRadii,
    InvalidAngle,
    InvalidGrid,
    ParameterDomain,
    SingularityInRange,
    OutOfValidity,
    ZeroSwirl,
    SingularSwirl,
    NotDivergenceFree,
    InconsistentScenario,
    InvalidOperator,
    InsufficientOverlap,
    MonotonicityViolated,
    EmptyOverlap,
    DegenerateField,
    EdgeNotOnGrid,
    ConfigError,
    PipelineFailure,
    IoError,
};

constexpr std::string_view to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::InvalidRadii: return "InvalidRadii";
        case ErrorKind::InvalidAngle: return "InvalidAngle";
        case ErrorKind::InvalidGrid: return "InvalidGrid";
        case ErrorKind::ParameterDomain: return "ParameterDomain";
        case ErrorKind::SingularityInRange: return "SingularityInRange";
        case ErrorKind::OutOfValidity: return "OutOfValidity";
        case ErrorKind::ZeroSwirl: return "ZeroSwirl";
        case ErrorKind::SingularSwirl: return "SingularSwirl";
        case ErrorKind::NotDivergenceFree: return "NotDivergenceFree";
        case ErrorKind::InconsistentScenario: return "InconsistentScenario";
        case ErrorKind::InvalidOperator: return "InvalidOperator";
        case ErrorKind::InsufficientOverlap: return "InsufficientOverlap";
        case ErrorKind::MonotonicityViolated: return "MonotonicityViolated";
        case ErrorKind::EmptyOverlap: return "EmptyOverlap";
        case ErrorKind::DegenerateField: return "DegenerateField";
        case ErrorKind::EdgeNotOnGrid: return "EdgeNotOnGrid";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::PipelineFailure: return "PipelineFailure";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

/// Library-wide exception; `kind()` identifies the contract that was violated.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Error carrying the angle at which a pole or singular point was found.
class LocatedError : public Error {
public:
    LocatedError(ErrorKind kind, const std::string& what, double theta)
        : Error(kind, what), theta_(theta) {}

    double theta() const noexcept { return theta_; }

private:
    double theta_;
};

/// Error carrying a grid node (i along s, j along theta).
class NodeError : public Error {
public:
    NodeError(ErrorKind kind, const std::string& what, int i, int j)
        : Error(kind, what), i_(i), j_(j) {}

    int i() const noexcept { return i_; }
    int j() const noexcept { return j_; }

private:
    int i_;
    int j_;
};

}  // namespace heuler
