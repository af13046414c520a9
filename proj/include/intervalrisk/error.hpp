#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace intervalrisk {

enum class ErrorCode {
    UnknownHop,
    IllegalAttribute,
    MalformedInterval,
    EmptyDataset,
    DegenerateVariable,
    InterceptRequired,
    UnknownTerm,
    SingularDesign,
    InsufficientData,
    NonConvergence,
    NotConverged,
    InvalidDF,
    NegativeStat,
    NotNested,
    MismatchedData,
    ZeroDF,
    IterationCapExceeded,
    InfeasibleSpec,
    NoStudyLoaded,
    ValidationFailed,
    StorageFailure,
    EmptyLog,
    ParseError,
    InvalidArgument,
};

inline std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownHop: return "UnknownHop";
        case ErrorCode::IllegalAttribute: return "IllegalAttribute";
        case ErrorCode::MalformedInterval: return "MalformedInterval";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::DegenerateVariable: return "DegenerateVariable";
        case ErrorCode::InterceptRequired: return "InterceptRequired";
        case ErrorCode::UnknownTerm: return "UnknownTerm";
        case ErrorCode::SingularDesign: return "SingularDesign";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::NonConvergence: return "NonConvergence";
        case ErrorCode::NotConverged: return "NotConverged";
        case ErrorCode::InvalidDF: return "InvalidDF";
        case ErrorCode::NegativeStat: return "NegativeStat";
        case ErrorCode::NotNested: return "NotNested";
        case ErrorCode::MismatchedData: return "MismatchedData";
        case ErrorCode::ZeroDF: return "ZeroDF";
        case ErrorCode::IterationCapExceeded: return "IterationCapExceeded";
        case ErrorCode::InfeasibleSpec: return "InfeasibleSpec";
        case ErrorCode::NoStudyLoaded: return "NoStudyLoaded";
        case ErrorCode::ValidationFailed: return "ValidationFailed";
        case ErrorCode::StorageFailure: return "StorageFailure";
        case ErrorCode::EmptyLog: return "EmptyLog";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// One rejected item of a batch: its position in the batch and why.
struct RecordViolation {
    std::size_t index = 0;
    ErrorCode code = ErrorCode::MalformedInterval;
    std::string message;
};

/// Raised when a batch fails validation; nothing from the batch is kept.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<RecordViolation> violations)
        : Error(ErrorCode::ValidationFailed,
                std::to_string(violations.size()) + " record(s) rejected"),
          violations_(std::move(violations)) {}

    const std::vector<RecordViolation>& violations() const noexcept { return violations_; }

private:
    std::vector<RecordViolation> violations_;
};

}  // namespace intervalrisk
