#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bss {

/// Failure categories raised by the toolkit. The CLI maps them to exit codes.
enum class ErrorKind {
    // domain-model
    BikeNotDocked,
    BikeNotInTransit,
    StationFull,
    UnknownStation,
    InvalidStationMap,
    InvalidRecord,
    // datagen / formats
    InvalidConfig,
    MalformedRow,
    // learners
    IndexOutOfRange,
    NegativeComponent,
    EmptyVector,
    InsufficientData,
    NonFiniteLoss,
    SingularSystem,
    DimensionMismatch,
    SpectralRadiusFailure,
    UntrainedModel,
    // evaluation
    TooFewSamples,
    LengthMismatch,
    Empty,
    UnknownClass,
    // featuremodel
    InvalidModel,
    MissingReport,
    InvalidWeights,
    // persistence
    SchemaMismatch,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Parse failure carrying the 1-based line number of the offending row.
class MalformedRow : public Error {
public:
    MalformedRow(std::size_t line_no, const std::string& reason)
        : Error(ErrorKind::MalformedRow, "line " + std::to_string(line_no) + ": " + reason),
          line_no_(line_no) {}

    std::size_t line_no() const noexcept { return line_no_; }

private:
    std::size_t line_no_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace bss
