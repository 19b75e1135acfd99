#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace docscan {

enum class ErrorCode {
    InvalidArgument,
    IoFailure,
    MalformedHeader,
    TruncatedData,
    NonFiniteValue,
    EmptyVocabulary,
    KTooLarge,
    LengthMismatch,
    DimensionMismatch,
    NonSimplexInput,
    NonFiniteGradient,
    NonSquareMatrix,
    InsufficientRuns,
    ParseError,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries a machine-readable code so the
/// CLI can print a single parsable error line.
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

}  // namespace docscan
