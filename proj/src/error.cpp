#include "docscan/error.hpp"

namespace docscan {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::IoFailure: return "IoFailure";
        case ErrorCode::MalformedHeader: return "MalformedHeader";
        case ErrorCode::TruncatedData: return "TruncatedData";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::EmptyVocabulary: return "EmptyVocabulary";
        case ErrorCode::KTooLarge: return "KTooLarge";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonSimplexInput: return "NonSimplexInput";
        case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
        case ErrorCode::NonSquareMatrix: return "NonSquareMatrix";
        case ErrorCode::InsufficientRuns: return "InsufficientRuns";
        case ErrorCode::ParseError: return "ParseError";
    }
    return "Unknown";
}

}  // namespace docscan
