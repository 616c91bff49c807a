#include "maclab/error.hpp"

namespace maclab {

std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::AlphaSumMismatch: return "AlphaSumMismatch";
    case ErrorCode::NonPositiveAlpha: return "NonPositiveAlpha";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroBits: return "ZeroBits";
    case ErrorCode::DegenerateConstellation: return "DegenerateConstellation";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::MissingSnrForRateObjective: return "MissingSnrForRateObjective";
    case ErrorCode::UnsupportedOrder: return "UnsupportedOrder";
    case ErrorCode::ModelScenarioMismatch: return "ModelScenarioMismatch";
    case ErrorCode::CollapsedEncoder: return "CollapsedEncoder";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

bool is_numerical_failure(ErrorCode code)
{
    return code == ErrorCode::CollapsedEncoder || code == ErrorCode::DegenerateConstellation;
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
{
}

}  // namespace maclab
