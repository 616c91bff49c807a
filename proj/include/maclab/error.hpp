#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace maclab {

enum class ErrorCode {
    AlphaSumMismatch,
    NonPositiveAlpha,
    LengthMismatch,
    ZeroBits,
    DegenerateConstellation,
    TooFewPoints,
    ShapeMismatch,
    LabelOutOfRange,
    MissingSnrForRateObjective,
    UnsupportedOrder,
    ModelScenarioMismatch,
    CollapsedEncoder,
    InvalidArgument,
    ParseError,
    IoError,
};

std::string_view to_string(ErrorCode code);

// Validation errors map to CLI exit code 2, numerical failures to 3.
bool is_numerical_failure(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what);
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace maclab
