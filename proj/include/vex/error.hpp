#pragma once

#include <stdexcept>
#include <string>

namespace vex {

// Error taxonomy shared by all modules. Each failure mode carries a stable
// code so callers (and the suite runner) can dispatch without string matching.
enum class ErrorCode {
    InvalidArgument,
    UnsupportedDimension,
    GridTooCoarse,
    SupportEscape,
    NotAHalfSpace,
    ExponentBelowOne,
    ExponentReachesDimension,
    IncompatibleGrids,
    NormOverflow,
    ConjugateUnbounded,
    InvalidIntegrabilityExponent,
    NonnegativityViolation,
    EmptyMeasure,
    ProblemTooLarge,
    NoConvergence,
    EmptyFamily,
    NormalizationViolation,
    ConstantChainFailure,
    UnboundedH,
    ConfigError,
    IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace vex
