#include "vex/error.hpp"

namespace vex {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid-argument";
        case ErrorCode::UnsupportedDimension: return "unsupported-dimension";
        case ErrorCode::GridTooCoarse: return "grid-too-coarse";
        case ErrorCode::SupportEscape: return "support-escape";
        case ErrorCode::NotAHalfSpace: return "not-a-half-space";
        case ErrorCode::ExponentBelowOne: return "exponent-below-one";
        case ErrorCode::ExponentReachesDimension: return "exponent-reaches-dimension";
        case ErrorCode::IncompatibleGrids: return "incompatible-grids";
        case ErrorCode::NormOverflow: return "norm-overflow";
        case ErrorCode::ConjugateUnbounded: return "conjugate-unbounded";
        case ErrorCode::InvalidIntegrabilityExponent: return "invalid-integrability-exponent";
        case ErrorCode::NonnegativityViolation: return "nonnegativity-violation";
        case ErrorCode::EmptyMeasure: return "empty-measure";
        case ErrorCode::ProblemTooLarge: return "problem-too-large";
        case ErrorCode::NoConvergence: return "no-convergence";
        case ErrorCode::EmptyFamily: return "empty-family";
        case ErrorCode::NormalizationViolation: return "normalization-violation";
        case ErrorCode::ConstantChainFailure: return "constant-chain-failure";
        case ErrorCode::UnboundedH: return "unbounded-h";
        case ErrorCode::ConfigError: return "config-error";
        case ErrorCode::IoError: return "io-error";
    }
    return "unknown-error";
}

}  // namespace vex
