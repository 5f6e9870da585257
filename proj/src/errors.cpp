#include "bsde/errors.hpp"

namespace bsde {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NonConvexDriver: return "NonConvexDriver";
        case ErrorCode::NumericalOverflow: return "NumericalOverflow";
        case ErrorCode::EmptySubgradient: return "EmptySubgradient";
        case ErrorCode::UnknownDriver: return "UnknownDriver";
        case ErrorCode::BadParams: return "BadParams";
        case ErrorCode::TiltOutOfRange: return "TiltOutOfRange";
        case ErrorCode::NotADensity: return "NotADensity";
        case ErrorCode::Infeasible: return "Infeasible";
        case ErrorCode::NonPositiveDriver: return "NonPositiveDriver";
        case ErrorCode::UnboundedDual: return "UnboundedDual";
        case ErrorCode::InfinitePenalty: return "InfinitePenalty";
        case ErrorCode::NotSupermartingale: return "NotSupermartingale";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

}  // namespace bsde
