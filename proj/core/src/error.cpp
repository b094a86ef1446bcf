#include "missgraph/error.hpp"

namespace missgraph {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::Config: return "config";
        case ErrorCode::Parse: return "parse";
        case ErrorCode::Numeric: return "numeric";
        case ErrorCode::Convergence: return "convergence";
    }
    return "unknown";
}

}  // namespace missgraph
