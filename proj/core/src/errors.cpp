#include "pbitsim/errors.hpp"

namespace pbitsim {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::UnimodalTrace: return "UnimodalTrace";
        case ErrorKind::ZeroVariance: return "ZeroVariance";
        case ErrorKind::FitDiverged: return "FitDiverged";
        case ErrorKind::TooFewTransitions: return "TooFewTransitions";
        case ErrorKind::NoWindow: return "NoWindow";
        case ErrorKind::AllClamped: return "AllClamped";
        case ErrorKind::TooLarge: return "TooLarge";
    }
    return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

}  // namespace pbitsim
