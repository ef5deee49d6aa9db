#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pbitsim {

/// Recoverable analysis/runtime failures. Precondition violations on
/// arguments are reported with std::invalid_argument instead.
enum class ErrorKind {
    UnimodalTrace,
    ZeroVariance,
    FitDiverged,
    TooFewTransitions,
    NoWindow,
    AllClamped,
    TooLarge,
};

[[nodiscard]] std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what);

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace pbitsim
