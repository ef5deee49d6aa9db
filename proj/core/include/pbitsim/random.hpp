#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string_view>

namespace pbitsim {

using Rng = std::mt19937_64;

/// Derives an independent child seed from a master seed and a stream index
/// (splitmix64 finalizer over master + golden-ratio * (index + 1)).
/// The mapping depends only on (master, index), so adding streams never
/// perturbs existing ones.
[[nodiscard]] std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) noexcept;

using WarningFn = std::function<void(std::string_view)>;

/// Default warning sink: one line to stderr prefixed "warning: ".
void stderr_warning(std::string_view message);

}  // namespace pbitsim
