#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace pbitsim::cli {

using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Anything wrong with the effective configuration or its inputs (exit 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

[[nodiscard]] json load_config_file(const std::string& path);

/// Replaces top-level keys of `config` with those of `overrides`. Every
/// override key must already exist in `config`.
void overlay(json& config, const json& overrides, const std::string& where);

// Typed accessors; all throw ConfigError on missing keys or wrong types.
[[nodiscard]] double number(const json& config, const std::string& key);
[[nodiscard]] std::optional<double> optional_number(const json& config, const std::string& key);
[[nodiscard]] double positive(const json& config, const std::string& key);
/// Non-negative integer; integral floats such as 1e6 are accepted.
[[nodiscard]] std::uint64_t count(const json& config, const std::string& key);
[[nodiscard]] bool flag(const json& config, const std::string& key);
[[nodiscard]] std::string text(const json& config, const std::string& key);
[[nodiscard]] std::vector<double> number_list(const json& config, const std::string& key);

/// Seed, command name and effective config of one run; source of every
/// metadata header.
struct RunInfo {
    std::string command;
    std::uint64_t seed = 1;
    json config;

    [[nodiscard]] std::string canonical() const;
    /// "# pbitsim ..." line for CSV outputs.
    [[nodiscard]] std::string header() const;
    /// "meta" object for JSON outputs.
    [[nodiscard]] json meta() const;
};

/// Output files held in memory until the whole run has succeeded.
class OutputSet {
public:
    void add(std::string name, std::string content);
    [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& files() const noexcept {
        return files_;
    }
    /// Creates `dir` and writes every file. Throws std::runtime_error on I/O failure.
    void write(const std::filesystem::path& dir) const;

private:
    std::vector<std::pair<std::string, std::string>> files_;
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. When several calls
/// throw, the exception of the lowest index is rethrown.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

}  // namespace pbitsim::cli
