#include "cli/config.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "pbitsim/io.hpp"
#include "pbitsim/version.hpp"

namespace pbitsim::cli {

namespace {

const json& at(const json& config, const std::string& key) {
    const auto it = config.find(key);
    if (it == config.end()) {
        throw ConfigError("missing config key '" + key + "'");
    }
    return *it;
}

}  // namespace

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    json j;
    try {
        j = json::parse(ss.str());
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError(path + ": expected a JSON object");
    }
    return j;
}

void overlay(json& config, const json& overrides, const std::string& where) {
    for (const auto& [key, value] : overrides.items()) {
        if (!config.contains(key)) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
        config[key] = value;
    }
}

double number(const json& config, const std::string& key) {
    const json& v = at(config, key);
    if (!v.is_number()) {
        throw ConfigError("config key '" + key + "' must be a number");
    }
    const double x = v.get<double>();
    if (!std::isfinite(x)) {
        throw ConfigError("config key '" + key + "' must be finite");
    }
    return x;
}

std::optional<double> optional_number(const json& config, const std::string& key) {
    if (at(config, key).is_null()) {
        return std::nullopt;
    }
    return number(config, key);
}

double positive(const json& config, const std::string& key) {
    const double x = number(config, key);
    if (!(x > 0.0)) {
        throw ConfigError("config key '" + key + "' must be > 0");
    }
    return x;
}

std::uint64_t count(const json& config, const std::string& key) {
    const json& v = at(config, key);
    if (v.is_number_unsigned()) {
        return v.get<std::uint64_t>();
    }
    if (v.is_number()) {
        const double x = v.get<double>();
        if (x >= 0.0 && x <= 1e15 && std::floor(x) == x) {
            return static_cast<std::uint64_t>(x);
        }
    }
    throw ConfigError("config key '" + key + "' must be a non-negative integer");
}

bool flag(const json& config, const std::string& key) {
    const json& v = at(config, key);
    if (!v.is_boolean()) {
        throw ConfigError("config key '" + key + "' must be true or false");
    }
    return v.get<bool>();
}

std::string text(const json& config, const std::string& key) {
    const json& v = at(config, key);
    if (!v.is_string()) {
        throw ConfigError("config key '" + key + "' must be a string");
    }
    return v.get<std::string>();
}

std::vector<double> number_list(const json& config, const std::string& key) {
    const json& v = at(config, key);
    if (!v.is_array()) {
        throw ConfigError("config key '" + key + "' must be an array of numbers");
    }
    std::vector<double> out;
    for (const json& x : v) {
        if (!x.is_number() || !std::isfinite(x.get<double>())) {
            throw ConfigError("config key '" + key + "' must be an array of numbers");
        }
        out.push_back(x.get<double>());
    }
    return out;
}

std::string RunInfo::canonical() const {
    return command + '\n' + config.dump();
}

std::string RunInfo::header() const {
    return io::metadata_line(seed, canonical());
}

json RunInfo::meta() const {
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(io::fnv1a(canonical())));
    return json{{"tool", "pbitsim"},
                {"version", kVersion},
                {"command", command},
                {"seed", seed},
                {"config_hash", hash}};
}

void OutputSet::add(std::string name, std::string content) {
    files_.emplace_back(std::move(name), std::move(content));
}

void OutputSet::write(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& [name, content] : files_) {
        const auto path = dir / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << content;
        out.close();
        if (!out) {
            throw std::runtime_error("failed to write " + path.string());
        }
    }
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
    std::vector<std::exception_ptr> errors(n);
    const std::size_t workers = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back(work);
    }
    for (auto& t : pool) {
        t.join();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace pbitsim::cli
