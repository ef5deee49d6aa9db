#include "pbitsim/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pbitsim/version.hpp"

namespace pbitsim::io {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& message) {
    throw std::invalid_argument(message);
}

void emit_header(std::ostream& os, const std::string& header) {
    if (!header.empty()) {
        os << header << '\n';
    }
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) {
            field.pop_back();
        }
        while (!field.empty() && field.front() == ' ') {
            field.erase(field.begin());
        }
        out.push_back(field);
    }
    return out;
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        fail("not a number: '" + s + "'");
    }
    return v;
}

json parse_object(std::string_view text, const char* what) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(std::string(what) + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) {
        fail(std::string(what) + ": expected a JSON object");
    }
    return j;
}

double number(const json& j, const std::string& key) {
    if (!j.is_number()) {
        fail("key '" + key + "' must be a number");
    }
    return j.get<double>();
}

json smtj_json(const smtj::SmtjParams& p) {
    json j = json::object();
    j["r_parallel_ohm"] = p.r_parallel;
    j["tmr"] = p.tmr;
    j["tau_mean_s"] = p.tau_mean;
    j["b_5050_T"] = p.b_5050;
    j["window_width_T"] = p.window_width;
    return j;
}

smtj::SmtjParams smtj_from(const json& j, smtj::SmtjParams p) {
    if (!j.is_object()) {
        fail("smtj parameters must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "r_parallel_ohm") {
            p.r_parallel = number(value, key);
        } else if (key == "tmr") {
            p.tmr = number(value, key);
        } else if (key == "tau_mean_s") {
            p.tau_mean = number(value, key);
        } else if (key == "b_5050_T") {
            p.b_5050 = number(value, key);
        } else if (key == "window_width_T") {
            p.window_width = number(value, key);
        } else {
            fail("unknown smtj key '" + key + "'");
        }
    }
    return p;
}

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) {
        fail("format_double: conversion failed");
    }
    return {buf, ptr};
}

std::uint64_t fnv1a(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string metadata_line(std::uint64_t seed, std::string_view canonical_config) {
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fnv1a(canonical_config)));
    return std::string("# pbitsim ") + kVersion + " seed=" + std::to_string(seed) +
           " config_hash=" + hash;
}

void write_trace_csv(std::ostream& os, const smtj::TelegraphTrace& trace,
                     const std::string& header) {
    emit_header(os, header);
    const bool labeled = trace.labels.has_value();
    os << (labeled ? "time_s,resistance_ohm,state\n" : "time_s,resistance_ohm\n");
    for (std::size_t i = 0; i < trace.size(); ++i) {
        os << format_double(trace.time(i)) << ',' << format_double(trace.values[i]);
        if (labeled) {
            os << ',' << ((*trace.labels)[i] == smtj::MtjState::AntiParallel ? "AP" : "P");
        }
        os << '\n';
    }
}

smtj::TelegraphTrace read_trace_csv(std::istream& is, double bias_current_a) {
    std::string line;
    std::vector<std::string> columns;
    while (std::getline(is, line)) {
        if (line.empty() || line.front() == '#') {
            continue;
        }
        columns = split_csv(line);
        break;
    }
    if (columns.empty()) {
        fail("trace CSV: missing column header");
    }

    bool voltage = false;
    bool has_state = false;
    if (columns.size() >= 2 && columns[0] == "time_s" && columns[1] == "resistance_ohm") {
        has_state = columns.size() == 3 && columns[2] == "state";
        if (columns.size() > 2 && !has_state) {
            fail("trace CSV: unexpected columns");
        }
    } else if (columns.size() == 2 && columns[0] == "time_s" && columns[1] == "voltage_V") {
        voltage = true;
        if (!(std::isfinite(bias_current_a) && bias_current_a > 0.0)) {
            fail("trace CSV: voltage traces need a bias current > 0");
        }
    } else {
        fail("trace CSV: unrecognized column header '" + line + "'");
    }

    std::vector<double> times;
    smtj::TelegraphTrace trace;
    std::vector<smtj::MtjState> labels;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r" || line.front() == '#') {
            continue;
        }
        const auto fields = split_csv(line);
        if (fields.size() != columns.size()) {
            fail("trace CSV: wrong field count in line '" + line + "'");
        }
        times.push_back(parse_double(fields[0]));
        const double value = parse_double(fields[1]);
        trace.values.push_back(voltage ? value / bias_current_a : value);
        if (has_state) {
            if (fields[2] == "AP") {
                labels.push_back(smtj::MtjState::AntiParallel);
            } else if (fields[2] == "P") {
                labels.push_back(smtj::MtjState::Parallel);
            } else {
                fail("trace CSV: state must be P or AP");
            }
        }
    }
    if (times.size() < 2) {
        fail("trace CSV: need at least two samples");
    }
    const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
    if (!(dt > 0.0)) {
        fail("trace CSV: time must increase");
    }
    for (std::size_t i = 1; i < times.size(); ++i) {
        if (std::abs(times[i] - times[i - 1] - dt) > 1e-3 * dt) {
            fail("trace CSV: samples are not uniformly spaced");
        }
    }
    trace.sample_interval = dt;
    if (has_state) {
        trace.labels = std::move(labels);
    }
    return trace;
}

double read_bias_current(std::istream& is) {
    std::stringstream ss;
    ss << is.rdbuf();
    const json j = parse_object(ss.str(), "sidecar");
    if (!j.contains("bias_current_A")) {
        fail("sidecar: missing key 'bias_current_A'");
    }
    const double i = number(j["bias_current_A"], "bias_current_A");
    if (!(std::isfinite(i) && i > 0.0)) {
        fail("sidecar: bias_current_A must be > 0");
    }
    return i;
}

void write_sweep_csv(std::ostream& os, const analysis::FieldSweep& sweep,
                     const std::string& header) {
    emit_header(os, header);
    os << "b_T,resistance_ohm\n";
    for (const auto& pt : sweep.points) {
        os << format_double(pt.b) << ',' << format_double(pt.r) << '\n';
    }
}

void write_transfer_samples_csv(std::ostream& os, const device::TransferCurve& curve,
                                const std::string& header) {
    emit_header(os, header);
    os << "v_in_V,sample_idx,v_out_V\n";
    for (const auto& tp : curve.points) {
        const std::string v_in = format_double(tp.v_in);
        for (std::size_t i = 0; i < tp.samples.size(); ++i) {
            os << v_in << ',' << i << ',' << format_double(tp.samples[i]) << '\n';
        }
    }
}

void write_transfer_means_csv(std::ostream& os, const device::TransferCurve& curve,
                              const std::string& header) {
    emit_header(os, header);
    os << "v_in_V,mean_v_out_V\n";
    for (const auto& tp : curve.points) {
        os << format_double(tp.v_in) << ',' << format_double(tp.mean_v_out) << '\n';
    }
}

void write_histogram_csv(std::ostream& os, const circuit::StateHistogram& hist,
                         const std::string& header) {
    emit_header(os, header);
    os << "word,count,frequency\n";
    const auto n = hist.n_bits();
    const circuit::Word states = circuit::Word{1} << n;
    for (circuit::Word w = 0; w < states; ++w) {
        os << circuit::word_string(w, n) << ',' << hist.count(w) << ','
           << format_double(hist.frequency(w)) << '\n';
    }
}

void write_distribution_csv(std::ostream& os, const circuit::Distribution& dist, std::size_t n,
                            const std::string& header) {
    emit_header(os, header);
    os << "word,probability\n";
    for (const auto& [w, p] : dist) {
        os << circuit::word_string(w, n) << ',' << format_double(p) << '\n';
    }
}

void write_perf_points_csv(std::ostream& os, const std::vector<metrics::PerfPoint>& points,
                           const std::string& header) {
    emit_header(os, header);
    os << "label,power_W,throughput_flips_per_ns\n";
    for (const auto& pt : points) {
        os << pt.label << ',' << format_double(pt.power_w) << ',';
        if (pt.throughput) {
            os << format_double(*pt.throughput);
        }
        os << '\n';
    }
}

std::string to_json(const smtj::SmtjParams& p) {
    return smtj_json(p).dump(2);
}

smtj::SmtjParams smtj_params_from_json(std::string_view text, const smtj::SmtjParams& base) {
    return smtj_from(parse_object(text, "smtj parameters"), base);
}

std::string to_json(const device::PbitParams& p) {
    json j = json::object();
    j["smtj"] = smtj_json(p.smtj);
    j["nmos"] = {{"v_threshold_V", p.nmos.v_threshold}, {"k_factor_A_per_V2", p.nmos.k_factor}};
    j["inverter"] = {{"v_switch_V", p.inverter.v_switch},
                     {"gain", p.inverter.gain ? json(*p.inverter.gain) : json(nullptr)}};
    j["v_dd_V"] = p.v_dd;
    j["c_load_F"] = p.c_load;
    return j.dump(2);
}

device::PbitParams pbit_params_from_json(std::string_view text, const device::PbitParams& base) {
    const json j = parse_object(text, "pbit parameters");
    device::PbitParams p = base;
    for (const auto& [key, value] : j.items()) {
        if (key == "smtj") {
            p.smtj = smtj_from(value, p.smtj);
        } else if (key == "nmos") {
            if (!value.is_object()) {
                fail("'nmos' must be an object");
            }
            for (const auto& [k, v] : value.items()) {
                if (k == "v_threshold_V") {
                    p.nmos.v_threshold = number(v, k);
                } else if (k == "k_factor_A_per_V2") {
                    p.nmos.k_factor = number(v, k);
                } else {
                    fail("unknown nmos key '" + k + "'");
                }
            }
        } else if (key == "inverter") {
            if (!value.is_object()) {
                fail("'inverter' must be an object");
            }
            for (const auto& [k, v] : value.items()) {
                if (k == "v_switch_V") {
                    p.inverter.v_switch = number(v, k);
                } else if (k == "gain") {
                    p.inverter.gain = v.is_null() ? std::nullopt : std::optional(number(v, k));
                } else {
                    fail("unknown inverter key '" + k + "'");
                }
            }
        } else if (key == "v_dd_V") {
            p.v_dd = number(value, key);
        } else if (key == "c_load_F") {
            p.c_load = number(value, key);
        } else {
            fail("unknown pbit key '" + key + "'");
        }
    }
    return p;
}

std::string to_json(const circuit::PCircuit& c) {
    json j = json::object();
    j["n"] = c.n;
    json rows = json::array();
    for (std::size_t i = 0; i < c.n; ++i) {
        json row = json::array();
        for (std::size_t k = 0; k < c.n; ++k) {
            row.push_back(c.J(i, k));
        }
        rows.push_back(std::move(row));
    }
    j["J"] = std::move(rows);
    j["h"] = c.bias;
    j["i0"] = c.i0;
    json clamps = json::object();
    for (const auto& [node, value] : c.clamps) {
        clamps[std::to_string(node)] = value;
    }
    j["clamps"] = std::move(clamps);
    return j.dump(2);
}

circuit::PCircuit pcircuit_from_json(std::string_view text) {
    const json j = parse_object(text, "circuit");
    for (const auto& [key, value] : j.items()) {
        if (key != "n" && key != "J" && key != "h" && key != "i0" && key != "clamps") {
            fail("unknown circuit key '" + key + "'");
        }
    }
    for (const char* key : {"n", "J", "h", "i0"}) {
        if (!j.contains(key)) {
            fail(std::string("circuit: missing key '") + key + "'");
        }
    }
    if (!j["n"].is_number_unsigned()) {
        fail("circuit: 'n' must be a non-negative integer");
    }
    circuit::PCircuit c;
    c.n = j["n"].get<std::size_t>();
    const json& rows = j["J"];
    if (!rows.is_array() || rows.size() != c.n) {
        fail("circuit: 'J' must be an n x n array");
    }
    for (const json& row : rows) {
        if (!row.is_array() || row.size() != c.n) {
            fail("circuit: 'J' must be an n x n array");
        }
        for (const json& v : row) {
            c.coupling.push_back(number(v, "J"));
        }
    }
    if (!j["h"].is_array()) {
        fail("circuit: 'h' must be an array");
    }
    for (const json& v : j["h"]) {
        c.bias.push_back(number(v, "h"));
    }
    c.i0 = number(j["i0"], "i0");
    if (j.contains("clamps")) {
        if (!j["clamps"].is_object()) {
            fail("circuit: 'clamps' must map node index to -1 or +1");
        }
        for (const auto& [node, value] : j["clamps"].items()) {
            std::size_t idx = 0;
            const auto [ptr, ec] = std::from_chars(node.data(), node.data() + node.size(), idx);
            if (ec != std::errc{} || ptr != node.data() + node.size() || !value.is_number_integer()) {
                fail("circuit: 'clamps' must map node index to -1 or +1");
            }
            c.clamps[idx] = value.get<int>();
        }
    }
    return c;
}

}  // namespace pbitsim::io
