#include "cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "cli/config.hpp"
#include "cli/svg.hpp"
#include "pbitsim/io.hpp"
#include "pbitsim/metrics.hpp"
#include "pbitsim/pbit_device.hpp"
#include "pbitsim/pcircuit.hpp"
#include "pbitsim/smtj.hpp"
#include "pbitsim/trace_analysis.hpp"

namespace pbitsim::cli {

namespace {

constexpr double kMaxSamples = 2e8;
constexpr std::size_t kSvgPoints = 2000;
constexpr std::uint64_t kActivationStream = 0xac7;

struct Common {
    std::uint64_t seed = 1;
    std::string out = "out";
    std::string config;
    std::size_t jobs = 1;
    bool svg = false;
};

using Compute = std::function<void(OutputSet&, std::ostream& out, std::ostream& err)>;

json parse_json(const std::string& text) {
    return json::parse(text);
}

smtj::SmtjParams smtj_from(const json& j) {
    return io::smtj_params_from_json(j.dump());
}

device::PbitParams pbit_from(const json& j) {
    return io::pbit_params_from_json(j.dump());
}

/// Overlays a config file; nested parameter objects may be partial.
void merge_file(json& config, const json& file, const std::string& where) {
    json plain = file;
    if (file.contains("smtj") && config.contains("smtj")) {
        config["smtj"] = parse_json(io::to_json(
            io::smtj_params_from_json(file["smtj"].dump(), smtj_from(config["smtj"]))));
        plain.erase("smtj");
    }
    if (file.contains("pbit") && config.contains("pbit")) {
        config["pbit"] = parse_json(io::to_json(
            io::pbit_params_from_json(file["pbit"].dump(), pbit_from(config["pbit"]))));
        plain.erase("pbit");
    }
    overlay(config, plain, where);
}

template <typename T>
void set_if(json& target, const char* key, const std::optional<T>& value) {
    if (value) {
        target[key] = *value;
    }
}

std::string csv(const std::function<void(std::ostream&)>& writer) {
    std::ostringstream os;
    writer(os);
    return os.str();
}

std::string pretty(const json& j) {
    return j.dump(2) + '\n';
}

json nullable(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

WarningFn warn_to(std::ostream& err) {
    return [&err](std::string_view message) { err << "warning: " << message << '\n'; };
}

void check_sample_budget(double duration, double dt, const char* what) {
    if (duration / dt > kMaxSamples) {
        throw ConfigError(std::string(what) + ": more than 2e8 samples requested");
    }
    if (smtj::sample_count(duration, dt) == 0) {
        throw ConfigError(std::string(what) + ": duration shorter than one sample interval");
    }
}

int execute(const Common& common, RunInfo info, const std::function<void(json&)>& apply_flags,
            const std::function<Compute(const RunInfo&)>& prepare, std::ostream& out,
            std::ostream& err) {
    Compute compute;
    try {
        if (common.jobs == 0) {
            throw ConfigError("--jobs must be at least 1");
        }
        if (!common.config.empty()) {
            merge_file(info.config, load_config_file(common.config), common.config);
        }
        apply_flags(info.config);
        info.seed = common.seed;
        compute = prepare(info);
    } catch (const std::exception& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    OutputSet files;
    try {
        compute(files, out, err);
        files.write(common.out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    for (const auto& [name, content] : files.files()) {
        out << "wrote " << (std::filesystem::path(common.out) / name).string() << '\n';
    }
    return kExitOk;
}

// ---------------------------------------------------------------- smtj-trace

struct TraceFlags {
    std::optional<double> duration, dt, field, tau, tmr, width, b5050, export_duration, offset;
    std::optional<std::string> input, sidecar;
};

json trace_defaults() {
    return json{{"smtj", parse_json(io::to_json(smtj::SmtjParams{}))},
                {"field_T", nullptr},
                {"duration_s", 50.0},
                {"dt_s", 1e-5},
                {"export_duration_s", 1.0},
                {"input_csv", nullptr},
                {"sidecar_json", nullptr},
                {"offset_ohm", 0.0}};
}

void apply_trace_flags(json& c, const TraceFlags& f) {
    set_if(c, "duration_s", f.duration);
    set_if(c, "dt_s", f.dt);
    set_if(c, "field_T", f.field);
    set_if(c, "export_duration_s", f.export_duration);
    set_if(c, "offset_ohm", f.offset);
    set_if(c, "input_csv", f.input);
    set_if(c, "sidecar_json", f.sidecar);
    set_if(c["smtj"], "tau_mean_s", f.tau);
    set_if(c["smtj"], "tmr", f.tmr);
    set_if(c["smtj"], "window_width_T", f.width);
    set_if(c["smtj"], "b_5050_T", f.b5050);
}

json acf_json_fit(const analysis::DwellAnalysis& d) {
    return json{{"acf_s", d.fit.tau},
                {"direct_s", d.direct},
                {"tau_corr_s", d.fit.tau_corr},
                {"tau_ap_s", d.fit.tau_ap},
                {"tau_p_s", d.fit.tau_p},
                {"fit_rmse", d.fit.fit_rmse},
                {"fit_points", d.fit.fit_points},
                {"max_lag", d.max_lag}};
}

Compute prepare_trace(const RunInfo& info, const Common& common) {
    const json& c = info.config;
    const smtj::SmtjParams p = smtj_from(c.at("smtj"));
    p.validate();
    const double export_duration = number(c, "export_duration_s");
    if (export_duration < 0.0) {
        throw ConfigError("export_duration_s must be >= 0");
    }
    const double offset = number(c, "offset_ohm");

    std::optional<smtj::TelegraphTrace> loaded;
    double b = p.b_5050;
    if (!c.at("input_csv").is_null()) {
        const std::string path = text(c, "input_csv");
        double current = 0.0;
        if (!c.at("sidecar_json").is_null()) {
            std::ifstream side(text(c, "sidecar_json"));
            if (!side) {
                throw ConfigError("cannot open sidecar '" + text(c, "sidecar_json") + "'");
            }
            current = io::read_bias_current(side);
        }
        std::ifstream in(path);
        if (!in) {
            throw ConfigError("cannot open input trace '" + path + "'");
        }
        loaded = analysis::subtract_offset(io::read_trace_csv(in, current), offset);
    } else {
        if (!c.at("sidecar_json").is_null()) {
            throw ConfigError("sidecar_json requires input_csv");
        }
        check_sample_budget(positive(c, "duration_s"), positive(c, "dt_s"), "smtj-trace");
        b = optional_number(c, "field_T").value_or(p.b_5050);
    }
    const double duration = number(c, "duration_s");
    const double dt = number(c, "dt_s");

    return [=, svg = common.svg](OutputSet& files, std::ostream& out, std::ostream& err) {
        smtj::TelegraphTrace raw =
            loaded ? *loaded
                   : analysis::subtract_offset(
                         smtj::sample_trajectory(p, b, duration, dt, info.seed, warn_to(err)),
                         offset);
        const auto thr = analysis::threshold_states(raw);
        const auto dwell = analysis::analyze_dwell(thr.trace);
        const double tmr = analysis::tmr_from_levels(thr.levels);

        json analysis{{"meta", info.meta()},
                      {"config", info.config},
                      {"source", loaded ? "file" : "simulated"},
                      {"n_samples", raw.size()},
                      {"sample_interval_s", raw.sample_interval},
                      {"levels",
                       {{"r_low_ohm", thr.levels.r_low},
                        {"r_high_ohm", thr.levels.r_high},
                        {"threshold_ohm", thr.levels.threshold}}},
                      {"tmr", tmr},
                      {"occupancy_ap", dwell.occupancy},
                      {"transitions", analysis::count_runs(*thr.trace.labels) - 1},
                      {"dwell", acf_json_fit(dwell)},
                      {"throughput_flips_per_ns", metrics::throughput_from_dwell(dwell.fit.tau)}};
        if (!loaded) {
            const auto truth = smtj::dwell_times(p, b);
            analysis["truth"] = {{"field_T", b},
                                 {"tmr", p.tmr},
                                 {"occupancy_ap", smtj::occupancy_ap(p, b)},
                                 {"dwell_s", 0.5 * (truth.ap + truth.p)},
                                 {"tau_ap_s", truth.ap},
                                 {"tau_p_s", truth.p}};
        }

        smtj::TelegraphTrace shown = thr.trace;
        const std::size_t keep =
            std::min(shown.size(), smtj::sample_count(export_duration, shown.sample_interval));
        shown.values.resize(keep);
        shown.labels->resize(keep);

        const std::string header = info.header();
        files.add("trace.csv", csv([&](std::ostream& os) { io::write_trace_csv(os, shown, header); }));
        files.add("analysis.json", pretty(analysis));
        files.add("acf.csv", csv([&](std::ostream& os) {
                      os << header << "\nlag_s,acf\n";
                      for (const auto& a : dwell.acf) {
                          os << io::format_double(a.lag) << ',' << io::format_double(a.value)
                             << '\n';
                      }
                  }));
        if (svg) {
            svg::Series trace_series;
            const std::size_t stride = std::max<std::size_t>(1, keep / kSvgPoints);
            for (std::size_t i = 0; i < keep; i += stride) {
                trace_series.x.push_back(shown.time(i));
                trace_series.y.push_back(shown.values[i]);
            }
            files.add("trace.svg", svg::line_plot({trace_series},
                                                  {"sMTJ resistance", "time (s)", "R (ohm)"}));
            svg::Series acf_series;
            svg::Series fit_series;
            for (const auto& a : dwell.acf) {
                acf_series.x.push_back(a.lag);
                acf_series.y.push_back(a.value);
                fit_series.x.push_back(a.lag);
                fit_series.y.push_back(std::exp(-a.lag / dwell.fit.tau_corr));
            }
            files.add("acf.svg", svg::line_plot({acf_series, fit_series},
                                                {"Autocorrelation", "lag (s)", "ACF"}));
        }
        out << "tmr=" << io::format_double(tmr) << " dwell_acf_s=" << io::format_double(dwell.fit.tau)
            << " dwell_direct_s=" << io::format_double(dwell.direct) << '\n';
    };
}

// --------------------------------------------------------------- field-sweep

struct SweepFlags {
    std::optional<double> start, stop, step, averaging, dt, width, b5050, tau, tmr;
};

json sweep_defaults() {
    return json{{"smtj", parse_json(io::to_json(smtj::SmtjParams{}))},
                {"b_start_T", -8.2e-3},
                {"b_stop_T", -6.2e-3},
                {"b_step_T", 2e-5},
                {"averaging_time_s", 2.0},
                {"dt_s", 1e-4}};
}

void apply_sweep_flags(json& c, const SweepFlags& f) {
    set_if(c, "b_start_T", f.start);
    set_if(c, "b_stop_T", f.stop);
    set_if(c, "b_step_T", f.step);
    set_if(c, "averaging_time_s", f.averaging);
    set_if(c, "dt_s", f.dt);
    set_if(c["smtj"], "window_width_T", f.width);
    set_if(c["smtj"], "b_5050_T", f.b5050);
    set_if(c["smtj"], "tau_mean_s", f.tau);
    set_if(c["smtj"], "tmr", f.tmr);
}

Compute prepare_sweep(const RunInfo& info, const Common& common) {
    const json& c = info.config;
    const smtj::SmtjParams p = smtj_from(c.at("smtj"));
    p.validate();
    const auto grid =
        analysis::field_grid(number(c, "b_start_T"), number(c, "b_stop_T"), positive(c, "b_step_T"));
    if (grid.size() < 3) {
        throw ConfigError("field sweep needs at least 3 grid points");
    }
    const double averaging = positive(c, "averaging_time_s");
    const double dt = positive(c, "dt_s");
    check_sample_budget(averaging, dt, "field-sweep");

    return [=, jobs = common.jobs, svg = common.svg](OutputSet& files, std::ostream& out, std::ostream& /*err*/) {
        analysis::FieldSweep sweep;
        sweep.points.resize(grid.size());
        parallel_for(grid.size(), jobs, [&](std::size_t i) {
            sweep.points[i] =
                analysis::simulate_field_point(p, grid[i], averaging, dt, split_seed(info.seed, i));
        });
        const double r_ap = smtj::r_antiparallel(p);
        const analysis::LevelEstimate levels{p.r_parallel, r_ap, 0.5 * (p.r_parallel + r_ap)};
        const auto window = analysis::extract_stochastic_window(sweep, levels);

        const json result{{"meta", info.meta()},
                          {"config", info.config},
                          {"b_low_T", window.b_low},
                          {"b_high_T", window.b_high},
                          {"b_5050_T", window.b_5050},
                          {"width_T", window.width()},
                          {"levels", {{"r_low_ohm", levels.r_low}, {"r_high_ohm", levels.r_high}}},
                          {"truth", {{"b_5050_T", p.b_5050}, {"window_width_T", p.window_width}}}};
        files.add("sweep.csv",
                  csv([&](std::ostream& os) { io::write_sweep_csv(os, sweep, info.header()); }));
        files.add("window.json", pretty(result));
        if (svg) {
            svg::Series s;
            for (const auto& pt : sweep.points) {
                s.x.push_back(pt.b * 1e3);
                s.y.push_back(pt.r);
            }
            files.add("sweep.svg", svg::line_plot({s}, {"Minor field loop", "B (mT)", "R (ohm)"}));
        }
        out << "window_mT=[" << io::format_double(window.b_low * 1e3) << ", "
            << io::format_double(window.b_high * 1e3)
            << "] b_5050_mT=" << io::format_double(window.b_5050 * 1e3) << '\n';
    };
}

// ------------------------------------------------------------------ transfer

struct TransferFlags {
    std::optional<std::vector<double>> grid;
    std::optional<double> start, stop, step, interval, field, tmr, gain;
    std::optional<std::uint64_t> samples;
    std::optional<std::string> seeding;
    bool no_calibrate = false;
    bool detail = false;
};

json transfer_defaults() {
    return json{{"pbit", parse_json(io::to_json(device::PbitParams{}))},
                {"calibrate", true},
                {"grid_start_V", 0.58},
                {"grid_stop_V", 0.62},
                {"grid_step_V", 0.002},
                {"grid_V", nullptr},
                {"samples_per_point", 500},
                {"sample_interval_s", 0.1},
                {"field_T", nullptr},
                {"seeding", "shared"},
                {"detail", false},
                {"detail_V", {0.597, 0.600, 0.605}}};
}

void apply_transfer_flags(json& c, const TransferFlags& f) {
    set_if(c, "grid_V", f.grid);
    set_if(c, "grid_start_V", f.start);
    set_if(c, "grid_stop_V", f.stop);
    set_if(c, "grid_step_V", f.step);
    set_if(c, "sample_interval_s", f.interval);
    set_if(c, "field_T", f.field);
    set_if(c, "samples_per_point", f.samples);
    set_if(c, "seeding", f.seeding);
    set_if(c["pbit"]["smtj"], "tmr", f.tmr);
    set_if(c["pbit"]["inverter"], "gain", f.gain);
    if (f.no_calibrate) {
        c["calibrate"] = false;
    }
    if (f.detail) {
        c["detail"] = true;
    }
}

std::vector<double> checked_grid(std::vector<double> grid, const char* what) {
    if (grid.empty()) {
        throw ConfigError(std::string(what) + " is empty");
    }
    if (grid.size() < 3) {
        throw ConfigError(std::string(what) + " needs at least 3 points");
    }
    if (std::adjacent_find(grid.begin(), grid.end(), std::greater_equal<>()) != grid.end()) {
        throw ConfigError(std::string(what) + " must be strictly ascending");
    }
    return grid;
}

Compute prepare_transfer(const RunInfo& info, const Common& common) {
    const json& c = info.config;
    device::PbitParams p = pbit_from(c.at("pbit"));
    if (flag(c, "calibrate")) {
        p = device::with_calibrated_nmos(p);
    }
    p.validate();
    const std::vector<double> grid =
        c.at("grid_V").is_null()
            ? checked_grid(device::voltage_grid(number(c, "grid_start_V"), number(c, "grid_stop_V"),
                                                positive(c, "grid_step_V")),
                           "input grid")
            : checked_grid(number_list(c, "grid_V"), "input grid");
    const std::uint64_t n = count(c, "samples_per_point");
    if (n == 0 || static_cast<double>(n) * static_cast<double>(grid.size()) > kMaxSamples) {
        throw ConfigError("samples_per_point must be in [1, 2e8 / grid size]");
    }
    const double interval = positive(c, "sample_interval_s");
    const double b = optional_number(c, "field_T").value_or(p.smtj.b_5050);
    const std::string seeding_name = text(c, "seeding");
    if (seeding_name != "shared" && seeding_name != "per_point") {
        throw ConfigError("seeding must be 'shared' or 'per_point'");
    }
    const auto seeding =
        seeding_name == "shared" ? device::GridSeeding::Shared : device::GridSeeding::PerPoint;
    const bool detail = flag(c, "detail");
    const std::vector<double> detail_grid = number_list(c, "detail_V");
    if (detail && detail_grid.empty()) {
        throw ConfigError("detail_V is empty");
    }

    return [=, jobs = common.jobs, svg = common.svg](OutputSet& files, std::ostream& out,
                                                     std::ostream& err) {
        device::TransferCurve curve;
        curve.points.resize(grid.size());
        parallel_for(grid.size(), jobs, [&](std::size_t i) {
            // A one-point curve seeded like point i of the full grid.
            const auto one = device::transfer_curve(
                p, std::span(&grid[i], 1), n, interval, b,
                device::grid_point_seed(info.seed, i, seeding), device::GridSeeding::Shared,
                i == 0 ? warn_to(err) : WarningFn{});
            curve.points[i] = one.points.front();
        });
        const auto fit = device::fit_sigmoid(curve, p.v_dd);
        const auto crossing = device::midpoint_crossing(curve, p.v_dd);
        bool rails = true;
        for (const auto& pt : curve.points) {
            for (double v : pt.samples) {
                rails = rails && (v == 0.0 || v == p.v_dd);
            }
        }

        json result{{"meta", info.meta()},
                    {"config", info.config},
                    {"nmos",
                     {{"v_threshold_V", p.nmos.v_threshold}, {"k_factor_A_per_V2", p.nmos.k_factor}}},
                    {"field_T", b},
                    {"center_V", fit.center},
                    {"width_V", fit.width},
                    {"rmse_V", fit.rmse},
                    {"midpoint_crossing_V", nullable(crossing)},
                    {"mixed_region_span_V", device::mixed_region_span(curve, p.v_dd)},
                    {"rail_to_rail", rails}};
        const std::string header = info.header();
        if (detail) {
            const auto detail_curve = device::transfer_curve(p, detail_grid, n, interval, b,
                                                             info.seed, seeding, WarningFn{});
            json rows = json::array();
            for (const auto& pt : detail_curve.points) {
                rows.push_back({{"v_in_V", pt.v_in},
                                {"mean_v_out_V", pt.mean_v_out},
                                {"high_fraction", device::high_fraction(pt, p.v_dd)}});
            }
            result["detail"] = rows;
            files.add("transfer_detail.csv", csv([&](std::ostream& os) {
                          io::write_transfer_samples_csv(os, detail_curve, header);
                      }));
        }
        files.add("transfer_samples.csv",
                  csv([&](std::ostream& os) { io::write_transfer_samples_csv(os, curve, header); }));
        files.add("transfer_mean.csv",
                  csv([&](std::ostream& os) { io::write_transfer_means_csv(os, curve, header); }));
        files.add("sigmoid.json", pretty(result));
        if (svg) {
            svg::Series mean;
            svg::Series model;
            for (const auto& pt : curve.points) {
                mean.x.push_back(pt.v_in);
                mean.y.push_back(pt.mean_v_out);
                model.x.push_back(pt.v_in);
                model.y.push_back(p.v_dd / (1.0 + std::exp(-(pt.v_in - fit.center) / fit.width)));
            }
            files.add("transfer.svg", svg::line_plot({mean, model},
                                                     {"P-Bit transfer curve", "V_in (V)",
                                                      "mean V_out (V)"}));
        }
        out << "center_V=" << io::format_double(fit.center)
            << " width_V=" << io::format_double(fit.width) << '\n';
    };
}

// ---------------------------------------------------------------------- gate

struct GateFlags {
    std::optional<std::string> gate, activation, circuit_file;
    std::optional<std::vector<std::string>> clamps;
    std::optional<double> i0;
    std::optional<std::uint64_t> sweeps, burn_in;
    bool all_modes = false;
};

json gate_defaults() {
    return json{{"gate", "and"},
                {"i0", 2.0},
                {"clamps", {{"C", 1}}},
                {"sweeps", 1000000},
                {"burn_in", 1000},
                {"activation", "tanh"},
                {"circuit", nullptr},
                {"all_modes", false}};
}

void apply_gate_flags(json& c, const GateFlags& f) {
    set_if(c, "gate", f.gate);
    set_if(c, "activation", f.activation);
    set_if(c, "i0", f.i0);
    set_if(c, "sweeps", f.sweeps);
    set_if(c, "burn_in", f.burn_in);
    if (f.circuit_file) {
        c["circuit"] = load_config_file(*f.circuit_file);
        c["gate"] = "custom";
    }
    if (f.clamps) {
        json clamps = json::object();
        for (const std::string& spec : *f.clamps) {
            const auto eq = spec.find('=');
            const std::string value = eq == std::string::npos ? "" : spec.substr(eq + 1);
            if (eq == 0 || (value != "0" && value != "1")) {
                throw ConfigError("clamp '" + spec + "' must look like NODE=0 or NODE=1");
            }
            clamps[spec.substr(0, eq)] = value == "1" ? 1 : 0;
        }
        c["clamps"] = clamps;
    }
    if (f.all_modes) {
        c["all_modes"] = true;
    }
}

const char* const kNodeNames[] = {"A", "B", "C"};

std::string node_name(const circuit::PCircuit& c, std::size_t node) {
    return c.n == 3 ? kNodeNames[node] : std::to_string(node);
}

std::size_t resolve_node(const circuit::PCircuit& c, const std::string& name) {
    for (std::size_t i = 0; i < 3 && c.n == 3; ++i) {
        if (name == kNodeNames[i]) {
            return i;
        }
    }
    std::size_t idx = 0;
    const auto [ptr, ec] = std::from_chars(name.data(), name.data() + name.size(), idx);
    if (ec != std::errc{} || ptr != name.data() + name.size() || idx >= c.n) {
        throw ConfigError("unknown clamp node '" + name + "'");
    }
    return idx;
}

struct Scenario {
    std::string name;
    std::string gate;
    circuit::PCircuit circuit;
};

std::string scenario_name(const std::string& gate, const circuit::PCircuit& c) {
    std::string name = gate;
    if (c.clamps.empty()) {
        return name + "_free";
    }
    for (const auto& [node, v] : c.clamps) {
        name += "_" + node_name(c, node) + (v > 0 ? "1" : "0");
    }
    return name;
}

json clamps_json(const circuit::PCircuit& c) {
    json j = json::object();
    for (const auto& [node, v] : c.clamps) {
        j[node_name(c, node)] = v > 0 ? 1 : 0;
    }
    return j;
}

Compute prepare_gate(const RunInfo& info, const Common& common) {
    const json& c = info.config;
    const std::string activation = text(c, "activation");
    if (activation != "tanh" && activation != "device") {
        throw ConfigError("activation must be 'tanh' or 'device'");
    }
    const std::uint64_t sweeps = count(c, "sweeps");
    const std::uint64_t burn_in = count(c, "burn_in");
    if (sweeps == 0) {
        throw ConfigError("sweeps must be >= 1");
    }
    const double i0 = positive(c, "i0");

    std::vector<Scenario> scenarios;
    if (flag(c, "all_modes")) {
        for (const char* gate : {"or", "and"}) {
            for (int v : {0, 1}) {
                const auto base = std::string(gate) == "or" ? circuit::or_gate(i0)
                                                            : circuit::and_gate(i0);
                auto clamped = circuit::clamp(base, 2, v);
                scenarios.push_back({scenario_name(gate, clamped), gate, std::move(clamped)});
            }
        }
    } else {
        const std::string gate = text(c, "gate");
        circuit::PCircuit base;
        if (gate == "and") {
            base = circuit::and_gate(i0);
        } else if (gate == "or") {
            base = circuit::or_gate(i0);
        } else if (gate == "custom") {
            if (c.at("circuit").is_null()) {
                throw ConfigError("gate 'custom' requires a circuit");
            }
            base = io::pcircuit_from_json(c.at("circuit").dump());
            base.i0 = i0;
        } else {
            throw ConfigError("gate must be 'and', 'or' or 'custom'");
        }
        if (gate != "custom" && !c.at("circuit").is_null()) {
            throw ConfigError("circuit is only used with gate 'custom'");
        }
        if (base.n == 0 || base.n > circuit::kMaxExactNodes) {
            throw ConfigError("circuit must have 1..20 nodes");
        }
        const json& clamps = c.at("clamps");
        if (!clamps.is_object()) {
            throw ConfigError("clamps must be an object of node -> 0/1");
        }
        for (const auto& [name, value] : clamps.items()) {
            if (!value.is_number_integer() || (value.get<int>() != 0 && value.get<int>() != 1)) {
                throw ConfigError("clamp value for '" + name + "' must be 0 or 1");
            }
            base = circuit::clamp(base, resolve_node(base, name), value.get<int>());
        }
        base.validate();
        scenarios.push_back({scenario_name(gate, base), gate, base});
    }

    return [=, jobs = common.jobs, svg = common.svg](OutputSet& files, std::ostream& out, std::ostream& /*err*/) {
        circuit::ActivationModel act = circuit::IdealTanh{};
        const std::string header = info.header();
        if (activation == "device") {
            const device::PbitParams p = device::with_calibrated_nmos({});
            const auto curve = device::transfer_curve(
                p, device::voltage_grid(0.58, 0.62, 0.0005), 500, 0.1, p.smtj.b_5050,
                split_seed(info.seed, kActivationStream), device::GridSeeding::PerPoint,
                WarningFn{});
            const auto table = circuit::empirical_activation(curve, p.v_dd);
            files.add("activation.csv", csv([&](std::ostream& os) {
                          os << header << "\nv_in_V,p_high\n";
                          for (std::size_t i = 0; i < table.v_in.size(); ++i) {
                              os << io::format_double(table.v_in[i]) << ','
                                 << io::format_double(table.p_high[i]) << '\n';
                          }
                      }));
            act = table;
        }

        struct Result {
            circuit::StateHistogram hist;
            circuit::Distribution exact;
        };
        std::vector<Result> results(scenarios.size());
        parallel_for(scenarios.size(), jobs, [&](std::size_t k) {
            results[k].hist = circuit::gibbs_run(scenarios[k].circuit, act, sweeps, burn_in,
                                                 split_seed(info.seed, k));
            results[k].exact = circuit::boltzmann_exact(scenarios[k].circuit);
        });

        const bool single = scenarios.size() == 1;
        json rows = json::array();
        for (std::size_t k = 0; k < scenarios.size(); ++k) {
            const Scenario& s = scenarios[k];
            const Result& r = results[k];
            const std::size_t n = s.circuit.n;
            const auto oracle_modal = std::max_element(
                r.exact.begin(), r.exact.end(),
                [](const auto& a, const auto& b) { return a.second < b.second; });
            json ground = json::array();
            for (circuit::Word w : circuit::ground_states(s.circuit)) {
                ground.push_back(circuit::word_string(w, n));
            }
            const double l1 = circuit::compare_to_oracle(r.hist, r.exact);
            const circuit::Word modal = r.hist.modal();
            rows.push_back({{"name", s.name},
                            {"gate", s.gate},
                            {"i0", s.circuit.i0},
                            {"clamps", clamps_json(s.circuit)},
                            {"sweeps", sweeps},
                            {"burn_in", burn_in},
                            {"l1", l1},
                            {"modal_word", circuit::word_string(modal, n)},
                            {"modal_frequency", r.hist.frequency(modal)},
                            {"oracle_modal_word", circuit::word_string(oracle_modal->first, n)},
                            {"oracle_modal_probability", oracle_modal->second},
                            {"ground_states", ground}});

            const std::string suffix = single ? "" : "_" + s.name;
            files.add("histogram" + suffix + ".csv", csv([&](std::ostream& os) {
                          io::write_histogram_csv(os, r.hist, header);
                      }));
            files.add("oracle" + suffix + ".csv", csv([&](std::ostream& os) {
                          io::write_distribution_csv(os, r.exact, n, header);
                      }));
            if (svg && n <= 8) {
                std::vector<std::string> labels;
                std::vector<double> freq;
                for (circuit::Word w = 0; w < (circuit::Word{1} << n); ++w) {
                    labels.push_back(circuit::word_string(w, n));
                    freq.push_back(r.hist.frequency(w));
                }
                files.add("histogram" + suffix + ".svg",
                          svg::bar_chart(labels, freq, {s.name, "state", "frequency"}));
            }
            out << s.name << ": modal=" << circuit::word_string(modal, n) << " ("
                << io::format_double(r.hist.frequency(modal)) << ") L1=" << io::format_double(l1)
                << '\n';
        }
        files.add("summary.json", pretty(json{{"meta", info.meta()},
                                              {"config", info.config},
                                              {"word_order", "node 0 is the leftmost bit"},
                                              {"scenarios", rows}}));
    };
}

// ------------------------------------------------------------------- metrics

Compute prepare_metrics(const RunInfo& info, const Common& common) {
    return [=, svg = common.svg](OutputSet& files, std::ostream& out, std::ostream& /*err*/) {
        const auto table = metrics::comparison_table();
        const auto proj = metrics::projection_breakdown();
        json points = json::array();
        for (const auto& pt : table) {
            points.push_back({{"label", pt.label},
                              {"power_W", pt.power_w},
                              {"throughput_flips_per_ns", nullable(pt.throughput)},
                              {"note", pt.note}});
        }
        const json result{
            {"meta", info.meta()},
            {"config", info.config},
            {"projection",
             {{"static_W", proj.static_w},
              {"inverter_W", proj.inverter_w},
              {"total_W", proj.total_w},
              {"throughput_flips_per_ns", proj.throughput}}},
            {"default_device_static_power_W",
             metrics::pbit_static_power(device::with_calibrated_nmos({}))},
            {"points", points}};
        files.add("perf_points.csv", csv([&](std::ostream& os) {
                      io::write_perf_points_csv(os, table, info.header());
                  }));
        files.add("metrics.json", pretty(result));
        if (svg) {
            svg::Series s;
            for (std::size_t i = 0; i < table.size(); ++i) {
                s.x.push_back(static_cast<double>(i + 1));
                s.y.push_back(table[i].power_w);
            }
            svg::PlotSpec spec{"Power per point", "point (P1, P2, P3 slow, P3 fast, P4)",
                               "power (W)"};
            spec.log_y = true;
            spec.markers = true;
            files.add("perf_points.svg", svg::line_plot({s}, spec));
        }
        out << "P4 power_W=" << io::format_double(proj.total_w) << '\n';
    };
}

void add_common(CLI::App* sub, Common& common) {
    sub->add_option("--seed", common.seed, "Master RNG seed")->capture_default_str();
    sub->add_option("--out", common.out, "Output directory")->capture_default_str();
    sub->add_option("--config", common.config, "JSON config file (unit-suffixed keys)");
    sub->add_option("--jobs", common.jobs, "Worker threads for independent points")
        ->capture_default_str();
    sub->add_flag("--svg", common.svg, "Also write minimal SVG plots");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stochastic MTJ P-Bit simulator", "pbitsim"};
    app.require_subcommand(1);
    Common common;

    TraceFlags tf;
    auto* trace = app.add_subcommand("smtj-trace", "Simulate or analyze a telegraph trace");
    add_common(trace, common);
    trace->add_option("--duration", tf.duration, "Trace length (s)");
    trace->add_option("--dt", tf.dt, "Sample interval (s)");
    trace->add_option("--field", tf.field, "Applied field (T); default: 50-50 point");
    trace->add_option("--tau", tf.tau, "Mean dwell at the 50-50 point (s)");
    trace->add_option("--tmr", tf.tmr, "TMR ratio");
    trace->add_option("--width", tf.width, "Stochastic window width (T)");
    trace->add_option("--b5050", tf.b5050, "50-50 field (T)");
    trace->add_option("--export-duration", tf.export_duration, "Length of trace.csv (s)");
    trace->add_option("--input", tf.input, "Analyze this CSV trace instead of simulating");
    trace->add_option("--sidecar", tf.sidecar, "JSON sidecar with bias_current_A");
    trace->add_option("--offset", tf.offset, "Constant subtracted from every sample (ohm)");

    SweepFlags sf;
    auto* sweep = app.add_subcommand("field-sweep", "Minor field loop and stochastic window");
    add_common(sweep, common);
    sweep->add_option("--start", sf.start, "First field (T)");
    sweep->add_option("--stop", sf.stop, "Last field (T)");
    sweep->add_option("--step", sf.step, "Field step (T)");
    sweep->add_option("--averaging-time", sf.averaging, "Averaging time per point (s)");
    sweep->add_option("--dt", sf.dt, "Sample interval (s)");
    sweep->add_option("--width", sf.width, "Stochastic window width (T)");
    sweep->add_option("--b5050", sf.b5050, "50-50 field (T)");
    sweep->add_option("--tau", sf.tau, "Mean dwell at the 50-50 point (s)");
    sweep->add_option("--tmr", sf.tmr, "TMR ratio");

    TransferFlags xf;
    auto* transfer = app.add_subcommand("transfer", "P-Bit transfer curve and sigmoid fit");
    add_common(transfer, common);
    transfer->add_option("--grid", xf.grid, "Explicit input voltages (V), comma separated")
        ->delimiter(',');
    transfer->add_option("--grid-start", xf.start, "First input voltage (V)");
    transfer->add_option("--grid-stop", xf.stop, "Last input voltage (V)");
    transfer->add_option("--grid-step", xf.step, "Input voltage step (V)");
    transfer->add_option("--samples", xf.samples, "Samples per input voltage");
    transfer->add_option("--interval", xf.interval, "Time between samples (s)");
    transfer->add_option("--field", xf.field, "Applied field (T); default: 50-50 point");
    transfer->add_option("--tmr", xf.tmr, "sMTJ TMR ratio");
    transfer->add_option("--gain", xf.gain, "Logistic inverter gain (default: ideal comparator)");
    transfer->add_option("--seeding", xf.seeding, "shared or per_point");
    transfer->add_flag("--no-calibrate", xf.no_calibrate, "Keep the configured NMOS parameters");
    transfer->add_flag("--detail", xf.detail, "Also dump samples at 0.597 / 0.600 / 0.605 V");

    GateFlags gf;
    auto* gate = app.add_subcommand("gate", "Gibbs sampling of an invertible AND/OR gate");
    add_common(gate, common);
    gate->add_option("--gate", gf.gate, "and, or or custom");
    gate->add_option("--clamp", gf.clamps, "Clamp NODE=0|1 (A, B, C or node index)");
    gate->add_option("--i0", gf.i0, "Pseudo inverse temperature");
    gate->add_option("--sweeps", gf.sweeps, "Recorded Gibbs sweeps");
    gate->add_option("--burn-in", gf.burn_in, "Discarded sweeps");
    gate->add_option("--activation", gf.activation, "tanh or device");
    gate->add_option("--circuit", gf.circuit_file, "Custom circuit JSON (implies --gate custom)");
    gate->add_flag("--all-modes", gf.all_modes, "Run OR/AND with C clamped to 0 and to 1");

    auto* metrics_cmd = app.add_subcommand("metrics", "Power and throughput comparison table");
    add_common(metrics_cmd, common);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitConfig;
    }

    if (*trace) {
        return execute(common, {"smtj-trace", 0, trace_defaults()},
                       [&](json& c) { apply_trace_flags(c, tf); },
                       [&](const RunInfo& i) { return prepare_trace(i, common); }, out, err);
    }
    if (*sweep) {
        return execute(common, {"field-sweep", 0, sweep_defaults()},
                       [&](json& c) { apply_sweep_flags(c, sf); },
                       [&](const RunInfo& i) { return prepare_sweep(i, common); }, out, err);
    }
    if (*transfer) {
        return execute(common, {"transfer", 0, transfer_defaults()},
                       [&](json& c) { apply_transfer_flags(c, xf); },
                       [&](const RunInfo& i) { return prepare_transfer(i, common); }, out, err);
    }
    if (*gate) {
        return execute(common, {"gate", 0, gate_defaults()},
                       [&](json& c) { apply_gate_flags(c, gf); },
                       [&](const RunInfo& i) { return prepare_gate(i, common); }, out, err);
    }
    return execute(common, {"metrics", 0, json::object()}, [](json&) {},
                   [&](const RunInfo& i) { return prepare_metrics(i, common); }, out, err);
}

}  // namespace pbitsim::cli
