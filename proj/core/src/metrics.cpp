#include "pbitsim/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace pbitsim::metrics {

namespace {

constexpr double kSecondsPerNs = 1e-9;

void require(bool ok, const char* message) {
    if (!ok) {
        throw std::invalid_argument(message);
    }
}

}  // namespace

double throughput_from_dwell(double tau_s) {
    require(std::isfinite(tau_s) && tau_s > 0.0, "throughput_from_dwell: tau must be > 0");
    return kSecondsPerNs / tau_s;
}

double pbit_static_power(const device::PbitParams& p, double v_in, double b) {
    p.validate();
    const double r_n = device::nmos_resistance(p.nmos, v_in);
    const double occ = smtj::occupancy_ap(p.smtj, b);
    const double v2 = p.v_dd * p.v_dd;
    const double p_ap = v2 / (r_n + smtj::resistance(p.smtj, smtj::MtjState::AntiParallel));
    const double p_p = v2 / (r_n + smtj::resistance(p.smtj, smtj::MtjState::Parallel));
    return occ * p_ap + (1.0 - occ) * p_p;
}

double pbit_static_power(const device::PbitParams& p) {
    return pbit_static_power(p, device::matching_input(p), p.smtj.b_5050);
}

double inverter_dynamic_power(double c_load_f, double v_dd, double flip_rate_hz) {
    require(c_load_f >= 0.0 && v_dd >= 0.0 && flip_rate_hz >= 0.0,
            "inverter_dynamic_power: inputs must be non-negative");
    return c_load_f * v_dd * v_dd * flip_rate_hz;
}

ProjectionBreakdown projection_breakdown() {
    device::PbitParams p;
    p.smtj.r_parallel = 100e3;
    p.smtj.tmr = 0.0;
    p.smtj.tau_mean = 1e-9;
    p.v_dd = 0.9;
    p.inverter.v_switch = 0.45;
    p.c_load = 1e-15;

    ProjectionBreakdown out{};
    out.static_w = pbit_static_power(p);
    out.throughput = throughput_from_dwell(p.smtj.tau_mean);
    out.inverter_w = inverter_dynamic_power(p.c_load, p.v_dd, 1.0 / p.smtj.tau_mean);
    out.total_w = out.static_w + out.inverter_w;
    return out;
}

PerfPoint projection_p4() {
    const ProjectionBreakdown b = projection_breakdown();
    return {"P4", b.total_w, b.throughput, "projection: 100 kOhm sMTJ, 0.9 V, 1 fF, 1 ns dwell"};
}

std::vector<PerfPoint> comparison_table() {
    return {
        {"P1", 9e-3, std::nullopt, "PCB implementation, reported 8-10 mW"},
        {"P2", 9e-3, std::nullopt, "PCB implementation, reported 8-10 mW"},
        {"P3 (4.2 ms)", 55e-6, throughput_from_dwell(4.2e-3), "measured chip, reported 52-55 uW"},
        {"P3 (68.9 us)", 52e-6, throughput_from_dwell(68.9e-6), "measured chip, reported 52-55 uW"},
        projection_p4(),
    };
}

}  // namespace pbitsim::metrics
