#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pbitsim/pbit_device.hpp"

namespace pbitsim::metrics {

struct PerfPoint {
    std::string label;
    double power_w;                    // W
    std::optional<double> throughput;  // flips/ns, empty when not reported
    std::string note;
};

/// 1 / tau expressed in flips per nanosecond.
[[nodiscard]] double throughput_from_dwell(double tau_s);

/// Occupancy-weighted divider dissipation
/// sum_s P(s) v_dd^2 / (r_n(v_in) + r_mtj(s)) at field b.
[[nodiscard]] double pbit_static_power(const device::PbitParams& p, double v_in, double b);

/// Same, at the matching input and the 50-50 field.
[[nodiscard]] double pbit_static_power(const device::PbitParams& p);

/// c_load v_dd^2 f.
[[nodiscard]] double inverter_dynamic_power(double c_load_f, double v_dd, double flip_rate_hz);

struct ProjectionBreakdown {
    double static_w;
    double inverter_w;
    double total_w;
    double throughput;  // flips/ns
};

/// Scaled-node projection: 100 kOhm sMTJ with negligible TMR, matched NMOS,
/// 0.9 V core supply, 1 fF inverter load, 1 ns dwell.
[[nodiscard]] ProjectionBreakdown projection_breakdown();
[[nodiscard]] PerfPoint projection_p4();

/// Reported and projected points: P1, P2 (PCB implementations, no
/// throughput reported), the two P3 chips (4.2 ms and 68.9 us dwell) and P4.
[[nodiscard]] std::vector<PerfPoint> comparison_table();

}  // namespace pbitsim::metrics
