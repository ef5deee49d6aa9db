#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pbitsim/random.hpp"
#include "pbitsim/smtj.hpp"

namespace pbitsim::device {

/// Resistance reported for a cut-off NMOS.
inline constexpr double kNmosOffResistance = 1e10;  // ohm

/// One-parameter triode model of the series NMOS.
struct NmosParams {
    double v_threshold = 0.575;     // V, effective threshold
    double k_factor = 1.3544e-3;    // A/V^2, matched to the default sMTJ

    void validate() const;
    friend bool operator==(const NmosParams&, const NmosParams&) = default;
};

struct InverterParams {
    double v_switch = 0.6;  // V
    /// Logistic steepness (>= 1). std::nullopt selects the ideal comparator.
    std::optional<double> gain;

    friend bool operator==(const InverterParams&, const InverterParams&) = default;
};

/// Full 3T-1MTJ P-Bit. The sMTJ sits between V_DD and the drain node; the
/// NMOS pulls the drain node to ground; the inverter reads the drain node.
struct PbitParams {
    smtj::SmtjParams smtj;
    NmosParams nmos;
    InverterParams inverter;
    double v_dd = 1.2;      // V
    double c_load = 1e-15;  // F

    void validate() const;
    friend bool operator==(const PbitParams&, const PbitParams&) = default;
};

/// Off (1e10 ohm) at or below threshold, else 1 / (k (v_gs - v_t)).
[[nodiscard]] double nmos_resistance(const NmosParams& n, double v_gs);

[[nodiscard]] double drain_voltage(const PbitParams& p, double v_in, smtj::MtjState state);

/// Ideal comparator: v_dd when the drain is below v_switch, else 0.
/// Logistic: v_dd * sigma(gain * (v_switch - v_d) / v_dd).
[[nodiscard]] double output_voltage(const PbitParams& p, double v_in, smtj::MtjState state);

/// NMOS whose resistance at v_gs = v_dd/2 equals sqrt(R_p R_ap).
/// Throws std::invalid_argument when v_dd/2 <= v_threshold.
[[nodiscard]] NmosParams calibrate_match(const PbitParams& p);

/// Same as calibrate_match but scaled: r_n(v_dd/2) = ratio * sqrt(R_p R_ap).
[[nodiscard]] NmosParams calibrate_to_ratio(const PbitParams& p, double ratio);

[[nodiscard]] PbitParams with_calibrated_nmos(PbitParams p);

/// Input voltage at which r_n equals sqrt(R_p R_ap), i.e. where the output
/// fluctuates with the sMTJ occupancy.
[[nodiscard]] double matching_input(const PbitParams& p);

/// Drives one sMTJ trajectory at field b, sampled every sample_interval,
/// and returns the output voltage at each of the n instants.
/// Warns through `warn` when sample_interval < tau_mean.
[[nodiscard]] std::vector<double> sample_output(const PbitParams& p, double v_in, std::size_t n,
                                                double sample_interval, double b,
                                                std::uint64_t seed,
                                                const WarningFn& warn = stderr_warning);

struct TransferPoint {
    double v_in;
    std::vector<double> samples;
    double mean_v_out;
};

struct TransferCurve {
    std::vector<TransferPoint> points;
};

/// How grid points draw their sMTJ trajectories.
enum class GridSeeding {
    /// Every point replays the trajectory of the master seed (common random
    /// numbers). Keeps the mean curve exactly monotone in ideal mode.
    Shared,
    /// Point i uses split_seed(master, i): independent measurement windows.
    PerPoint,
};

[[nodiscard]] std::uint64_t grid_point_seed(std::uint64_t master, std::size_t index,
                                            GridSeeding seeding) noexcept;

[[nodiscard]] TransferCurve transfer_curve(const PbitParams& p, std::span<const double> v_in_grid,
                                           std::size_t n_per_point, double sample_interval,
                                           double b, std::uint64_t seed,
                                           GridSeeding seeding = GridSeeding::Shared,
                                           const WarningFn& warn = stderr_warning);

/// Fraction of samples at or above v_dd / 2 (the inverter switch point).
[[nodiscard]] double high_fraction(const TransferPoint& point, double v_dd);

struct SigmoidFit {
    double center;  // V
    double width;   // V, logistic scale: mean = v_dd / (1 + exp(-(v - center) / width))
    double rmse;    // V
};

/// Least-squares logistic fit of the mean curve (Levenberg-Marquardt).
/// Needs at least 3 points.
[[nodiscard]] SigmoidFit fit_sigmoid(const TransferCurve& curve, double v_dd);

/// Input span (V) over which the linearly interpolated mean curve lies
/// strictly between lo_fraction * v_dd and hi_fraction * v_dd.
[[nodiscard]] double mixed_region_span(const TransferCurve& curve, double v_dd,
                                       double lo_fraction = 0.2, double hi_fraction = 0.8);

/// Interpolated input where the mean curve first crosses v_dd / 2, if any.
[[nodiscard]] std::optional<double> midpoint_crossing(const TransferCurve& curve, double v_dd);

/// Inclusive voltage grid start..stop by step.
[[nodiscard]] std::vector<double> voltage_grid(double start, double stop, double step);

}  // namespace pbitsim::device
