#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "pbitsim/random.hpp"

namespace pbitsim::smtj {

enum class MtjState : std::uint8_t { Parallel, AntiParallel };

[[nodiscard]] constexpr MtjState flipped(MtjState s) noexcept {
    return s == MtjState::Parallel ? MtjState::AntiParallel : MtjState::Parallel;
}

/// Physical parameters of one stochastic MTJ. Defaults are the 14.5 % /
/// 27.6 kOhm / 4.2 ms device with its 50-50 point at -7.22 mT and a
/// 0.6 mT stochastic window.
struct SmtjParams {
    double r_parallel = 27.6e3;      // ohm
    double tmr = 0.145;              // (R_ap - R_p) / R_p
    double tau_mean = 4.2e-3;        // s, dwell at the 50-50 point
    double b_5050 = -7.22e-3;        // T
    double window_width = 0.6e-3;    // T

    /// Throws std::invalid_argument on r_parallel <= 0, tmr < 0,
    /// tau_mean <= 0, window_width <= 0 or non-finite fields.
    void validate() const;

    friend bool operator==(const SmtjParams&, const SmtjParams&) = default;
};

[[nodiscard]] double r_antiparallel(const SmtjParams& p);
[[nodiscard]] double resistance(const SmtjParams& p, MtjState state);

/// Field scale of the logistic occupancy. The 5 %..95 % occupancy band spans
/// exactly window_width: w_s = window_width / (2 ln 19).
[[nodiscard]] double occupancy_scale(const SmtjParams& p);

/// Probability of the anti-parallel state at field b (tesla):
/// 1 / (1 + exp((b - b_5050) / w_s)). Decreasing in b, 0.5 at b_5050.
[[nodiscard]] double occupancy_ap(const SmtjParams& p, double b);

struct DwellTimes {
    double ap;  // s
    double p;   // s
};

/// Mean holding times at field b. tau_ap + tau_p = 2 tau_mean for every b,
/// and tau_ap / (tau_ap + tau_p) = occupancy_ap(p, b).
[[nodiscard]] DwellTimes dwell_times(const SmtjParams& p, double b);

struct Switch {
    double time;  // s
    MtjState to;
};

/// Two-state continuous-time Markov chain with exponential holding times.
/// The initial state is drawn from the stationary occupancy, so the process
/// is stationary from t = 0.
class TelegraphProcess {
public:
    TelegraphProcess(const DwellTimes& dwell, double occupancy_ap, std::uint64_t seed);

    [[nodiscard]] MtjState state() const noexcept { return state_; }
    [[nodiscard]] double next_switch_time() const noexcept { return next_switch_; }

    /// Jumps to the next switching event and returns it.
    Switch next_switch();

    /// Advances the process to time t (must be non-decreasing across calls)
    /// and returns the state occupied at t.
    MtjState advance_to(double t);

private:
    double draw_holding(MtjState s);

    DwellTimes dwell_;
    Rng rng_;
    MtjState state_;
    double next_switch_;
};

/// Exact switching events in [0, duration): the continuous-time path before
/// any sampling. Uses the same random stream as sample_trajectory.
[[nodiscard]] std::vector<Switch> switching_events(const SmtjParams& p, double b, double duration,
                                                   std::uint64_t seed);

/// Uniformly sampled resistance (or voltage) time series.
struct TelegraphTrace {
    double sample_interval = 0.0;  // s
    std::vector<double> values;
    std::optional<std::vector<MtjState>> labels;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] double time(std::size_t i) const noexcept {
        return static_cast<double>(i) * sample_interval;
    }
    [[nodiscard]] double duration() const noexcept {
        return static_cast<double>(values.size()) * sample_interval;
    }

    void validate() const;
};

/// Number of grid samples taken in `duration` at spacing `dt` (sample i sits
/// at i * dt, so this is floor(duration / dt) up to rounding slack).
[[nodiscard]] std::size_t sample_count(double duration, double dt);

/// Samples the telegraph process at field b every dt for `duration`.
/// Event times are exact internally and quantized only at output, so
/// sub-dt dwells can be missed. Deterministic given the seed.
/// Warns through `warn` when dt > tau_mean / 10.
[[nodiscard]] TelegraphTrace sample_trajectory(const SmtjParams& p, double b, double duration,
                                               double dt, std::uint64_t seed,
                                               const WarningFn& warn = stderr_warning);

/// Empirical fraction of anti-parallel labels.
[[nodiscard]] double ap_fraction(const std::vector<MtjState>& labels);

}  // namespace pbitsim::smtj
