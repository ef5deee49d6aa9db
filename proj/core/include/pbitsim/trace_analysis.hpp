#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "pbitsim/smtj.hpp"

namespace pbitsim::analysis {

struct LevelEstimate {
    double r_low;      // ohm
    double r_high;     // ohm
    double threshold;  // ohm, midpoint of the two levels

    void validate() const;
};

struct ThresholdResult {
    LevelEstimate levels;
    smtj::TelegraphTrace trace;  // copy of the input with labels replaced
};

/// Splits a bimodal trace into its two resistance levels.
///
/// The value histogram (1024 bins over [min, max]) is split at the bin edge
/// that maximizes the between-class variance; r_low/r_high are the means of
/// the raw samples on either side and the threshold is their midpoint.
/// Samples strictly above the threshold are labeled AntiParallel.
///
/// Throws Error(UnimodalTrace) when the level gap is below 4x the pooled
/// intra-level standard deviation (including the constant-trace case), and
/// std::invalid_argument for traces shorter than 100 samples.
[[nodiscard]] ThresholdResult threshold_states(const smtj::TelegraphTrace& trace);

/// (r_high - r_low) / r_low.
[[nodiscard]] double tmr_from_levels(const LevelEstimate& levels);

/// Biased normalized autocorrelation for lags 0..max_lag:
/// acf(k) = sum_t (x_t - m)(x_{t+k} - m) / sum_t (x_t - m)^2, acf(0) = 1.
/// Requires max_lag < size / 4. Throws Error(ZeroVariance) on constant input.
[[nodiscard]] std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag);

struct AcfPoint {
    double lag;  // s
    double value;
};

[[nodiscard]] std::vector<AcfPoint> autocorrelation(const smtj::TelegraphTrace& trace,
                                                    std::size_t max_lag);

struct DwellEstimate {
    double tau;        // s, mean dwell (tau_ap + tau_p) / 2; 2 * tau_corr at 50-50
    double tau_corr;   // s, fitted ACF time constant
    double fit_rmse;   // dimensionless
    double tau_ap;     // s
    double tau_p;      // s
    std::size_t fit_points;
};

/// Least-squares fit of exp(-t / tau_corr) over the leading lags with
/// acf > 0.05, converted to dwell times through 1/tau_corr = 1/tau_ap + 1/tau_p
/// at the given AP occupancy.
///
/// Throws Error(FitDiverged) when fewer than two lags qualify, the RMSE
/// exceeds 0.1, or tau_corr falls outside (dt, trace_duration).
[[nodiscard]] DwellEstimate fit_dwell_time(std::span<const AcfPoint> acf, double dt,
                                           double occupancy,
                                           double trace_duration =
                                               std::numeric_limits<double>::infinity());

/// Run-length dwell estimate: mean interior run length per state, averaged
/// over the two states, times the sample interval. The first and last runs
/// are censored and dropped. Throws Error(TooFewTransitions) below 100 runs.
[[nodiscard]] double mean_dwell_direct(const smtj::TelegraphTrace& labeled);

/// Number of maximal runs of identical labels.
[[nodiscard]] std::size_t count_runs(const std::vector<smtj::MtjState>& labels);

struct DwellAnalysis {
    double occupancy;     // empirical AP fraction
    double direct;        // s, mean_dwell_direct
    std::size_t max_lag;  // samples
    std::vector<AcfPoint> acf;
    DwellEstimate fit;
};

/// Full dwell pipeline on a labeled trace: run-length estimate first, then
/// an ACF window of ~10 correlation times (5 x direct dwell) and the fit.
[[nodiscard]] DwellAnalysis analyze_dwell(const smtj::TelegraphTrace& labeled);

/// Returns the trace with a constant subtracted from every value.
[[nodiscard]] smtj::TelegraphTrace subtract_offset(smtj::TelegraphTrace trace, double offset);

struct FieldPoint {
    double b;  // T
    double r;  // ohm, time-averaged
};

/// One branch of a field sweep; b strictly monotone.
struct FieldSweep {
    std::vector<FieldPoint> points;

    void validate() const;
};

struct StochasticWindow {
    double b_low;   // T
    double b_high;  // T
    double b_5050;  // T

    [[nodiscard]] double width() const noexcept { return b_high - b_low; }
};

/// Locates the stochastic window of a sweep: the longest contiguous run of
/// points whose averaged resistance lies strictly inside
/// (r_low + 5% gap, r_high - 5% gap), with edges interpolated to the band
/// crossings, and the midpoint crossing nearest the window center as b_5050.
/// Direction independent. Throws Error(NoWindow).
[[nodiscard]] StochasticWindow extract_stochastic_window(const FieldSweep& sweep,
                                                         const LevelEstimate& levels);

/// Inclusive arithmetic grid from start towards stop.
[[nodiscard]] std::vector<double> field_grid(double start, double stop, double step);

/// Mean resistance of one sampled trajectory of length averaging_time at b.
[[nodiscard]] FieldPoint simulate_field_point(const smtj::SmtjParams& p, double b,
                                              double averaging_time, double dt,
                                              std::uint64_t seed);

/// Synthetic sweep: at each field, the mean of a sampled trajectory of length
/// averaging_time (per-point seed split_seed(seed, index)).
[[nodiscard]] FieldSweep simulate_field_sweep(const smtj::SmtjParams& p,
                                              std::span<const double> fields,
                                              double averaging_time, double dt,
                                              std::uint64_t seed);

}  // namespace pbitsim::analysis
