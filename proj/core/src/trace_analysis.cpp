#include "pbitsim/trace_analysis.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <mutex>
#include <stdexcept>

#include "pbitsim/errors.hpp"

namespace pbitsim::analysis {

using smtj::MtjState;
using smtj::TelegraphTrace;

namespace {

constexpr std::size_t kHistogramBins = 1024;
constexpr double kModeSeparation = 4.0;
constexpr double kFitCutoff = 0.05;
constexpr double kMaxFitRmse = 0.1;
constexpr std::size_t kMinRuns = 100;
constexpr double kBandFraction = 0.05;

void require(bool ok, const char* message) {
    if (!ok) {
        throw std::invalid_argument(message);
    }
}

// Mean that is exact for constant input: anchor + mean of deviations.
double anchored_mean(std::span<const double> x) {
    const double anchor = x.front();
    double acc = 0.0;
    for (double v : x) {
        acc += v - anchor;
    }
    return anchor + acc / static_cast<double>(x.size());
}

// Smallest 2^a 3^b 5^c 7^d >= n.
std::size_t fft_friendly_size(std::size_t n) {
    for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
        std::size_t r = m;
        for (std::size_t f : std::array<std::size_t, 4>{2, 3, 5, 7}) {
            while (r % f == 0) {
                r /= f;
            }
        }
        if (r == 1) {
            return m;
        }
    }
}

// fftw planning is not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwDeleter {
    void operator()(void* p) const noexcept { fftw_free(p); }
};

struct PlanDeleter {
    void operator()(fftw_plan p) const noexcept {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(p);
    }
};
using PlanPtr = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDeleter>;

// Lagged products sum_t c_t c_{t+k} for k = 0..max_lag. The series is cut
// into blocks of B samples; each block is correlated against itself plus the
// following max_lag samples in an M-point transform (B + max_lag <= M, so no
// circular wrap reaches the wanted lags). Spectra are accumulated and
// inverted once.
std::vector<double> lagged_products_fft(std::span<const double> centered, std::size_t max_lag) {
    const std::size_t n = centered.size();
    const std::size_t m = fft_friendly_size(std::max<std::size_t>(4 * (max_lag + 1), 4096));
    const std::size_t block = m - max_lag;
    const std::size_t bins = m / 2 + 1;

    auto alloc_real = [&] {
        std::unique_ptr<double, FftwDeleter> p(static_cast<double*>(fftw_malloc(sizeof(double) * m)));
        if (!p) {
            throw std::bad_alloc();
        }
        return p;
    };
    auto alloc_complex = [&] {
        std::unique_ptr<fftw_complex, FftwDeleter> p(
            static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));
        if (!p) {
            throw std::bad_alloc();
        }
        return p;
    };
    auto head = alloc_real();
    auto window = alloc_real();
    auto head_spec = alloc_complex();
    auto window_spec = alloc_complex();
    auto acc = alloc_complex();

    PlanPtr forward;
    PlanPtr backward;
    {
        std::lock_guard lock(fftw_planner_mutex());
        const int size = static_cast<int>(m);
        forward.reset(fftw_plan_dft_r2c_1d(size, head.get(), head_spec.get(), FFTW_ESTIMATE));
        backward.reset(fftw_plan_dft_c2r_1d(size, acc.get(), head.get(), FFTW_ESTIMATE));
    }
    std::fill(acc.get()[0], acc.get()[0] + 2 * bins, 0.0);

    for (std::size_t s = 0; s < n; s += block) {
        const std::size_t len = std::min(block, n - s);
        const std::size_t wlen = std::min(block + max_lag, n - s);
        std::copy_n(centered.begin() + static_cast<std::ptrdiff_t>(s), len, head.get());
        std::fill(head.get() + len, head.get() + m, 0.0);
        std::copy_n(centered.begin() + static_cast<std::ptrdiff_t>(s), wlen, window.get());
        std::fill(window.get() + wlen, window.get() + m, 0.0);
        fftw_execute_dft_r2c(forward.get(), head.get(), head_spec.get());
        fftw_execute_dft_r2c(forward.get(), window.get(), window_spec.get());
        for (std::size_t k = 0; k < bins; ++k) {
            const double ar = head_spec.get()[k][0];
            const double ai = head_spec.get()[k][1];
            const double br = window_spec.get()[k][0];
            const double bi = window_spec.get()[k][1];
            acc.get()[k][0] += ar * br + ai * bi;
            acc.get()[k][1] += ar * bi - ai * br;
        }
    }
    fftw_execute(backward.get());

    std::vector<double> out(max_lag + 1);
    const double scale = 1.0 / static_cast<double>(m);
    for (std::size_t k = 0; k <= max_lag; ++k) {
        out[k] = head.get()[k] * scale;
    }
    return out;
}

std::vector<double> lagged_products_direct(std::span<const double> centered, std::size_t max_lag) {
    const std::size_t n = centered.size();
    std::vector<double> out(max_lag + 1, 0.0);
    for (std::size_t k = 0; k <= max_lag; ++k) {
        double acc = 0.0;
        for (std::size_t t = 0; t + k < n; ++t) {
            acc += centered[t] * centered[t + k];
        }
        out[k] = acc;
    }
    return out;
}

double interpolate_b(const FieldPoint& a, const FieldPoint& b, double r_target) {
    if (b.r == a.r) {
        return 0.5 * (a.b + b.b);
    }
    const double f = (r_target - a.r) / (b.r - a.r);
    return a.b + std::clamp(f, 0.0, 1.0) * (b.b - a.b);
}

}  // namespace

void LevelEstimate::validate() const {
    require(std::isfinite(r_low) && std::isfinite(r_high) && r_low > 0.0,
            "LevelEstimate: levels must be finite and positive");
    require(r_low <= threshold && threshold <= r_high,
            "LevelEstimate: threshold must lie between the levels");
}

ThresholdResult threshold_states(const TelegraphTrace& trace) {
    trace.validate();
    require(trace.size() >= 100, "threshold_states: need at least 100 samples");

    const auto [min_it, max_it] = std::minmax_element(trace.values.begin(), trace.values.end());
    const double lo = *min_it;
    const double hi = *max_it;
    if (!(hi > lo)) {
        throw Error(ErrorKind::UnimodalTrace, "trace is constant");
    }

    const double span = hi - lo;
    auto bin_of = [&](double v) {
        const auto b = static_cast<std::size_t>((v - lo) / span * kHistogramBins);
        return std::min(b, kHistogramBins - 1);
    };

    std::vector<double> counts(kHistogramBins, 0.0);
    for (double v : trace.values) {
        counts[bin_of(v)] += 1.0;
    }

    // Otsu: maximize w0 w1 (mu0 - mu1)^2 over split after bin k, bin centers as values.
    double total_n = 0.0;
    double total_sum = 0.0;
    for (std::size_t k = 0; k < kHistogramBins; ++k) {
        total_n += counts[k];
        total_sum += counts[k] * (static_cast<double>(k) + 0.5);
    }
    double best_score = -1.0;
    std::size_t best_split = 0;
    double n0 = 0.0;
    double s0 = 0.0;
    for (std::size_t k = 0; k + 1 < kHistogramBins; ++k) {
        n0 += counts[k];
        s0 += counts[k] * (static_cast<double>(k) + 0.5);
        const double n1 = total_n - n0;
        if (n0 == 0.0 || n1 == 0.0) {
            continue;
        }
        const double diff = s0 / n0 - (total_sum - s0) / n1;
        const double score = n0 * n1 * diff * diff;
        if (score > best_score) {
            best_score = score;
            best_split = k;
        }
    }

    // Per-class moments about a per-class anchor (the bin edge) to keep the
    // sums well conditioned.
    struct Moments {
        double anchor = 0.0;
        double n = 0.0;
        double sum = 0.0;
        double sum_sq = 0.0;
    };
    Moments low{lo};
    Moments high{lo + span * static_cast<double>(best_split + 1) / kHistogramBins};
    for (double v : trace.values) {
        Moments& m = bin_of(v) <= best_split ? low : high;
        const double d = v - m.anchor;
        m.n += 1.0;
        m.sum += d;
        m.sum_sq += d * d;
    }
    if (low.n == 0.0 || high.n == 0.0) {
        throw Error(ErrorKind::UnimodalTrace, "histogram has a single occupied mode");
    }

    const double r_low = low.anchor + low.sum / low.n;
    const double r_high = high.anchor + high.sum / high.n;
    const double ss = (low.sum_sq - low.sum * low.sum / low.n) +
                      (high.sum_sq - high.sum * high.sum / high.n);
    const double pooled_sd = std::sqrt(std::max(ss, 0.0) / static_cast<double>(trace.size()));
    if (r_high - r_low < kModeSeparation * pooled_sd) {
        throw Error(ErrorKind::UnimodalTrace,
                    "level gap is below 4x the pooled intra-level standard deviation");
    }

    ThresholdResult result{{r_low, r_high, 0.5 * (r_low + r_high)}, trace};
    std::vector<MtjState> labels(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
        labels[i] = trace.values[i] > result.levels.threshold ? MtjState::AntiParallel
                                                               : MtjState::Parallel;
    }
    result.trace.labels = std::move(labels);
    return result;
}

double tmr_from_levels(const LevelEstimate& levels) {
    levels.validate();
    return (levels.r_high - levels.r_low) / levels.r_low;
}

std::vector<double> autocorrelation(std::span<const double> x, std::size_t max_lag) {
    require(!x.empty(), "autocorrelation: empty series");
    require(max_lag * 4 < x.size(), "autocorrelation: max_lag must be < length / 4");

    const double mean = anchored_mean(x);
    std::vector<double> centered(x.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        centered[i] = x[i] - mean;
        denom += centered[i] * centered[i];
    }
    if (!(denom > 0.0)) {
        throw Error(ErrorKind::ZeroVariance, "series is constant");
    }

    // Direct summation is cheaper below ~4M multiply-adds.
    const bool small = static_cast<double>(x.size()) * static_cast<double>(max_lag + 1) <= 4.0e6;
    std::vector<double> acf = small ? lagged_products_direct(centered, max_lag)
                                    : lagged_products_fft(centered, max_lag);
    acf[0] = 1.0;
    for (std::size_t k = 1; k <= max_lag; ++k) {
        acf[k] = std::clamp(acf[k] / denom, -1.0, 1.0);
    }
    return acf;
}

std::vector<AcfPoint> autocorrelation(const TelegraphTrace& trace, std::size_t max_lag) {
    trace.validate();
    const auto values = autocorrelation(std::span<const double>(trace.values), max_lag);
    std::vector<AcfPoint> out(values.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
        out[k] = {static_cast<double>(k) * trace.sample_interval, values[k]};
    }
    return out;
}

DwellEstimate fit_dwell_time(std::span<const AcfPoint> acf, double dt, double occupancy,
                             double trace_duration) {
    require(std::isfinite(dt) && dt > 0.0, "fit_dwell_time: dt must be > 0");
    require(occupancy > 0.0 && occupancy < 1.0, "fit_dwell_time: occupancy must be in (0, 1)");

    std::vector<AcfPoint> region;
    for (const AcfPoint& p : acf) {
        if (p.lag <= 0.0) {
            continue;
        }
        if (!(p.value > kFitCutoff)) {
            break;
        }
        region.push_back(p);
    }
    if (region.size() < 2) {
        throw Error(ErrorKind::FitDiverged, "fewer than two lags with acf > 0.05");
    }

    auto sse = [&](double rate) {
        double s = 0.0;
        for (const AcfPoint& p : region) {
            const double r = p.value - std::exp(-rate * p.lag);
            s += r * r;
        }
        return s;
    };

    // Log-linear start through the origin, then damped Gauss-Newton on the rate.
    double num = 0.0;
    double den = 0.0;
    for (const AcfPoint& p : region) {
        num += p.lag * -std::log(p.value);
        den += p.lag * p.lag;
    }
    double rate = num / den;
    double current = sse(rate);
    for (int iter = 0; iter < 100; ++iter) {
        double jtr = 0.0;
        double jtj = 0.0;
        for (const AcfPoint& p : region) {
            const double model = std::exp(-rate * p.lag);
            const double jac = -p.lag * model;
            jtr += jac * (p.value - model);
            jtj += jac * jac;
        }
        if (!(jtj > 0.0)) {
            break;
        }
        double step = jtr / jtj;
        double trial = sse(rate + step);
        int halvings = 0;
        while ((rate + step <= 0.0 || trial > current) && halvings < 40) {
            step *= 0.5;
            trial = rate + step > 0.0 ? sse(rate + step) : current + 1.0;
            ++halvings;
        }
        if (halvings == 40) {
            break;
        }
        rate += step;
        const bool converged = std::abs(step) <= 1e-12 * rate;
        current = trial;
        if (converged) {
            break;
        }
    }

    DwellEstimate est{};
    est.tau_corr = 1.0 / rate;
    est.fit_rmse = std::sqrt(current / static_cast<double>(region.size()));
    est.fit_points = region.size();
    if (!std::isfinite(est.tau_corr) || est.fit_rmse > kMaxFitRmse) {
        throw Error(ErrorKind::FitDiverged, "exponential fit RMSE exceeds 0.1");
    }
    if (!(est.tau_corr > dt) || !(est.tau_corr < trace_duration)) {
        throw Error(ErrorKind::FitDiverged, "fitted correlation time outside (dt, duration)");
    }
    est.tau_ap = est.tau_corr / (1.0 - occupancy);
    est.tau_p = est.tau_corr / occupancy;
    est.tau = 0.5 * (est.tau_ap + est.tau_p);
    return est;
}

std::size_t count_runs(const std::vector<MtjState>& labels) {
    if (labels.empty()) {
        return 0;
    }
    std::size_t runs = 1;
    for (std::size_t i = 1; i < labels.size(); ++i) {
        runs += labels[i] != labels[i - 1] ? 1 : 0;
    }
    return runs;
}

double mean_dwell_direct(const TelegraphTrace& labeled) {
    labeled.validate();
    require(labeled.labels.has_value(), "mean_dwell_direct: trace is unlabeled");
    const auto& labels = *labeled.labels;

    const std::size_t runs = count_runs(labels);
    if (runs < kMinRuns) {
        throw Error(ErrorKind::TooFewTransitions, "fewer than 100 runs in trace");
    }

    std::array<double, 2> total{0.0, 0.0};
    std::array<double, 2> count{0.0, 0.0};
    std::size_t run_start = 0;
    std::size_t run_index = 0;
    for (std::size_t i = 1; i <= labels.size(); ++i) {
        if (i == labels.size() || labels[i] != labels[run_start]) {
            if (run_index != 0 && run_index + 1 != runs) {
                const auto s = static_cast<std::size_t>(labels[run_start]);
                total[s] += static_cast<double>(i - run_start);
                count[s] += 1.0;
            }
            ++run_index;
            run_start = i;
        }
    }
    const double mean_runs = 0.5 * (total[0] / count[0] + total[1] / count[1]);
    return mean_runs * labeled.sample_interval;
}

DwellAnalysis analyze_dwell(const TelegraphTrace& labeled) {
    DwellAnalysis out{};
    out.direct = mean_dwell_direct(labeled);
    out.occupancy = smtj::ap_fraction(*labeled.labels);

    const std::size_t n = labeled.size();
    const auto wanted = static_cast<std::size_t>(std::ceil(5.0 * out.direct / labeled.sample_interval));
    const std::size_t cap = n / 4 > 0 ? (n - 1) / 4 : 0;
    out.max_lag = std::clamp<std::size_t>(wanted, std::min<std::size_t>(16, cap), cap);
    out.acf = autocorrelation(labeled, out.max_lag);
    out.fit = fit_dwell_time(out.acf, labeled.sample_interval, out.occupancy, labeled.duration());
    return out;
}

TelegraphTrace subtract_offset(TelegraphTrace trace, double offset) {
    for (double& v : trace.values) {
        v -= offset;
    }
    return trace;
}

void FieldSweep::validate() const {
    require(points.size() >= 3, "FieldSweep: need at least 3 points");
    const bool ascending = points[1].b > points[0].b;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const bool step_up = points[i].b > points[i - 1].b;
        const bool step_down = points[i].b < points[i - 1].b;
        require(ascending ? step_up : step_down, "FieldSweep: b must be strictly monotone");
    }
    for (const FieldPoint& p : points) {
        require(std::isfinite(p.b) && std::isfinite(p.r), "FieldSweep: non-finite point");
    }
}

StochasticWindow extract_stochastic_window(const FieldSweep& sweep, const LevelEstimate& levels) {
    sweep.validate();
    levels.validate();
    require(levels.r_high > levels.r_low, "extract_stochastic_window: levels must differ");

    std::vector<FieldPoint> pts = sweep.points;
    if (pts.front().b > pts.back().b) {
        std::reverse(pts.begin(), pts.end());
    }

    const double gap = levels.r_high - levels.r_low;
    const double lo_band = levels.r_low + kBandFraction * gap;
    const double hi_band = levels.r_high - kBandFraction * gap;
    auto in_band = [&](const FieldPoint& p) { return p.r > lo_band && p.r < hi_band; };

    // Longest contiguous in-band run; ties go to the lowest field.
    std::size_t best_first = 0;
    std::size_t best_len = 0;
    for (std::size_t i = 0; i < pts.size();) {
        if (!in_band(pts[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < pts.size() && in_band(pts[j])) {
            ++j;
        }
        if (j - i > best_len) {
            best_first = i;
            best_len = j - i;
        }
        i = j;
    }
    if (best_len == 0) {
        throw Error(ErrorKind::NoWindow, "no sweep point lies strictly inside the level bands");
    }
    const std::size_t first = best_first;
    const std::size_t last = best_first + best_len - 1;

    auto band_edge = [&](const FieldPoint& outside) {
        return outside.r >= hi_band ? hi_band : lo_band;
    };
    StochasticWindow w{};
    w.b_low = first > 0 ? interpolate_b(pts[first - 1], pts[first], band_edge(pts[first - 1]))
                        : pts[first].b;
    w.b_high = last + 1 < pts.size()
                   ? interpolate_b(pts[last], pts[last + 1], band_edge(pts[last + 1]))
                   : pts[last].b;

    const double mid = 0.5 * (levels.r_low + levels.r_high);
    const double center = 0.5 * (w.b_low + w.b_high);
    const std::size_t scan_begin = first > 0 ? first - 1 : first;
    const std::size_t scan_end = std::min(last + 1, pts.size() - 1);
    bool found = false;
    double best_distance = 0.0;
    for (std::size_t k = scan_begin; k < scan_end; ++k) {
        const double d0 = pts[k].r - mid;
        const double d1 = pts[k + 1].r - mid;
        if (d0 == 0.0 || (d0 > 0.0) != (d1 > 0.0)) {
            const double b = d0 == 0.0 ? pts[k].b : interpolate_b(pts[k], pts[k + 1], mid);
            if (!found || std::abs(b - center) < best_distance) {
                w.b_5050 = b;
                best_distance = std::abs(b - center);
                found = true;
            }
        }
    }
    if (!found || !(w.b_low < w.b_5050 && w.b_5050 < w.b_high)) {
        throw Error(ErrorKind::NoWindow, "averaged resistance never crosses the level midpoint");
    }
    return w;
}

std::vector<double> field_grid(double start, double stop, double step) {
    require(std::isfinite(start) && std::isfinite(stop), "field_grid: bounds must be finite");
    require(std::isfinite(step) && step > 0.0, "field_grid: step must be > 0");
    const double span = std::abs(stop - start);
    const auto n = static_cast<std::size_t>(std::floor(span / step + 1e-9)) + 1;
    const double dir = stop >= start ? 1.0 : -1.0;
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i) {
        grid[i] = start + dir * step * static_cast<double>(i);
    }
    return grid;
}

FieldPoint simulate_field_point(const smtj::SmtjParams& p, double b, double averaging_time,
                                double dt, std::uint64_t seed) {
    const auto trace = smtj::sample_trajectory(p, b, averaging_time, dt, seed, {});
    return {b, anchored_mean(trace.values)};
}

FieldSweep simulate_field_sweep(const smtj::SmtjParams& p, std::span<const double> fields,
                                double averaging_time, double dt, std::uint64_t seed) {
    FieldSweep sweep;
    sweep.points.reserve(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
        sweep.points.push_back(
            simulate_field_point(p, fields[i], averaging_time, dt, split_seed(seed, i)));
    }
    return sweep;
}

}  // namespace pbitsim::analysis
