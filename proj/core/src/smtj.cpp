#include "pbitsim/smtj.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pbitsim::smtj {

namespace {

void require(bool ok, const char* message) {
    if (!ok) {
        throw std::invalid_argument(message);
    }
}

// 1 / (1 + exp(x)) without overflow warnings for large |x|.
double logistic_complement(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(x));
}

}  // namespace

void SmtjParams::validate() const {
    require(std::isfinite(r_parallel) && r_parallel > 0.0, "SmtjParams: r_parallel must be > 0");
    require(std::isfinite(tmr) && tmr >= 0.0, "SmtjParams: tmr must be >= 0");
    require(std::isfinite(tau_mean) && tau_mean > 0.0, "SmtjParams: tau_mean must be > 0");
    require(std::isfinite(b_5050), "SmtjParams: b_5050 must be finite");
    require(std::isfinite(window_width) && window_width > 0.0,
            "SmtjParams: window_width must be > 0");
}

double r_antiparallel(const SmtjParams& p) {
    p.validate();
    return p.r_parallel * (1.0 + p.tmr);
}

double resistance(const SmtjParams& p, MtjState state) {
    return state == MtjState::AntiParallel ? r_antiparallel(p) : p.r_parallel;
}

double occupancy_scale(const SmtjParams& p) {
    p.validate();
    return p.window_width / (2.0 * std::log(19.0));
}

double occupancy_ap(const SmtjParams& p, double b) {
    return logistic_complement((b - p.b_5050) / occupancy_scale(p));
}

DwellTimes dwell_times(const SmtjParams& p, double b) {
    const double x = (b - p.b_5050) / occupancy_scale(p);
    const double occ_ap = logistic_complement(x);
    const double occ_p = logistic_complement(-x);
    return {2.0 * p.tau_mean * occ_ap, 2.0 * p.tau_mean * occ_p};
}

TelegraphProcess::TelegraphProcess(const DwellTimes& dwell, double occupancy_ap,
                                   std::uint64_t seed)
    : dwell_(dwell), rng_(seed) {
    require(dwell.ap >= 0.0 && dwell.p >= 0.0 && dwell.ap + dwell.p > 0.0,
            "TelegraphProcess: dwell times must be non-negative and not both zero");
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    state_ = uniform(rng_) < occupancy_ap ? MtjState::AntiParallel : MtjState::Parallel;
    next_switch_ = draw_holding(state_);
}

double TelegraphProcess::draw_holding(MtjState s) {
    const double mean = s == MtjState::AntiParallel ? dwell_.ap : dwell_.p;
    if (mean <= 0.0) {
        return 0.0;
    }
    std::exponential_distribution<double> holding(1.0 / mean);
    return holding(rng_);
}

Switch TelegraphProcess::next_switch() {
    const double t = next_switch_;
    state_ = flipped(state_);
    next_switch_ = t + draw_holding(state_);
    return {t, state_};
}

MtjState TelegraphProcess::advance_to(double t) {
    while (next_switch_ <= t) {
        next_switch();
    }
    return state_;
}

std::vector<Switch> switching_events(const SmtjParams& p, double b, double duration,
                                     std::uint64_t seed) {
    require(std::isfinite(duration) && duration > 0.0, "switching_events: duration must be > 0");
    TelegraphProcess process(dwell_times(p, b), occupancy_ap(p, b), seed);
    std::vector<Switch> events;
    while (process.next_switch_time() < duration) {
        events.push_back(process.next_switch());
    }
    return events;
}

void TelegraphTrace::validate() const {
    require(std::isfinite(sample_interval) && sample_interval > 0.0,
            "TelegraphTrace: sample_interval must be > 0");
    require(!values.empty(), "TelegraphTrace: values must be non-empty");
    require(!labels || labels->size() == values.size(),
            "TelegraphTrace: labels must match values in length");
}

std::size_t sample_count(double duration, double dt) {
    require(std::isfinite(dt) && dt > 0.0, "sample interval must be > 0");
    require(std::isfinite(duration) && duration > 0.0, "duration must be > 0");
    const double ratio = duration / dt;
    require(ratio + 1e-9 >= 1.0, "duration must be >= sample interval");
    return static_cast<std::size_t>(std::floor(ratio + 1e-9));
}

TelegraphTrace sample_trajectory(const SmtjParams& p, double b, double duration, double dt,
                                 std::uint64_t seed, const WarningFn& warn) {
    p.validate();
    const std::size_t n = sample_count(duration, dt);
    if (warn && dt > p.tau_mean / 10.0) {
        std::ostringstream msg;
        msg << "sample interval " << dt << " s exceeds tau_mean/10 (" << p.tau_mean / 10.0
            << " s); short dwells will be missed";
        warn(msg.str());
    }

    const double r_p = p.r_parallel;
    const double r_ap = r_antiparallel(p);
    TelegraphProcess process(dwell_times(p, b), occupancy_ap(p, b), seed);

    TelegraphTrace trace;
    trace.sample_interval = dt;
    trace.values.resize(n);
    std::vector<MtjState> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        const MtjState s = process.advance_to(static_cast<double>(i) * dt);
        labels[i] = s;
        trace.values[i] = s == MtjState::AntiParallel ? r_ap : r_p;
    }
    trace.labels = std::move(labels);
    return trace;
}

double ap_fraction(const std::vector<MtjState>& labels) {
    require(!labels.empty(), "ap_fraction: empty label list");
    const auto ap = std::count(labels.begin(), labels.end(), MtjState::AntiParallel);
    return static_cast<double>(ap) / static_cast<double>(labels.size());
}

}  // namespace pbitsim::smtj
