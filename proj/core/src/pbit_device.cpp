#include "pbitsim/pbit_device.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pbitsim::device {

using smtj::MtjState;

namespace {

void require(bool ok, const char* message) {
    if (!ok) {
        throw std::invalid_argument(message);
    }
}

double logistic(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double geometric_mean_resistance(const smtj::SmtjParams& s) {
    return std::sqrt(s.r_parallel * smtj::r_antiparallel(s));
}

}  // namespace

void NmosParams::validate() const {
    require(std::isfinite(v_threshold) && v_threshold >= 0.0, "NmosParams: v_threshold must be >= 0");
    require(std::isfinite(k_factor) && k_factor > 0.0, "NmosParams: k_factor must be > 0");
}

void PbitParams::validate() const {
    smtj.validate();
    nmos.validate();
    require(std::isfinite(v_dd) && v_dd > 0.0, "PbitParams: v_dd must be > 0");
    require(inverter.v_switch > 0.0 && inverter.v_switch < v_dd,
            "PbitParams: inverter v_switch must lie in (0, v_dd)");
    require(!inverter.gain || (std::isfinite(*inverter.gain) && *inverter.gain >= 1.0),
            "PbitParams: inverter gain must be >= 1");
    require(std::isfinite(c_load) && c_load >= 0.0, "PbitParams: c_load must be >= 0");
}

double nmos_resistance(const NmosParams& n, double v_gs) {
    n.validate();
    if (v_gs <= n.v_threshold) {
        return kNmosOffResistance;
    }
    return 1.0 / (n.k_factor * (v_gs - n.v_threshold));
}

double drain_voltage(const PbitParams& p, double v_in, MtjState state) {
    const double r_n = nmos_resistance(p.nmos, v_in);
    return p.v_dd * r_n / (r_n + smtj::resistance(p.smtj, state));
}

double output_voltage(const PbitParams& p, double v_in, MtjState state) {
    const double v_d = drain_voltage(p, v_in, state);
    if (!p.inverter.gain) {
        return v_d < p.inverter.v_switch ? p.v_dd : 0.0;
    }
    return p.v_dd * logistic(*p.inverter.gain * (p.inverter.v_switch - v_d) / p.v_dd);
}

NmosParams calibrate_to_ratio(const PbitParams& p, double ratio) {
    p.validate();
    require(std::isfinite(ratio) && ratio > 0.0, "calibrate_to_ratio: ratio must be > 0");
    const double overdrive = 0.5 * p.v_dd - p.nmos.v_threshold;
    require(overdrive > 0.0, "calibrate_match: v_dd/2 must exceed the NMOS threshold");
    NmosParams out = p.nmos;
    out.k_factor = 1.0 / (ratio * geometric_mean_resistance(p.smtj) * overdrive);
    return out;
}

NmosParams calibrate_match(const PbitParams& p) {
    return calibrate_to_ratio(p, 1.0);
}

PbitParams with_calibrated_nmos(PbitParams p) {
    p.nmos = calibrate_match(p);
    return p;
}

double matching_input(const PbitParams& p) {
    p.validate();
    return p.nmos.v_threshold + 1.0 / (p.nmos.k_factor * geometric_mean_resistance(p.smtj));
}

std::vector<double> sample_output(const PbitParams& p, double v_in, std::size_t n,
                                  double sample_interval, double b, std::uint64_t seed,
                                  const WarningFn& warn) {
    p.validate();
    require(n >= 1, "sample_output: n must be >= 1");
    require(std::isfinite(sample_interval) && sample_interval > 0.0,
            "sample_output: sample_interval must be > 0");
    if (warn && sample_interval < p.smtj.tau_mean) {
        std::ostringstream msg;
        msg << "sample interval " << sample_interval << " s is shorter than the dwell time "
            << p.smtj.tau_mean << " s; output samples are correlated";
        warn(msg.str());
    }

    const double out_p = output_voltage(p, v_in, MtjState::Parallel);
    const double out_ap = output_voltage(p, v_in, MtjState::AntiParallel);
    smtj::TelegraphProcess process(smtj::dwell_times(p.smtj, b), smtj::occupancy_ap(p.smtj, b),
                                   seed);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const MtjState s = process.advance_to(static_cast<double>(i) * sample_interval);
        out[i] = s == MtjState::AntiParallel ? out_ap : out_p;
    }
    return out;
}

std::uint64_t grid_point_seed(std::uint64_t master, std::size_t index,
                              GridSeeding seeding) noexcept {
    return seeding == GridSeeding::Shared ? master : split_seed(master, index);
}

TransferCurve transfer_curve(const PbitParams& p, std::span<const double> v_in_grid,
                             std::size_t n_per_point, double sample_interval, double b,
                             std::uint64_t seed, GridSeeding seeding, const WarningFn& warn) {
    require(!v_in_grid.empty(), "transfer_curve: input grid is empty");
    TransferCurve curve;
    curve.points.reserve(v_in_grid.size());
    for (std::size_t i = 0; i < v_in_grid.size(); ++i) {
        // Warn once per curve rather than once per point.
        const WarningFn& point_warn = i == 0 ? warn : WarningFn{};
        TransferPoint tp{v_in_grid[i],
                         sample_output(p, v_in_grid[i], n_per_point, sample_interval, b,
                                       grid_point_seed(seed, i, seeding), point_warn),
                         0.0};
        double acc = 0.0;
        for (double v : tp.samples) {
            acc += v;
        }
        tp.mean_v_out = acc / static_cast<double>(tp.samples.size());
        curve.points.push_back(std::move(tp));
    }
    return curve;
}

double high_fraction(const TransferPoint& point, double v_dd) {
    require(!point.samples.empty(), "high_fraction: no samples");
    const auto high = std::count_if(point.samples.begin(), point.samples.end(),
                                    [&](double v) { return v >= 0.5 * v_dd; });
    return static_cast<double>(high) / static_cast<double>(point.samples.size());
}

std::optional<double> midpoint_crossing(const TransferCurve& curve, double v_dd) {
    const double half = 0.5 * v_dd;
    const auto& pts = curve.points;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double m0 = pts[i].mean_v_out;
        const double m1 = pts[i + 1].mean_v_out;
        if (m0 == half) {
            return pts[i].v_in;
        }
        if ((m0 < half) != (m1 < half)) {
            const double f = (half - m0) / (m1 - m0);
            return pts[i].v_in + f * (pts[i + 1].v_in - pts[i].v_in);
        }
    }
    if (!pts.empty() && pts.back().mean_v_out == half) {
        return pts.back().v_in;
    }
    return std::nullopt;
}

SigmoidFit fit_sigmoid(const TransferCurve& curve, double v_dd) {
    const auto& pts = curve.points;
    require(pts.size() >= 3, "fit_sigmoid: need at least 3 points");
    require(v_dd > 0.0, "fit_sigmoid: v_dd must be > 0");

    double v_min = pts.front().v_in;
    double v_max = pts.front().v_in;
    for (const auto& tp : pts) {
        v_min = std::min(v_min, tp.v_in);
        v_max = std::max(v_max, tp.v_in);
    }
    const double span = v_max - v_min;
    require(span > 0.0, "fit_sigmoid: grid must span a non-zero range");

    auto residuals_sse = [&](double c, double log_w) {
        const double w = std::exp(log_w);
        double s = 0.0;
        for (const auto& tp : pts) {
            const double r = tp.mean_v_out - v_dd * logistic((tp.v_in - c) / w);
            s += r * r;
        }
        return s;
    };

    const double min_log_w = std::log(span * 1e-6);
    const double max_log_w = std::log(span * 10.0);
    double c = midpoint_crossing(curve, v_dd).value_or(0.5 * (v_min + v_max));
    double log_w = std::log(span / 10.0);
    double sse = residuals_sse(c, log_w);
    double lambda = 1e-3;

    for (int iter = 0; iter < 200; ++iter) {
        const double w = std::exp(log_w);
        double a11 = 0.0, a12 = 0.0, a22 = 0.0, g1 = 0.0, g2 = 0.0;
        for (const auto& tp : pts) {
            const double z = (tp.v_in - c) / w;
            const double sig = logistic(z);
            const double r = tp.mean_v_out - v_dd * sig;
            const double slope = v_dd * sig * (1.0 - sig);
            const double jc = -slope / w;
            const double jw = -slope * z;
            a11 += jc * jc;
            a12 += jc * jw;
            a22 += jw * jw;
            g1 += jc * r;
            g2 += jw * r;
        }
        bool improved = false;
        for (int tries = 0; tries < 30 && !improved; ++tries) {
            const double d11 = a11 * (1.0 + lambda) + 1e-300;
            const double d22 = a22 * (1.0 + lambda) + 1e-300;
            const double det = d11 * d22 - a12 * a12;
            if (!(std::abs(det) > 0.0)) {
                lambda *= 10.0;
                continue;
            }
            const double dc = (g1 * d22 - g2 * a12) / det;
            const double dw = (d11 * g2 - a12 * g1) / det;
            const double c_new = c + dc;
            const double lw_new = std::clamp(log_w + dw, min_log_w, max_log_w);
            const double sse_new = residuals_sse(c_new, lw_new);
            if (sse_new < sse) {
                const bool tiny = std::abs(dc) < 1e-12 * span && std::abs(lw_new - log_w) < 1e-10;
                c = c_new;
                log_w = lw_new;
                sse = sse_new;
                lambda = std::max(lambda * 0.3, 1e-12);
                improved = true;
                if (tiny) {
                    iter = 200;
                }
            } else {
                lambda *= 10.0;
            }
        }
        if (!improved) {
            break;
        }
    }
    return {c, std::exp(log_w), std::sqrt(sse / static_cast<double>(pts.size()))};
}

double mixed_region_span(const TransferCurve& curve, double v_dd, double lo_fraction,
                         double hi_fraction) {
    const double lo = lo_fraction * v_dd;
    const double hi = hi_fraction * v_dd;
    double total = 0.0;
    const auto& pts = curve.points;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double v0 = pts[i].v_in;
        const double v1 = pts[i + 1].v_in;
        const double m0 = pts[i].mean_v_out;
        const double m1 = pts[i + 1].mean_v_out;
        double t_lo = 0.0;
        double t_hi = 1.0;
        if (m0 == m1) {
            if (!(m0 > lo && m0 < hi)) {
                continue;
            }
        } else {
            const double ta = (lo - m0) / (m1 - m0);
            const double tb = (hi - m0) / (m1 - m0);
            t_lo = std::max(0.0, std::min(ta, tb));
            t_hi = std::min(1.0, std::max(ta, tb));
        }
        if (t_hi > t_lo) {
            total += (t_hi - t_lo) * std::abs(v1 - v0);
        }
    }
    return total;
}

std::vector<double> voltage_grid(double start, double stop, double step) {
    require(std::isfinite(start) && std::isfinite(stop) && stop >= start,
            "voltage_grid: need finite start <= stop");
    require(std::isfinite(step) && step > 0.0, "voltage_grid: step must be > 0");
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> grid(n);
    for (std::size_t i = 0; i < n; ++i) {
        grid[i] = start + step * static_cast<double>(i);
    }
    return grid;
}

}  // namespace pbitsim::device
