#include "cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace pbitsim::cli::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 35.0;
constexpr double kBottom = 50.0;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void include(double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    void finish() {
        if (!std::isfinite(lo)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi == lo) {
            const double pad = lo == 0.0 ? 1.0 : 0.05 * std::abs(lo);
            lo -= pad;
            hi += pad;
        }
    }
};

void open(std::ostringstream& os, const PlotSpec& spec) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
       << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
       << escape(spec.title) << "</text>\n"
       << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 10
       << "\" text-anchor=\"middle\">" << escape(spec.x_label) << "</text>\n"
       << "<text x=\"15\" y=\"" << kHeight / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 15 "
       << kHeight / 2 << ")\">" << escape(spec.y_label) << "</text>\n"
       << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kWidth - kLeft - kRight
       << "\" height=\"" << kHeight - kTop - kBottom << "\" fill=\"none\" stroke=\"black\"/>\n";
}

}  // namespace

std::string line_plot(const std::vector<Series>& series, const PlotSpec& spec) {
    auto ty = [&](double v) { return spec.log_y ? (v > 0.0 ? std::log10(v) : NAN) : v; };
    Range xr;
    Range yr;
    for (const Series& s : series) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            xr.include(s.x[i]);
            yr.include(ty(s.y[i]));
        }
    }
    xr.finish();
    yr.finish();
    const double w = kWidth - kLeft - kRight;
    const double h = kHeight - kTop - kBottom;
    auto sx = [&](double v) { return kLeft + (v - xr.lo) / (xr.hi - xr.lo) * w; };
    auto sy = [&](double v) { return kTop + h - (v - yr.lo) / (yr.hi - yr.lo) * h; };

    std::ostringstream os;
    open(os, spec);
    for (int t = 0; t <= 4; ++t) {
        const double fx = xr.lo + (xr.hi - xr.lo) * t / 4.0;
        const double fy = yr.lo + (yr.hi - yr.lo) * t / 4.0;
        os << "<text x=\"" << px(sx(fx)) << "\" y=\"" << px(kTop + h + 15)
           << "\" text-anchor=\"middle\">" << num(fx) << "</text>\n"
           << "<text x=\"" << px(kLeft - 5) << "\" y=\"" << px(sy(fy) + 4)
           << "\" text-anchor=\"end\">" << (spec.log_y ? "1e" + num(fy) : num(fy)) << "</text>\n";
    }
    for (std::size_t k = 0; k < series.size(); ++k) {
        const Series& s = series[k];
        const char* color = kColors[k % std::size(kColors)];
        if (spec.markers) {
            for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
                const double y = ty(s.y[i]);
                if (std::isfinite(y)) {
                    os << "<circle cx=\"" << px(sx(s.x[i])) << "\" cy=\"" << px(sy(y))
                       << "\" r=\"4\" fill=\"" << color << "\"/>\n";
                }
            }
            continue;
        }
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            const double y = ty(s.y[i]);
            if (std::isfinite(y)) {
                os << px(sx(s.x[i])) << ',' << px(sy(y)) << ' ';
            }
        }
        os << "\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::string bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                      const PlotSpec& spec) {
    Range yr;
    yr.include(0.0);
    for (double v : values) {
        yr.include(v);
    }
    yr.finish();
    const double w = kWidth - kLeft - kRight;
    const double h = kHeight - kTop - kBottom;
    const double slot = values.empty() ? w : w / static_cast<double>(values.size());
    auto sy = [&](double v) { return kTop + h - (v - yr.lo) / (yr.hi - yr.lo) * h; };

    std::ostringstream os;
    open(os, spec);
    for (int t = 0; t <= 4; ++t) {
        const double fy = yr.lo + (yr.hi - yr.lo) * t / 4.0;
        os << "<text x=\"" << px(kLeft - 5) << "\" y=\"" << px(sy(fy) + 4)
           << "\" text-anchor=\"end\">" << num(fy) << "</text>\n";
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double x = kLeft + slot * (static_cast<double>(i) + 0.15);
        const double top = sy(std::max(values[i], 0.0));
        os << "<rect x=\"" << px(x) << "\" y=\"" << px(top) << "\" width=\"" << px(slot * 0.7)
           << "\" height=\"" << px(sy(0.0) - top) << "\" fill=\"" << kColors[0] << "\"/>\n"
           << "<text x=\"" << px(x + slot * 0.35) << "\" y=\"" << px(kTop + h + 15)
           << "\" text-anchor=\"middle\">" << escape(i < labels.size() ? labels[i] : "")
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace pbitsim::cli::svg
