#pragma once

#include <string>
#include <vector>

namespace pbitsim::cli::svg {

struct Series {
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    bool markers = false;  // points instead of a polyline
};

/// Minimal standalone SVG line (or scatter) plot.
[[nodiscard]] std::string line_plot(const std::vector<Series>& series, const PlotSpec& spec);

/// Vertical bar chart with one labelled bar per value.
[[nodiscard]] std::string bar_chart(const std::vector<std::string>& labels,
                                    const std::vector<double>& values, const PlotSpec& spec);

}  // namespace pbitsim::cli::svg
