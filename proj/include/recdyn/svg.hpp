#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace recdyn {

struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> yerr; // empty = no error bars
    std::string color = "#000000";
    bool dashed = false;
};

/// A single polyline chart; enough for nrmse-vs-d panels with baselines.
struct SvgChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_y = false;
    std::vector<SvgSeries> series;
    std::vector<std::pair<std::string, double>> hlines; // labeled horizontal guides
};

/// Renders the chart as a standalone SVG 1.1 document. Deterministic: equal
/// charts produce identical bytes.
std::string render_svg(const SvgChart& chart);

void write_svg(const std::filesystem::path& path, const SvgChart& chart);

/// Color cycle used by the CLI plots (index wraps around).
std::string series_color(std::size_t index);

} // namespace recdyn
