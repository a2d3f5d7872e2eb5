#include "recdyn/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "recdyn/errors.hpp"

namespace recdyn {

namespace {

constexpr double kWidth = 640, kHeight = 420;
constexpr double kLeft = 64, kRight = 20, kTop = 36, kBottom = 48;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = 0, hi = 1;
    double span() const { return hi - lo; }
};

Range pad_range(double lo, double hi, bool log_scale) {
    if (!std::isfinite(lo) || !std::isfinite(hi)) return {0, 1};
    if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pad = 0.06 * (hi - lo);
    if (log_scale) return {lo - pad, hi + pad}; // already in log10 units
    return {lo - pad, hi + pad};
}

std::vector<double> linear_ticks(const Range& r) {
    const double raw = r.span() / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
        if (mag * m >= raw) {
            step = mag * m;
            break;
        }
    std::vector<double> ticks;
    for (double t = std::ceil(r.lo / step) * step; t <= r.hi + 1e-12 * step; t += step)
        ticks.push_back(std::abs(t) < step * 1e-9 ? 0.0 : t);
    return ticks;
}

} // namespace

std::string series_color(std::size_t index) {
    static const char* cycle[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
    return cycle[index % (sizeof cycle / sizeof cycle[0])];
}

std::string render_svg(const SvgChart& chart) {
    // Collect data extent (in log10 units when log_y).
    double x_lo = 1e300, x_hi = -1e300, y_lo = 1e300, y_hi = -1e300;
    auto to_y = [&](double v) { return chart.log_y ? std::log10(v) : v; };
    bool any_point = false;
    for (const SvgSeries& s : chart.series) {
        if (s.x.size() != s.y.size())
            throw ShapeMismatchError("svg series '" + s.label + "' x/y length mismatch");
        if (!s.yerr.empty() && s.yerr.size() != s.y.size())
            throw ShapeMismatchError("svg series '" + s.label + "' yerr length mismatch");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            double lo_v = s.y[i], hi_v = s.y[i];
            if (!s.yerr.empty()) {
                lo_v -= s.yerr[i];
                hi_v += s.yerr[i];
            }
            if (chart.log_y && lo_v <= 0) lo_v = s.y[i] > 0 ? s.y[i] : 1e-300;
            if (chart.log_y && s.y[i] <= 0) continue; // cannot place on log axis
            any_point = true;
            x_lo = std::min(x_lo, s.x[i]);
            x_hi = std::max(x_hi, s.x[i]);
            y_lo = std::min(y_lo, to_y(lo_v));
            y_hi = std::max(y_hi, to_y(hi_v));
        }
    }
    for (const auto& [label, v] : chart.hlines) {
        if (chart.log_y && v <= 0) continue;
        any_point = true;
        y_lo = std::min(y_lo, to_y(v));
        y_hi = std::max(y_hi, to_y(v));
    }
    if (!any_point) {
        x_lo = 0;
        x_hi = 1;
        y_lo = 0;
        y_hi = 1;
    }
    const Range xr = pad_range(x_lo, x_hi, false);
    const Range yr = pad_range(y_lo, y_hi, chart.log_y);

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - xr.lo) / xr.span() * plot_w; };
    auto py = [&](double y) { return kTop + (yr.hi - to_y(y)) / yr.span() * plot_h; };
    auto py_raw = [&](double ylog) { return kTop + (yr.hi - ylog) / yr.span() * plot_h; };

    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(kWidth)
        << "\" height=\"" << num(kHeight) << "\" viewBox=\"0 0 " << num(kWidth) << " "
        << num(kHeight) << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<text x=\"" << num(kWidth / 2) << "\" y=\"20\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"15\">" << escape(chart.title) << "</text>\n";

    // Axes.
    out << "<g stroke=\"#333333\" stroke-width=\"1\">\n"
        << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop + plot_h) << "\" x2=\""
        << num(kLeft + plot_w) << "\" y2=\"" << num(kTop + plot_h) << "\"/>\n"
        << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(kLeft)
        << "\" y2=\"" << num(kTop + plot_h) << "\"/>\n</g>\n";

    // Ticks and grid.
    out << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333333\">\n";
    for (double t : linear_ticks(xr)) {
        const double x = px(t);
        out << "<line x1=\"" << num(x) << "\" y1=\"" << num(kTop + plot_h) << "\" x2=\"" << num(x)
            << "\" y2=\"" << num(kTop + plot_h + 4) << "\" stroke=\"#333333\"/>\n"
            << "<text x=\"" << num(x) << "\" y=\"" << num(kTop + plot_h + 17)
            << "\" text-anchor=\"middle\">" << num(t) << "</text>\n";
    }
    if (chart.log_y) {
        for (int e = static_cast<int>(std::floor(yr.lo)); e <= static_cast<int>(std::ceil(yr.hi));
             ++e) {
            if (e < yr.lo || e > yr.hi) continue;
            const double y = py_raw(e);
            out << "<line x1=\"" << num(kLeft - 4) << "\" y1=\"" << num(y) << "\" x2=\""
                << num(kLeft) << "\" y2=\"" << num(y) << "\" stroke=\"#333333\"/>\n"
                << "<text x=\"" << num(kLeft - 7) << "\" y=\"" << num(y + 4)
                << "\" text-anchor=\"end\">1e" << e << "</text>\n"
                << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(y) << "\" x2=\""
                << num(kLeft + plot_w) << "\" y2=\"" << num(y)
                << "\" stroke=\"#dddddd\" stroke-width=\"0.7\"/>\n";
        }
    } else {
        for (double t : linear_ticks(yr)) {
            const double y = py_raw(t);
            out << "<line x1=\"" << num(kLeft - 4) << "\" y1=\"" << num(y) << "\" x2=\""
                << num(kLeft) << "\" y2=\"" << num(y) << "\" stroke=\"#333333\"/>\n"
                << "<text x=\"" << num(kLeft - 7) << "\" y=\"" << num(y + 4)
                << "\" text-anchor=\"end\">" << num(t) << "</text>\n"
                << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(y) << "\" x2=\""
                << num(kLeft + plot_w) << "\" y2=\"" << num(y)
                << "\" stroke=\"#dddddd\" stroke-width=\"0.7\"/>\n";
        }
    }
    out << "</g>\n";

    // Axis labels.
    out << "<text x=\"" << num(kLeft + plot_w / 2) << "\" y=\"" << num(kHeight - 10)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << escape(chart.x_label) << "</text>\n"
        << "<text x=\"16\" y=\"" << num(kTop + plot_h / 2)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
        << "transform=\"rotate(-90 16 " << num(kTop + plot_h / 2) << ")\">"
        << escape(chart.y_label) << "</text>\n";

    // Horizontal guides.
    for (const auto& [label, v] : chart.hlines) {
        if (chart.log_y && v <= 0) continue;
        const double y = py(v);
        out << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(y) << "\" x2=\""
            << num(kLeft + plot_w) << "\" y2=\"" << num(y)
            << "\" stroke=\"#888888\" stroke-dasharray=\"6 3\"/>\n"
            << "<text x=\"" << num(kLeft + plot_w - 4) << "\" y=\"" << num(y - 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" "
            << "fill=\"#666666\">" << escape(label) << "</text>\n";
    }

    // Series: error bars first, then the line, then markers.
    for (const SvgSeries& s : chart.series) {
        if (!s.yerr.empty()) {
            out << "<g stroke=\"" << s.color << "\" stroke-width=\"1\">\n";
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                if (chart.log_y && s.y[i] <= 0) continue;
                double lo_v = s.y[i] - s.yerr[i], hi_v = s.y[i] + s.yerr[i];
                if (chart.log_y && lo_v <= 0) lo_v = s.y[i];
                const double x = px(s.x[i]);
                out << "<line x1=\"" << num(x) << "\" y1=\"" << num(py(lo_v)) << "\" x2=\""
                    << num(x) << "\" y2=\"" << num(py(hi_v)) << "\"/>\n"
                    << "<line x1=\"" << num(x - 3) << "\" y1=\"" << num(py(lo_v)) << "\" x2=\""
                    << num(x + 3) << "\" y2=\"" << num(py(lo_v)) << "\"/>\n"
                    << "<line x1=\"" << num(x - 3) << "\" y1=\"" << num(py(hi_v)) << "\" x2=\""
                    << num(x + 3) << "\" y2=\"" << num(py(hi_v)) << "\"/>\n";
            }
            out << "</g>\n";
        }
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.6\"";
        if (s.dashed) out << " stroke-dasharray=\"5 4\"";
        out << " points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (chart.log_y && s.y[i] <= 0) continue;
            out << num(px(s.x[i])) << "," << num(py(s.y[i])) << " ";
        }
        out << "\"/>\n";
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (chart.log_y && s.y[i] <= 0) continue;
            out << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i]))
                << "\" r=\"2.6\" fill=\"" << s.color << "\"/>\n";
        }
    }

    // Legend (top-right corner of the plot area).
    double ly = kTop + 10;
    for (const SvgSeries& s : chart.series) {
        const double lx = kLeft + plot_w - 150;
        out << "<line x1=\"" << num(lx) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(lx + 22)
            << "\" y2=\"" << num(ly) << "\" stroke=\"" << s.color << "\" stroke-width=\"1.6\"";
        if (s.dashed) out << " stroke-dasharray=\"5 4\"";
        out << "/>\n<text x=\"" << num(lx + 28) << "\" y=\"" << num(ly + 4)
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(s.label) << "</text>\n";
        ly += 16;
    }

    out << "</svg>\n";
    return out.str();
}

void write_svg(const std::filesystem::path& path, const SvgChart& chart) {
    const auto parent = path.parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    out << render_svg(chart);
}

} // namespace recdyn
