#include "auralab/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace auralab {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string line(double x1, double y1, double x2, double y2, const char* style) {
    return "  <line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) +
           "\" y2=\"" + num(y2) + "\" " + style + "/>\n";
}

} // namespace

std::string render_boxplot_svg(const std::vector<BoxplotEntry>& entries,
                               const std::string& y_label) {
    if (entries.empty()) throw std::invalid_argument("render_boxplot_svg: no entries");

    constexpr double width = 640.0, height = 400.0;
    constexpr double margin_left = 64.0, margin_right = 16.0;
    constexpr double margin_top = 24.0, margin_bottom = 56.0;
    const double plot_w = width - margin_left - margin_right;
    const double plot_h = height - margin_top - margin_bottom;

    double lo = 1e300, hi = -1e300;
    for (const auto& e : entries) {
        lo = std::min({lo, e.stats.whisker_low, e.stats.q1});
        hi = std::max({hi, e.stats.whisker_high, e.stats.q3});
        for (double v : e.stats.outliers) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (hi <= lo) {
        hi = lo + 1.0;
        lo -= 1.0;
    }
    const double pad = 0.08 * (hi - lo);
    lo -= pad;
    hi += pad;

    auto to_y = [&](double v) { return margin_top + (hi - v) / (hi - lo) * plot_h; };
    const double slot = plot_w / static_cast<double>(entries.size());
    const double box_w = std::min(60.0, slot * 0.5);

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) +
           "\" height=\"" + num(height) + "\" viewBox=\"0 0 " + num(width) + " " +
           num(height) + "\">\n";
    svg += "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    // y axis with ~6 ticks on a round step
    const double raw_step = (hi - lo) / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw_step)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (mag * m >= raw_step) {
            step = mag * m;
            break;
        }
    svg += line(margin_left, margin_top, margin_left, margin_top + plot_h,
                "stroke=\"black\" stroke-width=\"1\"");
    for (double v = std::ceil(lo / step) * step; v <= hi + 1e-12; v += step) {
        const double y = to_y(v);
        svg += line(margin_left - 4, y, margin_left, y, "stroke=\"black\" stroke-width=\"1\"");
        svg += line(margin_left, y, margin_left + plot_w, y,
                    "stroke=\"#dddddd\" stroke-width=\"0.5\"");
        svg += "  <text x=\"" + num(margin_left - 8) + "\" y=\"" + num(y + 4) +
               "\" font-size=\"11\" text-anchor=\"end\" font-family=\"sans-serif\">" + num(v) +
               "</text>\n";
    }
    svg += "  <text x=\"14\" y=\"" + num(margin_top + plot_h / 2) +
           "\" font-size=\"12\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "transform=\"rotate(-90 14 " +
           num(margin_top + plot_h / 2) + ")\">" + y_label + "</text>\n";

    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& s = entries[i].stats;
        const double cx = margin_left + slot * (static_cast<double>(i) + 0.5);
        const double x0 = cx - box_w / 2.0, x1 = cx + box_w / 2.0;

        svg += line(cx, to_y(s.whisker_high), cx, to_y(s.q3),
                    "stroke=\"black\" stroke-width=\"1\"");
        svg += line(cx, to_y(s.q1), cx, to_y(s.whisker_low),
                    "stroke=\"black\" stroke-width=\"1\"");
        svg += line(cx - box_w / 4, to_y(s.whisker_high), cx + box_w / 4,
                    to_y(s.whisker_high), "stroke=\"black\" stroke-width=\"1\"");
        svg += line(cx - box_w / 4, to_y(s.whisker_low), cx + box_w / 4, to_y(s.whisker_low),
                    "stroke=\"black\" stroke-width=\"1\"");
        svg += "  <rect x=\"" + num(x0) + "\" y=\"" + num(to_y(s.q3)) + "\" width=\"" +
               num(box_w) + "\" height=\"" + num(std::max(0.5, to_y(s.q1) - to_y(s.q3))) +
               "\" fill=\"#9ecae1\" stroke=\"black\" stroke-width=\"1\"/>\n";
        svg += line(x0, to_y(s.median), x1, to_y(s.median),
                    "stroke=\"#b30000\" stroke-width=\"2\"");
        for (double v : s.outliers)
            svg += "  <circle cx=\"" + num(cx) + "\" cy=\"" + num(to_y(v)) +
                   "\" r=\"2.5\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n";

        svg += "  <text x=\"" + num(cx) + "\" y=\"" + num(margin_top + plot_h + 18) +
               "\" font-size=\"11\" text-anchor=\"middle\" font-family=\"sans-serif\">" +
               entries[i].label + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

void write_boxplot_svg(const std::vector<BoxplotEntry>& entries, const std::string& path,
                       const std::string& y_label) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << render_boxplot_svg(entries, y_label);
}

} // namespace auralab
