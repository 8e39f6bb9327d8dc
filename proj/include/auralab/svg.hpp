#pragma once

#include <string>
#include <vector>

#include "auralab/analysis.hpp"

namespace auralab {

struct BoxplotEntry {
    std::string label;
    BoxStats stats;
};

// Renders labelled boxplots (box, median line, whiskers, outlier circles)
// with a dB axis. Plain rect/line/circle primitives, no dependencies.
std::string render_boxplot_svg(const std::vector<BoxplotEntry>& entries,
                               const std::string& y_label = "dB");

void write_boxplot_svg(const std::vector<BoxplotEntry>& entries, const std::string& path,
                       const std::string& y_label = "dB");

} // namespace auralab
