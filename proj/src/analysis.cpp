#include "auralab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace auralab {

std::string audibility_name(Audibility a) {
    switch (a) {
    case Audibility::transparent: return "transparent";
    case Audibility::marginal: return "marginal";
    case Audibility::audible: return "audible";
    }
    return "?";
}

std::vector<bool> gate_frames(const LevelTrack& lv, double range_db) {
    if (lv.size() == 0) throw std::invalid_argument("gate_frames: empty track");
    const double peak = *std::max_element(lv.values_db.begin(), lv.values_db.end());
    std::vector<bool> mask(lv.size());
    for (std::size_t i = 0; i < lv.size(); ++i)
        mask[i] = lv.values_db[i] >= peak - range_db && lv.values_db[i] > lv.floor_db;
    return mask;
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

} // namespace

BoxStats boxplot_stats(const std::vector<double>& samples) {
    if (samples.empty()) throw std::invalid_argument("boxplot_stats: empty input");
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());

    BoxStats stats;
    stats.n = sorted.size();
    stats.median = quantile_sorted(sorted, 0.5);
    stats.q1 = quantile_sorted(sorted, 0.25);
    stats.q3 = quantile_sorted(sorted, 0.75);
    stats.iqr = stats.q3 - stats.q1;

    const double fence_low = stats.q1 - 1.5 * stats.iqr;
    const double fence_high = stats.q3 + 1.5 * stats.iqr;
    stats.whisker_low = stats.q3;
    stats.whisker_high = stats.q1;
    bool any_inside = false;
    for (double v : sorted) {
        if (v < fence_low || v > fence_high) {
            stats.outliers.push_back(v);
        } else {
            if (!any_inside) {
                stats.whisker_low = v;
                any_inside = true;
            }
            stats.whisker_high = v;
        }
    }
    if (!any_inside) { // fully degenerate: whiskers collapse onto the box
        stats.whisker_low = stats.q1;
        stats.whisker_high = stats.q3;
    }
    return stats;
}

JndVerdict jnd_verdict(const BoxStats& stats, double jnd_db) {
    JndVerdict verdict;
    verdict.jnd_db = jnd_db;
    verdict.median_below = std::abs(stats.median) < jnd_db;
    verdict.q3_below = std::abs(stats.q3) < jnd_db;
    if (!verdict.median_below)
        verdict.classification = Audibility::audible;
    else if (verdict.q3_below)
        verdict.classification = Audibility::transparent;
    else
        verdict.classification = Audibility::marginal;
    return verdict;
}

std::vector<double> masked_values(const LevelTrack& track, const std::vector<bool>& mask) {
    if (mask.size() != track.size())
        throw std::invalid_argument("masked_values: mask length mismatch");
    std::vector<double> out;
    for (std::size_t i = 0; i < track.size(); ++i)
        if (mask[i]) out.push_back(track.values_db[i]);
    return out;
}

} // namespace auralab
