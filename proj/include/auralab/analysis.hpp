#pragma once

#include <string>
#include <vector>

#include "auralab/dsp.hpp"

namespace auralab {

// Boxplot summary. Quartiles interpolate order statistics at p*(n-1);
// whiskers reach the most extreme data points within 1.5 IQR of the box.
struct BoxStats {
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double iqr = 0.0;
    double whisker_low = 0.0;
    double whisker_high = 0.0;
    std::vector<double> outliers;
    std::size_t n = 0;
};

enum class Audibility { transparent, marginal, audible };

std::string audibility_name(Audibility a);

struct JndVerdict {
    double jnd_db = 1.0;
    bool median_below = false;
    bool q3_below = false;
    Audibility classification = Audibility::audible;
};

// True where Lv is within range_db of its maximum and above the level floor.
std::vector<bool> gate_frames(const LevelTrack& lv, double range_db = 40.0);

BoxStats boxplot_stats(const std::vector<double>& samples);

// Classification against the just-noticeable difference. Uses |median| and
// |q3| so coherent cancellation counts against transparency too.
JndVerdict jnd_verdict(const BoxStats& stats, double jnd_db = 1.0);

// Convenience: samples of `track` where `mask` is true.
std::vector<double> masked_values(const LevelTrack& track, const std::vector<bool>& mask);

} // namespace auralab
