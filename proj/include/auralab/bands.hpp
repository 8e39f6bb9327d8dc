#pragma once

#include <array>
#include <cstddef>

namespace auralab {

// Octave-band resolution used throughout the toolkit.
inline constexpr std::size_t kNumBands = 8;

inline constexpr std::array<double, kNumBands> kBandCenters = {
    62.5, 125.0, 250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0};

using BandArray = std::array<double, kNumBands>;

inline constexpr double kSqrt2 = 1.4142135623730951;

inline constexpr double band_edge_low(std::size_t band) { return kBandCenters[band] / kSqrt2; }
inline constexpr double band_edge_high(std::size_t band) { return kBandCenters[band] * kSqrt2; }

inline constexpr BandArray uniform_bands(double value) {
    BandArray a{};
    for (auto& v : a) v = value;
    return a;
}

} // namespace auralab
