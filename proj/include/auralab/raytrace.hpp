#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "auralab/rng.hpp"
#include "auralab/scene.hpp"

namespace auralab {

// The 26 cube-neighbor directions (6 faces, 12 edges, 8 corners) used for
// incidence binning at the receiver.
inline constexpr std::size_t kNumDirectionBins = 26;
const std::array<Vec3, kNumDirectionBins>& direction_bin_centers();
std::size_t direction_bin_index(const Vec3& unit_dir);

// Receiver-side energy histogram over (band, time bin, direction bin).
// Energies are squared-pressure units: a specular path of pressure amplitude
// A shows up as approximately A^2 in its bin.
struct EnergyHistogram {
    double bin_width = 1e-3;
    std::size_t n_time_bins = 0;
    std::vector<double> data; // band-major, then time, then direction
    std::uint64_t rays_emitted = 0;
    std::uint64_t seed = 0;

    static EnergyHistogram zeros(double bin_width, double max_time);

    double& at(std::size_t band, std::size_t time_bin, std::size_t dir_bin) {
        return data[(band * n_time_bins + time_bin) * kNumDirectionBins + dir_bin];
    }
    double at(std::size_t band, std::size_t time_bin, std::size_t dir_bin) const {
        return data[(band * n_time_bins + time_bin) * kNumDirectionBins + dir_bin];
    }
    double band_total(std::size_t band) const;
    double time_bin_total(std::size_t time_bin) const;
    double total() const;
    void add(const EnergyHistogram& other);
};

struct TraceOptions {
    std::uint64_t n_rays = 100000;
    std::uint64_t seed = 1;
    double max_time = 1.0;       // seconds
    bool skip_direct = false;    // drop receiver hits with 0 reflections
    int skip_order_leq = -1;     // drop hits with <= this many reflections
    double bin_width = 1e-3;     // seconds
    double receiver_radius = 0.25; // meters
    double energy_floor = 1e-12; // relative to emitted energy
    unsigned threads = 0;        // 0: AURALAB_THREADS env or hardware count
};

// Stochastic energy ray tracing. Rays start at the source with
// directivity-weighted per-band energy, lose (1-alpha) per surface hit plus
// air absorption per meter, and deposit energy scaled by 1/(pi r^2) whenever
// a segment passes through the receiver sphere. Per-ray RNG streams derived
// from (seed, ray index) make the result bit-identical for any thread count.
// Direction mixing at walls uses the band-averaged scattering coefficient.
EnergyHistogram trace(const Scene& scene, const TraceOptions& options);

// Vector-mixing reflection: with probability `scattering` a cosine-law
// diffuse direction about the normal, otherwise the exact mirror direction.
Vec3 reflect(const Vec3& incoming, const Vec3& normal, double scattering, Rng& rng);

// Reverberation time from the histogram's total-energy decay: Schroeder
// backward integration, then the early-decay slope (interpolated -10 dB
// point) extrapolated to 60 dB. Feed it a reflections-only histogram; a
// direct-sound spike would dominate the early curve.
double estimate_t60(const EnergyHistogram& hist);

// CSV export, header `band,time_bin_s,direction_bin,energy`, nonzero bins.
void write_histogram_csv(const EnergyHistogram& hist, const std::string& path);

} // namespace auralab
