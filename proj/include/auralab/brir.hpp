#pragma once

#include <variant>
#include <vector>

#include "auralab/dsp.hpp"
#include "auralab/ism.hpp"
#include "auralab/raytrace.hpp"
#include "auralab/scene.hpp"

namespace auralab {

struct FirPair {
    std::vector<double> left;
    std::vector<double> right;
};

// Head-related filter source: a spherical-head parametric model (Woodworth
// ITD + first-order shadow) or a measured grid of FIR pairs.
struct HrtfSet {
    struct Parametric {
        double head_radius = 0.0875;  // meters
        double speed_of_sound = 343.0;
    };
    struct Grid {
        std::vector<Vec3> directions; // unit vectors, head frame
        std::vector<FirPair> firs;
        double sample_rate = 0.0; // 0 accepts any rate
    };
    std::variant<Parametric, Grid> model = Parametric{};

    static HrtfSet parametric(double head_radius = 0.0875, double speed_of_sound = 343.0);
    static HrtfSet identity(); // single omnidirectional unit tap, for tests
    static HrtfSet load_grid(const std::string& path);
    static HrtfSet from_ref(const HrtfRef& ref);
};

// Maps world directions into head coordinates (+x right, +y forward, +z up).
struct HeadBasis {
    Vec3 right{1.0, 0.0, 0.0};
    Vec3 forward{0.0, 1.0, 0.0};
    Vec3 up{0.0, 0.0, 1.0};

    static HeadBasis from_orientation(const Vec3& look, const Vec3& up);
    static HeadBasis from_receiver(const ReceiverSpec& receiver) {
        return from_orientation(receiver.look, receiver.up);
    }
    Vec3 to_head(const Vec3& world) const {
        return {world.dot(right), world.dot(forward), world.dot(up)};
    }
};

// Signed Woodworth interaural delay (a/c)(theta + sin theta); positive when
// the source is on the right.
double woodworth_itd(double head_radius, double speed_of_sound, double lateral_angle);

// Ear filters for a direction given in head coordinates. Grid sets pick the
// nearest direction (ties to the lowest index); the parametric model builds
// fractional-delay + head-shadow FIRs at `sample_rate`.
FirPair hrtf_lookup(const HrtfSet& set, const Vec3& head_direction, double sample_rate);

// Zero-phase octave filterbank. The eight prototypes sum exactly to a unit
// impulse, so flat-band arrivals reconstruct as plain impulses.
// `band_energies` holds each band's share of a unit impulse's energy (the
// prototype's squared tap sum); it converts histogram path energies into the
// band-limited signal energies an equivalent arrival would produce.
struct BandFilterbank {
    std::vector<std::vector<double>> prototypes; // one per band
    BandArray band_energies{};
    std::size_t taps = 0;
    std::size_t center = 0;

    static BandFilterbank design(double sample_rate);
};

// Analytic source-to-receiver path: delay d/c, amplitude gain/d per band.
Arrival direct_path_arrival(const Scene& scene);

// Renders arrivals (band-shaped impulses through their HRTF pair) plus the
// histogram late field (per-band noise scaled so both output channels
// together carry each bin's energy, HRTF-filtered per direction bin) into a
// two-channel response.
ImpulseResponsePair synthesize_brir(const std::vector<Arrival>& arrivals,
                                    const EnergyHistogram& histogram, const HrtfSet& hrtf,
                                    double sample_rate, std::uint64_t seed,
                                    const HeadBasis& head = HeadBasis{});

} // namespace auralab
