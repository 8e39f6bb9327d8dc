#pragma once

#include <vector>

#include "auralab/scene.hpp"

namespace auralab {

// Mirrored source position together with the number of reflections off each
// of the six shoebox walls (order x=0, x=w, y=0, y=l, z=0, z=h).
struct ImageSource {
    Vec3 position;
    std::array<int, 6> wall_counts{};
    int order = 0;
};

// One specular path at the receiver. `amplitude` is the per-band pressure
// factor (1/r spreading, wall reflections, source directivity, air
// attenuation); `direction` points from the receiver toward the apparent
// source.
struct Arrival {
    double delay = 0.0;
    BandArray amplitude{};
    Vec3 direction;
    int order = 0;
};

// All image sources of total order <= max_order for a shoebox. The source
// itself is the order-0 entry.
std::vector<ImageSource> image_sources(const Shoebox& room, const Vec3& source_pos,
                                       int max_order);

// Specular arrivals sorted by delay. With skip_direct the order-0 arrival is
// omitted; everything else is unchanged. Throws for non-shoebox scenes.
std::vector<Arrival> ism_arrivals(const Scene& scene, int max_order, bool skip_direct);

} // namespace auralab
