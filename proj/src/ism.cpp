#include "auralab/ism.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace auralab {

namespace {

// Mirror lattice for one axis. Index n maps to the image coordinate
//   n even:  s + n * size        (n/2 round trips)
//   n odd:  -s + (n + 1) * size  (mirrored once, then shifted)
// and the per-wall reflection counts split |n| between the low and high wall.
void axis_image(double s, double size, int n, double& coord, int& lo_hits, int& hi_hits) {
    const int q = ((n % 2) + 2) % 2;
    const int m = (n + q) / 2;
    coord = (1 - 2 * q) * s + 2.0 * m * size;
    lo_hits = std::abs(m - q);
    hi_hits = std::abs(m);
}

} // namespace

std::vector<ImageSource> image_sources(const Shoebox& room, const Vec3& source_pos,
                                       int max_order) {
    if (max_order < 0) throw std::invalid_argument("image_sources: max_order must be >= 0");
    if (!room.contains(source_pos))
        throw std::invalid_argument("image_sources: source must lie inside the room");

    std::vector<ImageSource> images;
    for (int nx = -max_order; nx <= max_order; ++nx) {
        for (int ny = -(max_order - std::abs(nx)); ny <= max_order - std::abs(nx); ++ny) {
            const int budget = max_order - std::abs(nx) - std::abs(ny);
            for (int nz = -budget; nz <= budget; ++nz) {
                ImageSource img;
                const int n[3] = {nx, ny, nz};
                const double s[3] = {source_pos.x, source_pos.y, source_pos.z};
                double c[3];
                for (int axis = 0; axis < 3; ++axis) {
                    int lo = 0, hi = 0;
                    axis_image(s[axis], room.dimension(axis), n[axis], c[axis], lo, hi);
                    img.wall_counts[2 * axis] = lo;
                    img.wall_counts[2 * axis + 1] = hi;
                    img.order += lo + hi;
                }
                img.position = {c[0], c[1], c[2]};
                images.push_back(img);
            }
        }
    }
    return images;
}

std::vector<Arrival> ism_arrivals(const Scene& scene, int max_order, bool skip_direct) {
    if (!scene.is_shoebox())
        throw std::invalid_argument("ism_arrivals: image sources require a shoebox room");
    const auto& box = scene.shoebox();

    // per-wall pressure reflection factors sqrt(1 - alpha)
    std::array<BandArray, 6> wall_factor;
    for (int w = 0; w < 6; ++w) {
        const auto& m = scene.material(box.wall_materials[w]);
        for (std::size_t b = 0; b < kNumBands; ++b)
            wall_factor[w][b] = std::sqrt(1.0 - m.absorption[b]);
    }

    const Vec3 rcv = scene.receiver.position;
    const Vec3 src = scene.source.position;
    std::vector<Arrival> arrivals;
    for (const auto& img : image_sources(box, src, max_order)) {
        if (skip_direct && img.order == 0) continue;
        const Vec3 to_image = img.position - rcv;
        const double dist = to_image.norm();
        Arrival a;
        a.order = img.order;
        a.delay = dist / scene.speed_of_sound;
        a.direction = to_image / dist;

        // Unfolding the mirrored path flips one axis per odd reflection
        // count; this recovers the true emission direction at the source.
        const Vec3 unfolded = (rcv - img.position) / dist;
        const Vec3 first_leg{
            (img.wall_counts[0] + img.wall_counts[1]) % 2 ? -unfolded.x : unfolded.x,
            (img.wall_counts[2] + img.wall_counts[3]) % 2 ? -unfolded.y : unfolded.y,
            (img.wall_counts[4] + img.wall_counts[5]) % 2 ? -unfolded.z : unfolded.z};
        const BandArray& gain = scene.source.directivity.gains_toward(first_leg);

        for (std::size_t b = 0; b < kNumBands; ++b) {
            double amp = gain[b] / dist;
            for (int w = 0; w < 6; ++w)
                for (int hit = 0; hit < img.wall_counts[w]; ++hit) amp *= wall_factor[w][b];
            if (scene.air_absorption_db_per_m[b] > 0.0)
                amp *= std::pow(10.0, -scene.air_absorption_db_per_m[b] * dist / 20.0);
            a.amplitude[b] = amp;
        }
        arrivals.push_back(a);
    }
    std::sort(arrivals.begin(), arrivals.end(), [](const Arrival& a, const Arrival& b) {
        return a.delay < b.delay;
    });
    return arrivals;
}

} // namespace auralab
