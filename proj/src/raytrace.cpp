#include "auralab/raytrace.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace auralab {

namespace {
constexpr double kPi = 3.14159265358979323846;
} // namespace

// ---------------------------------------------------------------------------
// Direction bins

const std::array<Vec3, kNumDirectionBins>& direction_bin_centers() {
    static const std::array<Vec3, kNumDirectionBins> centers = [] {
        std::array<Vec3, kNumDirectionBins> out;
        std::size_t idx = 0;
        for (int i = -1; i <= 1; ++i)
            for (int j = -1; j <= 1; ++j)
                for (int k = -1; k <= 1; ++k) {
                    if (i == 0 && j == 0 && k == 0) continue;
                    out[idx++] = Vec3{static_cast<double>(i), static_cast<double>(j),
                                      static_cast<double>(k)}
                                     .normalized();
                }
        return out;
    }();
    return centers;
}

std::size_t direction_bin_index(const Vec3& unit_dir) {
    const auto& centers = direction_bin_centers();
    std::size_t best = 0;
    double best_dot = -2.0;
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const double d = unit_dir.dot(centers[i]);
        if (d > best_dot) {
            best_dot = d;
            best = i;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Histogram

EnergyHistogram EnergyHistogram::zeros(double bin_width, double max_time) {
    EnergyHistogram h;
    h.bin_width = bin_width;
    h.n_time_bins = static_cast<std::size_t>(std::ceil(max_time / bin_width));
    h.data.assign(kNumBands * h.n_time_bins * kNumDirectionBins, 0.0);
    return h;
}

double EnergyHistogram::band_total(std::size_t band) const {
    double sum = 0.0;
    const std::size_t stride = n_time_bins * kNumDirectionBins;
    for (std::size_t i = 0; i < stride; ++i) sum += data[band * stride + i];
    return sum;
}

double EnergyHistogram::time_bin_total(std::size_t time_bin) const {
    double sum = 0.0;
    for (std::size_t b = 0; b < kNumBands; ++b)
        for (std::size_t d = 0; d < kNumDirectionBins; ++d) sum += at(b, time_bin, d);
    return sum;
}

double EnergyHistogram::total() const {
    double sum = 0.0;
    for (double v : data) sum += v;
    return sum;
}

void EnergyHistogram::add(const EnergyHistogram& other) {
    if (other.data.size() != data.size() || other.bin_width != bin_width)
        throw std::invalid_argument("EnergyHistogram::add: layout mismatch");
    for (std::size_t i = 0; i < data.size(); ++i) data[i] += other.data[i];
}

// ---------------------------------------------------------------------------
// Reflection

Vec3 reflect(const Vec3& incoming, const Vec3& normal, double scattering, Rng& rng) {
    if (rng.uniform() < scattering) {
        // cosine-law direction about the normal
        const double u1 = rng.uniform();
        const double u2 = rng.uniform();
        const double r = std::sqrt(u1);
        const double phi = 2.0 * kPi * u2;
        const double z = std::sqrt(1.0 - u1);
        // orthonormal basis around the normal
        const Vec3 helper = std::abs(normal.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
        const Vec3 t1 = normal.cross(helper).normalized();
        const Vec3 t2 = normal.cross(t1);
        return t1 * (r * std::cos(phi)) + t2 * (r * std::sin(phi)) + normal * z;
    }
    return mirror(incoming, normal);
}

// ---------------------------------------------------------------------------
// Geometry intersection

namespace {

struct SurfaceHit {
    double distance = -1.0;
    Vec3 point;
    Vec3 normal; // faces the incoming ray
    const Material* material = nullptr;
};

bool next_wall_shoebox(const Scene& scene, const Vec3& pos, const Vec3& dir, SurfaceHit& hit) {
    const auto& box = scene.shoebox();
    double best = -1.0;
    int best_wall = -1;
    for (int axis = 0; axis < 3; ++axis) {
        const double d = axis == 0 ? dir.x : axis == 1 ? dir.y : dir.z;
        const double p = axis == 0 ? pos.x : axis == 1 ? pos.y : pos.z;
        if (std::abs(d) < 1e-15) continue;
        const double size = box.dimension(axis);
        const double target = d > 0.0 ? size : 0.0;
        const double t = (target - p) / d;
        if (t > 1e-9 && (best < 0.0 || t < best)) {
            best = t;
            best_wall = 2 * axis + (d > 0.0 ? 1 : 0);
        }
    }
    if (best_wall < 0) return false;
    hit.distance = best;
    hit.point = pos + dir * best;
    const int axis = best_wall / 2;
    const bool high = best_wall % 2;
    // snap onto the wall plane and keep the point inside the box
    double* c = &hit.point.x;
    c[axis] = high ? box.dimension(axis) : 0.0;
    for (int a = 0; a < 3; ++a)
        if (a != axis) c[a] = std::clamp(c[a], 0.0, box.dimension(a));
    hit.normal = Vec3{};
    (&hit.normal.x)[axis] = high ? -1.0 : 1.0;
    hit.material = &scene.material(box.wall_materials[best_wall]);
    return true;
}

// Precomputed per-triangle data so the per-bounce loop stays tight.
struct PackedTriangle {
    Vec3 a, e1, e2, normal;
    const Material* material;
};

std::vector<PackedTriangle> pack_mesh(const Scene& scene) {
    std::vector<PackedTriangle> packed;
    packed.reserve(scene.mesh().triangles.size());
    for (const auto& tri : scene.mesh().triangles)
        packed.push_back({tri.a, tri.b - tri.a, tri.c - tri.a, tri.unit_normal(),
                          &scene.material(tri.material)});
    return packed;
}

// Moeller-Trumbore against every triangle; meshes here are tiny.
bool next_wall_mesh(const std::vector<PackedTriangle>& triangles, const Vec3& pos,
                    const Vec3& dir, SurfaceHit& hit) {
    double best = -1.0;
    const PackedTriangle* best_tri = nullptr;
    for (const auto& tri : triangles) {
        const Vec3 p = dir.cross(tri.e2);
        const double det = tri.e1.dot(p);
        if (std::abs(det) < 1e-14) continue;
        const double inv_det = 1.0 / det;
        const Vec3 s = pos - tri.a;
        const double u = s.dot(p) * inv_det;
        if (u < -1e-9 || u > 1.0 + 1e-9) continue;
        const Vec3 q = s.cross(tri.e1);
        const double v = dir.dot(q) * inv_det;
        if (v < -1e-9 || u + v > 1.0 + 1e-9) continue;
        const double t = tri.e2.dot(q) * inv_det;
        if (t > 1e-9 && (best < 0.0 || t < best)) {
            best = t;
            best_tri = &tri;
        }
    }
    if (!best_tri) return false;
    hit.distance = best;
    hit.point = pos + dir * best;
    hit.normal = best_tri->normal;
    if (hit.normal.dot(dir) > 0.0) hit.normal = -hit.normal;
    hit.material = best_tri->material;
    return true;
}

struct TraceContext {
    const Scene* scene;
    TraceOptions options;
    Vec3 receiver;
    double receiver_radius_sq;
    double deposit_norm; // 1 / (pi r^2)
    int min_order;
    std::size_t n_time_bins;
    BandArray air_energy_db_per_m; // 2x the pressure attenuation
    std::vector<PackedTriangle> triangles; // mesh rooms only
    double mean_scatter_of(const Material& m) const {
        double s = 0.0;
        for (double v : m.scattering) s += v;
        return s / static_cast<double>(kNumBands);
    }
};

void trace_one_ray(const TraceContext& ctx, std::uint64_t ray_index, EnergyHistogram& out) {
    const Scene& scene = *ctx.scene;
    const TraceOptions& opt = ctx.options;
    Rng rng(opt.seed, ray_index);

    // uniform emission direction
    const double z = 2.0 * rng.uniform() - 1.0;
    const double phi = 2.0 * kPi * rng.uniform();
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    Vec3 dir{rho * std::cos(phi), rho * std::sin(phi), z};

    const double e0 = 4.0 * kPi / static_cast<double>(opt.n_rays);
    BandArray energy;
    const BandArray& gain = scene.source.directivity.gains_toward(dir);
    double peak_energy = 0.0;
    for (std::size_t b = 0; b < kNumBands; ++b) {
        energy[b] = e0 * gain[b] * gain[b];
        peak_energy = std::max(peak_energy, energy[b]);
    }
    if (peak_energy <= 0.0) return;
    const double kill_below = peak_energy * opt.energy_floor;

    Vec3 pos = scene.source.position;
    double travel = 0.0;
    int reflections = 0;
    const double max_distance = opt.max_time * scene.speed_of_sound;
    const bool is_box = scene.is_shoebox();

    for (int bounce = 0; bounce < 1000000; ++bounce) {
        SurfaceHit hit;
        const bool found = is_box ? next_wall_shoebox(scene, pos, dir, hit)
                                  : next_wall_mesh(ctx.triangles, pos, dir, hit);
        if (!found) {
            char buf[192];
            std::snprintf(buf, sizeof(buf),
                          "trace: ray escaped the room near (%.4f, %.4f, %.4f) heading "
                          "(%.4f, %.4f, %.4f); the mesh is not closed",
                          pos.x, pos.y, pos.z, dir.x, dir.y, dir.z);
            throw std::runtime_error(buf);
        }

        if (reflections >= ctx.min_order) {
            // closest approach of this segment to the receiver sphere
            const Vec3 to_rcv = ctx.receiver - pos;
            const double along = to_rcv.dot(dir);
            if (along > 1e-9 && along <= hit.distance) {
                const double off_sq = (to_rcv - dir * along).norm_sq();
                if (off_sq < ctx.receiver_radius_sq) {
                    const double travel_at = travel + along;
                    const auto bin = static_cast<std::size_t>(
                        (travel_at / scene.speed_of_sound) / opt.bin_width);
                    if (bin < ctx.n_time_bins) {
                        const std::size_t dbin = direction_bin_index(-dir);
                        for (std::size_t b = 0; b < kNumBands; ++b) {
                            double e = energy[b] * ctx.deposit_norm;
                            if (ctx.air_energy_db_per_m[b] > 0.0)
                                e *= std::pow(10.0, -ctx.air_energy_db_per_m[b] * along / 10.0);
                            out.at(b, bin, dbin) += e;
                        }
                    }
                }
            }
        }

        travel += hit.distance;
        if (travel >= max_distance) return;

        double peak = 0.0;
        for (std::size_t b = 0; b < kNumBands; ++b) {
            energy[b] *= 1.0 - hit.material->absorption[b];
            if (ctx.air_energy_db_per_m[b] > 0.0)
                energy[b] *=
                    std::pow(10.0, -ctx.air_energy_db_per_m[b] * hit.distance / 10.0);
            peak = std::max(peak, energy[b]);
        }
        if (peak < kill_below) return;

        dir = reflect(dir, hit.normal, ctx.mean_scatter_of(*hit.material), rng);
        pos = hit.point;
        ++reflections;
    }
}

unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("AURALAB_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

} // namespace

EnergyHistogram trace(const Scene& scene, const TraceOptions& options) {
    if (options.n_rays < 1) throw std::invalid_argument("trace: n_rays must be >= 1");
    if (!(options.max_time > 0.0)) throw std::invalid_argument("trace: max_time must be > 0");
    if (!(options.receiver_radius > 0.0))
        throw std::invalid_argument("trace: receiver radius must be > 0");

    TraceContext ctx;
    ctx.scene = &scene;
    ctx.options = options;
    ctx.receiver = scene.receiver.position;
    ctx.receiver_radius_sq = options.receiver_radius * options.receiver_radius;
    ctx.deposit_norm = 1.0 / (kPi * ctx.receiver_radius_sq);
    ctx.min_order = std::max(options.skip_direct ? 1 : 0, options.skip_order_leq + 1);
    ctx.air_energy_db_per_m = scene.air_absorption_db_per_m;
    if (!scene.is_shoebox()) ctx.triangles = pack_mesh(scene);

    EnergyHistogram result = EnergyHistogram::zeros(options.bin_width, options.max_time);
    result.rays_emitted = options.n_rays;
    result.seed = options.seed;
    ctx.n_time_bins = result.n_time_bins;

    // Fixed chunking: per-chunk partial histograms are merged in chunk order,
    // so the float accumulation order is independent of the thread count.
    const std::uint64_t n_chunks =
        std::min<std::uint64_t>(16, (options.n_rays + 8191) / 8192);
    const std::uint64_t chunk_size = (options.n_rays + n_chunks - 1) / n_chunks;

    std::vector<EnergyHistogram> partials(
        n_chunks, EnergyHistogram::zeros(options.bin_width, options.max_time));
    std::atomic<std::uint64_t> next_chunk{0};
    std::atomic<bool> failed{false};
    std::string error_message;
    std::mutex error_mutex;

    auto worker = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::uint64_t c = next_chunk.fetch_add(1);
            if (c >= n_chunks) return;
            const std::uint64_t begin = c * chunk_size;
            const std::uint64_t end = std::min(options.n_rays, begin + chunk_size);
            try {
                for (std::uint64_t ray = begin; ray < end; ++ray)
                    trace_one_ray(ctx, ray, partials[c]);
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mutex);
                error_message = e.what();
                failed.store(true);
            }
        }
    };

    const unsigned threads =
        std::min<unsigned>(resolve_threads(options.threads), static_cast<unsigned>(n_chunks));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) throw std::runtime_error(error_message);

    for (const auto& partial : partials) result.add(partial);
    return result;
}

// ---------------------------------------------------------------------------
// Decay fit

double estimate_t60(const EnergyHistogram& hist) {
    std::vector<double> per_bin(hist.n_time_bins, 0.0);
    for (std::size_t t = 0; t < hist.n_time_bins; ++t) per_bin[t] = hist.time_bin_total(t);

    // Schroeder backward integration
    std::vector<double> edc(per_bin.size(), 0.0);
    double acc = 0.0;
    for (std::size_t i = per_bin.size(); i-- > 0;) {
        acc += per_bin[i];
        edc[i] = acc;
    }
    if (acc <= 0.0) throw std::invalid_argument("estimate_t60: histogram holds no energy");

    // Early-decay-time estimate: interpolated time at which the curve has
    // fallen 10 dB from the start, extrapolated to 60 dB.
    double prev_db = 0.0;
    double prev_t = 0.0;
    for (std::size_t i = 0; i < edc.size(); ++i) {
        if (edc[i] <= 0.0) break;
        const double db = 10.0 * std::log10(edc[i] / acc);
        const double t = (static_cast<double>(i) + 0.5) * hist.bin_width;
        if (db <= -10.0) {
            const double f = (-10.0 - prev_db) / (db - prev_db);
            return 6.0 * (prev_t + f * (t - prev_t));
        }
        prev_db = db;
        prev_t = t;
    }
    throw std::invalid_argument("estimate_t60: decay never reaches -10 dB");
}

void write_histogram_csv(const EnergyHistogram& hist, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "band,time_bin_s,direction_bin,energy\n";
    char buf[96];
    for (std::size_t b = 0; b < kNumBands; ++b)
        for (std::size_t t = 0; t < hist.n_time_bins; ++t)
            for (std::size_t d = 0; d < kNumDirectionBins; ++d) {
                const double e = hist.at(b, t, d);
                if (e == 0.0) continue;
                std::snprintf(buf, sizeof(buf), "%zu,%.6f,%zu,%.12g\n", b,
                              static_cast<double>(t) * hist.bin_width, d, e);
                out << buf;
            }
}

} // namespace auralab
