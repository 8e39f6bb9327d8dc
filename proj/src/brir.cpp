#include "auralab/brir.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace auralab {

namespace {
constexpr double kPi = 3.14159265358979323846;

double sinc(double x) {
    if (x == 0.0) return 1.0;
    const double px = kPi * x;
    return std::sin(px) / px;
}
} // namespace

// ---------------------------------------------------------------------------
// HRTF sets

HrtfSet HrtfSet::parametric(double head_radius, double speed_of_sound) {
    HrtfSet set;
    set.model = Parametric{head_radius, speed_of_sound};
    return set;
}

HrtfSet HrtfSet::identity() {
    HrtfSet set;
    Grid grid;
    grid.directions = {Vec3{0.0, 1.0, 0.0}};
    grid.firs = {FirPair{{1.0}, {1.0}}};
    grid.sample_rate = 0.0;
    set.model = std::move(grid);
    return set;
}

HrtfSet HrtfSet::load_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("hrtf: cannot open '" + path + "'");
    std::string magic, version;
    std::size_t n_dirs = 0, fir_len = 0;
    double fs = 0.0;
    in >> magic >> version >> n_dirs >> fir_len >> fs;
    if (!in || magic != "HRTFGRID" || version != "v1")
        throw std::runtime_error("hrtf: '" + path + "' is not an HRTFGRID v1 file");
    if (n_dirs == 0 || fir_len == 0)
        throw std::runtime_error("hrtf: empty grid in '" + path + "'");

    Grid grid;
    grid.sample_rate = fs;
    for (std::size_t i = 0; i < n_dirs; ++i) {
        Vec3 dir_left, dir_right;
        FirPair pair;
        pair.left.resize(fir_len);
        pair.right.resize(fir_len);
        in >> dir_left.x >> dir_left.y >> dir_left.z;
        for (auto& t : pair.left) in >> t;
        in >> dir_right.x >> dir_right.y >> dir_right.z;
        for (auto& t : pair.right) in >> t;
        if (!in) throw std::runtime_error("hrtf: truncated grid in '" + path + "'");
        if (distance(dir_left, dir_right) > 1e-9)
            throw std::runtime_error("hrtf: left/right direction mismatch in '" + path + "'");
        if (std::abs(dir_left.norm() - 1.0) > 1e-6)
            throw std::runtime_error("hrtf: non-unit direction in '" + path + "'");
        grid.directions.push_back(dir_left);
        grid.firs.push_back(std::move(pair));
    }
    HrtfSet set;
    set.model = std::move(grid);
    return set;
}

HrtfSet HrtfSet::from_ref(const HrtfRef& ref) {
    if (ref.kind == HrtfRef::Kind::parametric) return parametric(ref.head_radius);
    return load_grid(ref.grid_path);
}

HeadBasis HeadBasis::from_orientation(const Vec3& look, const Vec3& up) {
    HeadBasis basis;
    basis.forward = look.normalized();
    basis.right = basis.forward.cross(up).normalized();
    basis.up = basis.right.cross(basis.forward);
    return basis;
}

double woodworth_itd(double head_radius, double speed_of_sound, double lateral_angle) {
    const double mag = std::abs(lateral_angle);
    const double itd = head_radius / speed_of_sound * (mag + std::sin(mag));
    return lateral_angle < 0.0 ? -itd : itd;
}

namespace {

// Windowed-sinc fractional delay cascaded with the one-pole/one-zero
// spherical head shadow (unity DC gain, high-shelf toward the lit ear).
std::vector<double> ear_fir(double delay_samples, double shadow_cos, double fs,
                            double head_radius, double speed_of_sound, std::size_t taps,
                            double window_half_width) {
    std::vector<double> fir(taps, 0.0);
    for (std::size_t i = 0; i < taps; ++i) {
        const double u = static_cast<double>(i) - delay_samples;
        if (std::abs(u) > window_half_width) continue;
        const double w = 0.5 * (1.0 + std::cos(kPi * u / window_half_width));
        fir[i] = sinc(u) * w;
    }
    // bilinear-transformed H(s) = (1 + alpha s/(2 w0)) / (1 + s/(2 w0))
    const double alpha = 1.0 + shadow_cos;
    const double k = fs * head_radius / speed_of_sound;
    const double b0 = (1.0 + alpha * k) / (1.0 + k);
    const double b1 = (1.0 - alpha * k) / (1.0 + k);
    const double a1 = (1.0 - k) / (1.0 + k);
    double x1 = 0.0, y1 = 0.0;
    for (auto& x : fir) {
        const double y = b0 * x + b1 * x1 - a1 * y1;
        x1 = x;
        y1 = y;
        x = y;
    }
    return fir;
}

} // namespace

FirPair hrtf_lookup(const HrtfSet& set, const Vec3& head_direction, double sample_rate) {
    if (const auto* grid = std::get_if<HrtfSet::Grid>(&set.model)) {
        if (grid->sample_rate != 0.0 && grid->sample_rate != sample_rate)
            throw std::runtime_error("hrtf: grid sample rate does not match synthesis rate");
        std::size_t best = 0;
        double best_dot = -2.0;
        for (std::size_t i = 0; i < grid->directions.size(); ++i) {
            const double d = head_direction.dot(grid->directions[i]);
            if (d > best_dot) {
                best_dot = d;
                best = i;
            }
        }
        return grid->firs[best];
    }

    const auto& par = std::get<HrtfSet::Parametric>(set.model);
    const Vec3 dir = head_direction.normalized();
    const double lateral = std::asin(std::clamp(dir.x, -1.0, 1.0));
    const double itd = woodworth_itd(par.head_radius, par.speed_of_sound, lateral);

    const double scale = sample_rate / 48000.0;
    const auto taps = static_cast<std::size_t>(std::lround(128.0 * scale));
    const double base = std::round(64.0 * scale);
    const double half_width = 40.0 * scale;
    const double half_itd_samples = 0.5 * itd * sample_rate;

    FirPair pair;
    pair.right = ear_fir(base - half_itd_samples, dir.x, sample_rate, par.head_radius,
                         par.speed_of_sound, taps, half_width);
    pair.left = ear_fir(base + half_itd_samples, -dir.x, sample_rate, par.head_radius,
                        par.speed_of_sound, taps, half_width);
    return pair;
}

// ---------------------------------------------------------------------------
// Filterbank

BandFilterbank BandFilterbank::design(double sample_rate) {
    const double nyquist = sample_rate / 2.0;
    if (band_edge_high(kNumBands - 1) > nyquist)
        throw std::invalid_argument(
            "sample rate too low for the highest octave band (need >= " +
            std::to_string(2.0 * band_edge_high(kNumBands - 1)) + " Hz)");

    BandFilterbank bank;
    bank.taps = static_cast<std::size_t>(std::lround(513.0 * sample_rate / 48000.0)) | 1u;
    bank.center = (bank.taps - 1) / 2;

    // Zero-phase lowpass at each interior band edge; band k is the difference
    // of neighbours, the bottom band keeps everything below its upper edge
    // and the top band everything above its lower edge. The prototypes then
    // telescope to an exact unit impulse.
    auto lowpass = [&](double cutoff_hz) {
        std::vector<double> h(bank.taps);
        const double fc = cutoff_hz / sample_rate;
        for (std::size_t i = 0; i < bank.taps; ++i) {
            const double u = static_cast<double>(i) - static_cast<double>(bank.center);
            const double w =
                0.42 + 0.5 * std::cos(kPi * u / static_cast<double>(bank.center + 1)) +
                0.08 * std::cos(2.0 * kPi * u / static_cast<double>(bank.center + 1));
            h[i] = 2.0 * fc * sinc(2.0 * fc * u) * w;
        }
        return h;
    };

    std::vector<std::vector<double>> lp;
    for (std::size_t b = 1; b < kNumBands; ++b) lp.push_back(lowpass(band_edge_low(b)));

    bank.prototypes.resize(kNumBands);
    bank.prototypes[0] = lp[0];
    for (std::size_t b = 1; b + 1 < kNumBands; ++b) {
        bank.prototypes[b].resize(bank.taps);
        for (std::size_t i = 0; i < bank.taps; ++i)
            bank.prototypes[b][i] = lp[b][i] - lp[b - 1][i];
    }
    auto& top = bank.prototypes[kNumBands - 1];
    top.assign(bank.taps, 0.0);
    for (std::size_t i = 0; i < bank.taps; ++i) top[i] = -lp[kNumBands - 2][i];
    top[bank.center] += 1.0;

    for (std::size_t b = 0; b < kNumBands; ++b) {
        double e = 0.0;
        for (double v : bank.prototypes[b]) e += v * v;
        bank.band_energies[b] = e;
    }
    return bank;
}

// ---------------------------------------------------------------------------
// Direct path

Arrival direct_path_arrival(const Scene& scene) {
    const Vec3 to_receiver = scene.receiver.position - scene.source.position;
    const double dist = to_receiver.norm();
    if (dist < 1e-6)
        throw std::invalid_argument("direct_path_arrival: source and receiver coincide");
    Arrival a;
    a.order = 0;
    a.delay = dist / scene.speed_of_sound;
    a.direction = (scene.source.position - scene.receiver.position) / dist;
    const BandArray& gain = scene.source.directivity.gains_toward(to_receiver / dist);
    for (std::size_t b = 0; b < kNumBands; ++b) {
        a.amplitude[b] = gain[b] / dist;
        if (scene.air_absorption_db_per_m[b] > 0.0)
            a.amplitude[b] *= std::pow(10.0, -scene.air_absorption_db_per_m[b] * dist / 20.0);
    }
    return a;
}

// ---------------------------------------------------------------------------
// Synthesis

namespace {

// carrier = noise band-filtered with zero-phase alignment
std::vector<double> bandlimited_noise(std::size_t length, const std::vector<double>& proto,
                                      std::size_t proto_center, Rng& rng) {
    std::vector<double> noise(length);
    for (auto& v : noise) v = rng.gaussian();
    std::vector<double> filtered = fft_convolve(noise, proto);
    std::vector<double> out(length);
    for (std::size_t i = 0; i < length; ++i) out[i] = filtered[i + proto_center];
    return out;
}

void accumulate(std::vector<double>& dst, const std::vector<double>& src,
                std::ptrdiff_t offset) {
    for (std::size_t i = 0; i < src.size(); ++i) {
        const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(i) + offset;
        if (j < 0) continue;
        if (static_cast<std::size_t>(j) >= dst.size()) break;
        dst[static_cast<std::size_t>(j)] += src[i];
    }
}

} // namespace

ImpulseResponsePair synthesize_brir(const std::vector<Arrival>& arrivals,
                                    const EnergyHistogram& histogram, const HrtfSet& hrtf,
                                    double sample_rate, std::uint64_t seed,
                                    const HeadBasis& head) {
    const BandFilterbank bank = BandFilterbank::design(sample_rate);
    const auto proto_len = bank.taps;
    const auto center = static_cast<std::ptrdiff_t>(bank.center);

    const std::size_t n_late = histogram.n_time_bins == 0
                                   ? 0
                                   : static_cast<std::size_t>(std::ceil(
                                         static_cast<double>(histogram.n_time_bins) *
                                         histogram.bin_width * sample_rate));

    // Resolve every HRTF pair up front so the output length is known.
    const auto& bin_centers = direction_bin_centers();
    std::vector<FirPair> dir_firs(kNumDirectionBins);
    std::vector<bool> dir_used(kNumDirectionBins, false);
    std::size_t max_hrtf_len = 1;
    if (n_late > 0) {
        for (std::size_t d = 0; d < kNumDirectionBins; ++d) {
            double total = 0.0;
            for (std::size_t b = 0; b < kNumBands; ++b)
                for (std::size_t t = 0; t < histogram.n_time_bins; ++t)
                    total += histogram.at(b, t, d);
            if (total <= 0.0) continue;
            dir_used[d] = true;
            dir_firs[d] = hrtf_lookup(hrtf, head.to_head(bin_centers[d]), sample_rate);
            max_hrtf_len = std::max(max_hrtf_len, dir_firs[d].left.size());
        }
    }
    std::vector<FirPair> arrival_firs(arrivals.size());
    for (std::size_t i = 0; i < arrivals.size(); ++i) {
        arrival_firs[i] = hrtf_lookup(hrtf, head.to_head(arrivals[i].direction), sample_rate);
        max_hrtf_len = std::max(max_hrtf_len, arrival_firs[i].left.size());
    }

    std::size_t out_len = std::max<std::size_t>(1, n_late + max_hrtf_len - 1);
    for (const auto& a : arrivals) {
        const auto n0 = static_cast<std::size_t>(std::llround(a.delay * sample_rate));
        out_len = std::max(out_len, n0 + bank.center + proto_len + max_hrtf_len);
    }

    ImpulseResponsePair out;
    out.sample_rate = sample_rate;
    out.left.assign(out_len, 0.0);
    out.right.assign(out_len, 0.0);

    // Late field: per (band, direction) an independent band-limited noise
    // stream. Each (band, time bin) is normalized in two steps: first per
    // direction (sets the HRTF mix), then across the direction sum so the two
    // output channels together carry exactly the bin energy scaled by the
    // band's unit-impulse share. The second step removes cross-carrier
    // interference from the band energy.
    if (n_late > 0) {
        const double bin_samples = histogram.bin_width * sample_rate;
        std::vector<std::vector<double>> dir_sums(kNumDirectionBins);
        for (std::size_t d = 0; d < kNumDirectionBins; ++d)
            if (dir_used[d]) dir_sums[d].assign(n_late, 0.0);

        std::vector<std::vector<double>> shaped(kNumDirectionBins);
        for (std::size_t b = 0; b < kNumBands; ++b) {
            const double band_share = bank.band_energies[b];
            bool band_any = false;
            for (std::size_t d = 0; d < kNumDirectionBins; ++d) {
                shaped[d].clear();
                if (!dir_used[d]) continue;
                double band_dir_total = 0.0;
                for (std::size_t t = 0; t < histogram.n_time_bins; ++t)
                    band_dir_total += histogram.at(b, t, d);
                if (band_dir_total <= 0.0) continue;

                Rng rng(seed, 0x100 + b * kNumDirectionBins + d);
                const std::vector<double> carrier =
                    bandlimited_noise(n_late, bank.prototypes[b], bank.center, rng);
                shaped[d].assign(n_late, 0.0);
                for (std::size_t t = 0; t < histogram.n_time_bins; ++t) {
                    const double energy = histogram.at(b, t, d);
                    if (energy <= 0.0) continue;
                    const auto i0 = static_cast<std::size_t>(
                        std::llround(static_cast<double>(t) * bin_samples));
                    const auto i1 = std::min(n_late, static_cast<std::size_t>(std::llround(
                                                         static_cast<double>(t + 1) *
                                                         bin_samples)));
                    double sum_sq = 0.0;
                    for (std::size_t i = i0; i < i1; ++i) sum_sq += carrier[i] * carrier[i];
                    if (sum_sq <= 0.0) continue;
                    const double g = std::sqrt(energy * band_share / (2.0 * sum_sq));
                    for (std::size_t i = i0; i < i1; ++i) shaped[d][i] = g * carrier[i];
                    band_any = true;
                }
            }
            if (!band_any) continue;

            for (std::size_t t = 0; t < histogram.n_time_bins; ++t) {
                double bin_energy = 0.0;
                for (std::size_t d = 0; d < kNumDirectionBins; ++d)
                    if (!shaped[d].empty()) bin_energy += histogram.at(b, t, d);
                if (bin_energy <= 0.0) continue;
                const auto i0 = static_cast<std::size_t>(
                    std::llround(static_cast<double>(t) * bin_samples));
                const auto i1 = std::min(n_late, static_cast<std::size_t>(std::llround(
                                                     static_cast<double>(t + 1) *
                                                     bin_samples)));
                double actual = 0.0;
                for (std::size_t i = i0; i < i1; ++i) {
                    double sum = 0.0;
                    for (std::size_t d = 0; d < kNumDirectionBins; ++d)
                        if (!shaped[d].empty()) sum += shaped[d][i];
                    actual += sum * sum;
                }
                if (actual <= 0.0) continue;
                const double lambda = std::sqrt(bin_energy * band_share / (2.0 * actual));
                for (std::size_t d = 0; d < kNumDirectionBins; ++d) {
                    if (shaped[d].empty()) continue;
                    for (std::size_t i = i0; i < i1; ++i) shaped[d][i] *= lambda;
                }
            }

            for (std::size_t d = 0; d < kNumDirectionBins; ++d) {
                if (shaped[d].empty()) continue;
                for (std::size_t i = 0; i < n_late; ++i) dir_sums[d][i] += shaped[d][i];
            }
        }

        for (std::size_t d = 0; d < kNumDirectionBins; ++d) {
            if (!dir_used[d]) continue;
            accumulate(out.left, fft_convolve(dir_sums[d], dir_firs[d].left), 0);
            accumulate(out.right, fft_convolve(dir_sums[d], dir_firs[d].right), 0);
        }
    }

    // Deterministic arrivals: band-weighted impulse through the HRTF pair,
    // centered on the rounded delay sample.
    std::vector<double> shaped(proto_len);
    for (std::size_t i = 0; i < arrivals.size(); ++i) {
        const auto& a = arrivals[i];
        std::fill(shaped.begin(), shaped.end(), 0.0);
        bool nonzero = false;
        for (std::size_t b = 0; b < kNumBands; ++b) {
            if (a.amplitude[b] == 0.0) continue;
            nonzero = true;
            const auto& proto = bank.prototypes[b];
            for (std::size_t j = 0; j < proto_len; ++j) shaped[j] += a.amplitude[b] * proto[j];
        }
        if (!nonzero) continue;
        const auto n0 = static_cast<std::ptrdiff_t>(std::llround(a.delay * sample_rate));
        accumulate(out.left, direct_convolve(shaped, arrival_firs[i].left), n0 - center);
        accumulate(out.right, direct_convolve(shaped, arrival_firs[i].right), n0 - center);
    }
    return out;
}

} // namespace auralab
