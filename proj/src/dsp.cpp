#include "auralab/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace auralab {

namespace {
constexpr double kPi = 3.14159265358979323846;

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}
} // namespace

void fft(std::vector<std::complex<double>>& data, bool inverse) {
    const std::size_t n = data.size();
    if (n == 0 || (n & (n - 1)) != 0)
        throw std::invalid_argument("fft: size must be a power of two");

    // bit reversal permutation
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = (inverse ? 2.0 : -2.0) * kPi / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(angle), std::sin(angle));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = data[i + k];
                const std::complex<double> v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse)
        for (auto& x : data) x /= static_cast<double>(n);
}

std::vector<double> direct_convolve(const std::vector<double>& a,
                                    const std::vector<double>& b) {
    if (a.empty() || b.empty()) return {};
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    return out;
}

std::vector<double> fft_convolve(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) return {};
    const std::size_t out_len = a.size() + b.size() - 1;
    // short kernels (unit impulses, tiny FIRs) stay on the exact direct path
    if (std::min(a.size(), b.size()) <= 64 ||
        static_cast<double>(a.size()) * static_cast<double>(b.size()) < 16384.0)
        return direct_convolve(a, b);

    const std::size_t n = next_pow2(out_len);
    std::vector<std::complex<double>> fa(n), fb(n);
    for (std::size_t i = 0; i < a.size(); ++i) fa[i] = a[i];
    for (std::size_t i = 0; i < b.size(); ++i) fb[i] = b[i];
    fft(fa, false);
    fft(fb, false);
    for (std::size_t i = 0; i < n; ++i) fa[i] *= fb[i];
    fft(fa, true);
    std::vector<double> out(out_len);
    for (std::size_t i = 0; i < out_len; ++i) out[i] = fa[i].real();
    return out;
}

Signal convolve(const Signal& x, const ImpulseResponsePair& h) {
    if (x.num_channels() != 1)
        throw std::invalid_argument("convolve: input must be mono");
    if (x.sample_rate != h.sample_rate)
        throw std::invalid_argument("convolve: sample rate mismatch");
    return Signal::stereo(fft_convolve(x.channels[0], h.left),
                          fft_convolve(x.channels[0], h.right), x.sample_rate);
}

Signal mix(const Signal& a, const Signal& b) {
    if (a.sample_rate != b.sample_rate)
        throw std::invalid_argument("mix: sample rate mismatch");
    if (a.num_channels() != b.num_channels())
        throw std::invalid_argument("mix: channel count mismatch");
    Signal out;
    out.sample_rate = a.sample_rate;
    for (std::size_t c = 0; c < a.num_channels(); ++c) {
        const auto& ca = a.channels[c];
        const auto& cb = b.channels[c];
        std::vector<double> sum(std::max(ca.size(), cb.size()), 0.0);
        for (std::size_t i = 0; i < ca.size(); ++i) sum[i] = ca[i];
        for (std::size_t i = 0; i < cb.size(); ++i) sum[i] += cb[i];
        out.channels.push_back(std::move(sum));
    }
    return out;
}

LevelTrack level_track(const Signal& y, double window_s, double hop_s, double floor_db) {
    if (y.length() == 0 || y.num_channels() == 0)
        throw std::invalid_argument("level_track: empty signal");
    const auto window = static_cast<std::size_t>(std::llround(window_s * y.sample_rate));
    const auto hop = static_cast<std::size_t>(std::llround(hop_s * y.sample_rate));
    if (window < 2) throw std::invalid_argument("level_track: window shorter than 2 samples");
    if (hop < 1) throw std::invalid_argument("level_track: hop shorter than 1 sample");
    if (y.length() < window) throw std::invalid_argument("level_track: signal shorter than window");

    LevelTrack track;
    track.hop_s = hop_s;
    track.window_s = window_s;
    track.floor_db = floor_db;
    const std::size_t n_frames = (y.length() - window) / hop + 1;
    track.values_db.reserve(n_frames);
    const double norm = 1.0 / (static_cast<double>(window) * static_cast<double>(y.num_channels()));
    for (std::size_t f = 0; f < n_frames; ++f) {
        const std::size_t start = f * hop;
        double power = 0.0;
        for (const auto& ch : y.channels)
            for (std::size_t i = start; i < start + window; ++i) power += ch[i] * ch[i];
        power *= norm;
        const double level = power > 0.0 ? 10.0 * std::log10(power)
                                         : -std::numeric_limits<double>::infinity();
        track.values_db.push_back(std::max(level, floor_db));
    }
    return track;
}

namespace {

LevelTrack track_difference(const LevelTrack& a, const LevelTrack& b, const char* what) {
    if (a.size() != b.size() || a.hop_s != b.hop_s || a.window_s != b.window_s)
        throw std::invalid_argument(std::string(what) + ": track layout mismatch");
    LevelTrack out;
    out.hop_s = a.hop_s;
    out.window_s = a.window_s;
    out.floor_db = -std::numeric_limits<double>::infinity();
    out.values_db.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        out.values_db[i] = a.values_db[i] - b.values_db[i];
    return out;
}

} // namespace

LevelTrack snr_track(const LevelTrack& lv, const LevelTrack& lu) {
    return track_difference(lv, lu, "snr_track");
}

LevelTrack delta_l_track(const LevelTrack& lt, const LevelTrack& lv) {
    return track_difference(lt, lv, "delta_l_track");
}

void write_level_csv(const LevelTrack& track, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "t_s,value_db\n";
    char buf[80];
    for (std::size_t i = 0; i < track.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.6f,%.6f\n", track.time_of(i), track.values_db[i]);
        out << buf;
    }
}

} // namespace auralab
