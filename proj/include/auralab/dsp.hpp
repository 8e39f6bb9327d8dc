#pragma once

#include <complex>
#include <string>
#include <vector>

namespace auralab {

// Mono or stereo sample buffer. Samples are full-scale floats (+-1.0 nominal).
struct Signal {
    std::vector<std::vector<double>> channels;
    double sample_rate = 48000.0;

    static Signal mono(std::vector<double> samples, double fs) {
        Signal s;
        s.channels.push_back(std::move(samples));
        s.sample_rate = fs;
        return s;
    }
    static Signal stereo(std::vector<double> left, std::vector<double> right, double fs) {
        Signal s;
        s.channels.push_back(std::move(left));
        s.channels.push_back(std::move(right));
        s.sample_rate = fs;
        return s;
    }
    std::size_t length() const { return channels.empty() ? 0 : channels[0].size(); }
    std::size_t num_channels() const { return channels.size(); }
};

// Two-channel impulse response, the left/right BRIR container.
struct ImpulseResponsePair {
    std::vector<double> left;
    std::vector<double> right;
    double sample_rate = 48000.0;

    std::size_t length() const { return left.size(); }
    Signal as_signal() const { return Signal::stereo(left, right, sample_rate); }
};

// Short-time level sequence in dB. `floor_db` is the clamp applied when the
// track was built; derived difference tracks carry -inf (no clamp).
struct LevelTrack {
    std::vector<double> values_db;
    double hop_s = 0.002;
    double window_s = 0.002;
    double floor_db = -120.0;

    std::size_t size() const { return values_db.size(); }
    double time_of(std::size_t frame) const { return static_cast<double>(frame) * hop_s; }
};

// In-place iterative radix-2 FFT; size must be a power of two.
void fft(std::vector<std::complex<double>>& data, bool inverse);

// Full linear convolution, length a + b - 1. Transform-based; matches the
// direct sum to better than 1e-6 relative.
std::vector<double> fft_convolve(const std::vector<double>& a, const std::vector<double>& b);

// Reference direct convolution, O(n*m). Kept as the oracle for the fast path.
std::vector<double> direct_convolve(const std::vector<double>& a,
                                    const std::vector<double>& b);

// y = h * x per channel; x must be mono and share the response's sample rate.
Signal convolve(const Signal& x, const ImpulseResponsePair& h);

// Sample-wise sum; the shorter input is zero-padded.
Signal mix(const Signal& a, const Signal& b);

// Non-overlapping short-time RMS level in dBFS, power averaged across
// channels, clamped at floor_db.
LevelTrack level_track(const Signal& y, double window_s = 0.002, double hop_s = 0.002,
                       double floor_db = -120.0);

// SNR = Lv - Lu, element-wise, unclamped.
LevelTrack snr_track(const LevelTrack& lv, const LevelTrack& lu);

// Delta L = Lt - Lv, element-wise, unclamped.
LevelTrack delta_l_track(const LevelTrack& lt, const LevelTrack& lv);

// CSV export, header `t_s,value_db`, one row per hop.
void write_level_csv(const LevelTrack& track, const std::string& path);

} // namespace auralab
