#pragma once

#include <cstddef>
#include <string>

#include "auralab/dsp.hpp"

namespace auralab {

enum class WavEncoding { pcm16, float32 };

struct WavSpec {
    unsigned channels = 2;
    unsigned sample_rate = 48000;
    WavEncoding encoding = WavEncoding::float32;
};

// Reads a RIFF/WAVE file with a PCM16 or float32 data chunk. 16-bit samples
// are scaled by 1/32768; unknown chunks are skipped.
Signal read_wav(const std::string& path);

// Writes `signal` with the given spec. Returns the number of samples that
// clipped (pcm16 only; float32 is written untouched). Throws on non-finite
// samples.
std::size_t write_wav(const std::string& path, const Signal& signal, const WavSpec& spec);

inline std::size_t write_wav_float32(const std::string& path, const Signal& signal) {
    WavSpec spec;
    spec.channels = static_cast<unsigned>(signal.num_channels());
    spec.sample_rate = static_cast<unsigned>(signal.sample_rate);
    spec.encoding = WavEncoding::float32;
    return write_wav(path, signal, spec);
}

} // namespace auralab
