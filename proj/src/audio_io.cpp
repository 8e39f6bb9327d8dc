#include "auralab/audio_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace auralab {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void append_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
    buf.push_back(static_cast<unsigned char>(v & 0xff));
    buf.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
    buf.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
    buf.push_back(static_cast<unsigned char>((v >> 24) & 0xff));
}

void append_u16(std::vector<unsigned char>& buf, std::uint16_t v) {
    buf.push_back(static_cast<unsigned char>(v & 0xff));
    buf.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

void append_tag(std::vector<unsigned char>& buf, const char* tag) {
    buf.insert(buf.end(), tag, tag + 4);
}

} // namespace

Signal read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_wav: cannot open '" + path + "'");
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());

    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw std::runtime_error("read_wav: '" + path + "' is not a RIFF/WAVE file");

    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t sample_rate = 0;
    const unsigned char* data = nullptr;
    std::uint32_t data_size = 0;
    bool have_data = false;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* tag = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t size = read_u32(bytes.data() + pos + 4);
        pos += 8;
        if (pos + size > bytes.size())
            throw std::runtime_error("read_wav: malformed chunk '" + std::string(tag, 4) +
                                     "' in '" + path + "'");
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (size < 16) throw std::runtime_error("read_wav: malformed fmt chunk");
            const unsigned char* f = bytes.data() + pos;
            format = read_u16(f);
            channels = read_u16(f + 2);
            sample_rate = read_u32(f + 4);
            bits = read_u16(f + 14);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            data = bytes.data() + pos;
            data_size = size;
            have_data = true;
        }
        pos += size + (size & 1); // chunks are word aligned
    }
    if (!have_fmt || !have_data)
        throw std::runtime_error("read_wav: missing fmt or data chunk in '" + path + "'");
    if (channels < 1 || channels > 2)
        throw std::runtime_error("read_wav: unsupported channel count " +
                                 std::to_string(channels));

    const bool is_pcm16 = format == kFormatPcm && bits == 16;
    const bool is_float32 = format == kFormatFloat && bits == 32;
    if (!is_pcm16 && !is_float32)
        throw std::runtime_error("read_wav: unsupported encoding (format " +
                                 std::to_string(format) + ", " + std::to_string(bits) +
                                 " bit); only PCM16 and float32 are handled");

    const std::size_t bytes_per_sample = is_pcm16 ? 2 : 4;
    const std::size_t frame_size = bytes_per_sample * channels;
    const std::size_t n_frames = data_size / frame_size;

    Signal out;
    out.sample_rate = sample_rate;
    out.channels.assign(channels, std::vector<double>(n_frames));
    for (std::size_t i = 0; i < n_frames; ++i) {
        for (unsigned c = 0; c < channels; ++c) {
            const unsigned char* p = data + i * frame_size + c * bytes_per_sample;
            if (is_pcm16) {
                const auto v = static_cast<std::int16_t>(read_u16(p));
                out.channels[c][i] = static_cast<double>(v) / 32768.0;
            } else {
                float f;
                std::uint32_t u = read_u32(p);
                std::memcpy(&f, &u, 4);
                out.channels[c][i] = f;
            }
        }
    }
    return out;
}

std::size_t write_wav(const std::string& path, const Signal& signal, const WavSpec& spec) {
    if (spec.channels != signal.num_channels())
        throw std::invalid_argument("write_wav: channel count mismatch");
    if (spec.channels < 1 || spec.channels > 2)
        throw std::invalid_argument("write_wav: only 1 or 2 channels supported");
    for (const auto& ch : signal.channels)
        for (double v : ch)
            if (!std::isfinite(v))
                throw std::invalid_argument("write_wav: non-finite sample");

    const bool is_float = spec.encoding == WavEncoding::float32;
    const std::uint16_t bits = is_float ? 32 : 16;
    const std::uint32_t frame_size = spec.channels * (bits / 8);
    const auto n_frames = static_cast<std::uint32_t>(signal.length());
    const std::uint32_t data_size = n_frames * frame_size;

    std::vector<unsigned char> buf;
    buf.reserve(44 + data_size);
    append_tag(buf, "RIFF");
    append_u32(buf, 36 + data_size);
    append_tag(buf, "WAVE");
    append_tag(buf, "fmt ");
    append_u32(buf, 16);
    append_u16(buf, is_float ? kFormatFloat : kFormatPcm);
    append_u16(buf, static_cast<std::uint16_t>(spec.channels));
    append_u32(buf, spec.sample_rate);
    append_u32(buf, spec.sample_rate * frame_size);
    append_u16(buf, static_cast<std::uint16_t>(frame_size));
    append_u16(buf, bits);
    append_tag(buf, "data");
    append_u32(buf, data_size);

    std::size_t clipped = 0;
    for (std::uint32_t i = 0; i < n_frames; ++i) {
        for (unsigned c = 0; c < spec.channels; ++c) {
            const double v = signal.channels[c][i];
            if (is_float) {
                const float f = static_cast<float>(v);
                std::uint32_t u;
                std::memcpy(&u, &f, 4);
                append_u32(buf, u);
            } else {
                double scaled = v * 32768.0;
                if (scaled > 32767.0) {
                    scaled = 32767.0;
                    ++clipped;
                } else if (scaled < -32768.0) {
                    scaled = -32768.0;
                    ++clipped;
                }
                append_u16(buf, static_cast<std::uint16_t>(
                                    static_cast<std::int16_t>(std::lrint(scaled))));
            }
        }
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_wav: cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("write_wav: short write to '" + path + "'");
    return clipped;
}

} // namespace auralab
