#pragma once

#include <cmath>
#include <cstdint>

namespace auralab {

// Counter-free splitmix64 generator. Unlike the standard library engines and
// distributions, its output is identical on every platform, which is what
// makes fixed-seed runs byte-reproducible. Independent streams are derived
// from (seed, stream_index) so per-ray work can be scheduled in any order.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {
        // run the mixer a couple of times so small seeds decorrelate
        next_u64();
        next_u64();
    }

    Rng(std::uint64_t seed, std::uint64_t stream)
        : Rng(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 0x632be59bd9b4e019ULL))) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // standard normal via Box-Muller; one draw per call, spare cached
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace auralab
