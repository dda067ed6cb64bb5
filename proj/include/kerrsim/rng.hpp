#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace kerrsim {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Fixed mixing function mapping (masterSeed, trialIndex) to an independent
// substream seed. Pure arithmetic, so results never depend on how trials are
// scheduled across threads.
inline std::uint64_t substream_seed(std::uint64_t masterSeed, std::uint64_t index) {
    return splitmix64(masterSeed + index * 0x9E3779B97F4A7C15ULL);
}

// Seeded random stream with self-contained distributions. std::mt19937_64 has
// a standard-mandated sequence, and the uniform/normal mappings below are
// written out explicitly, so a seed reproduces draws bit-exactly everywhere.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    static RngStream substream(std::uint64_t masterSeed, std::uint64_t index) {
        return RngStream(substream_seed(masterSeed, index));
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform on (0, 1]; safe as a log argument.
    double uniform_pos() { return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53; }

    // Standard normal via Box-Muller; the paired value is cached.
    double gauss() {
        if (hasSpare_) {
            hasSpare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
        const double phi = 6.283185307179586476925286766559 * uniform();
        spare_ = r * std::sin(phi);
        hasSpare_ = true;
        return r * std::cos(phi);
    }

    double gauss(double mean, double sigma) { return mean + sigma * gauss(); }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool hasSpare_ = false;
};

} // namespace kerrsim
