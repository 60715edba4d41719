#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace bgkit {

/// splitmix64 finalizer; used to derive independent per-particle seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// One substream per particle, derived by counter splitting from a master seed.
// Sampling is hand-rolled (inversion for exponentials, Box-Muller for normals)
// so trajectories are reproducible across platforms and standard libraries.
class RngStream {
public:
    RngStream() : RngStream(0, 0) {}
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
        : eng_(mix64(master_seed + 0x632BE59BD9B4E019ULL * (stream_id + 1))) {}

    /// Uniform in the open interval (0, 1).
    double uniform() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Exponential waiting time with the given rate, sampled by inversion.
    double exponential(double rate) { return -std::log(uniform()) / rate; }

    /// Standard normal via Box-Muller; the second value of each pair is cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 6.28318530717958647692 * u2;
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace bgkit
