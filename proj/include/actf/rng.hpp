#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace actf {

// Deterministic stream keying. All random streams in a run are derived from
// (run seed, stream id) through splitmix64 so that adding a stream never
// perturbs any other stream.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_keys(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ splitmix64(b));
}

inline std::uint64_t mix_keys(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix_keys(mix_keys(a, b), c);
}

// Thin wrapper over mt19937_64 producing platform-stable doubles.
// std distributions are avoided on purpose: their output is
// implementation-defined, which would break bit-identical reruns.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t key) : eng_(key) {}

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // exponential with the given rate (events per unit time), rate > 0
    double exponential(double rate) {
        double u;
        do {
            u = uniform();
        } while (u >= 1.0);
        return -std::log(1.0 - u) / rate;
    }

    // standard normal, Box-Muller
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

    std::uint64_t next_u64() { return eng_(); }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace actf
