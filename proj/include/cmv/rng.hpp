#pragma once

#include <cstdint>
#include <cmath>
#include <random>

namespace cmv {

// splitmix64 step, used to derive independent stream seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic RNG stream. Draw order is part of the reproducibility
// contract, so normals are generated by explicit Box-Muller rather than
// std::normal_distribution (whose algorithm is implementation-defined).
class Rng {
public:
    Rng() : eng_(0) {}

    Rng(std::uint64_t seed, std::uint64_t stream) {
        std::uint64_t s = seed ^ (0x632be59bd9b4e019ULL * (stream + 1));
        std::uint64_t init[4];
        for (auto& w : init) w = splitmix64(s);
        std::seed_seq seq{static_cast<std::uint32_t>(init[0]), static_cast<std::uint32_t>(init[0] >> 32),
                          static_cast<std::uint32_t>(init[1]), static_cast<std::uint32_t>(init[1] >> 32),
                          static_cast<std::uint32_t>(init[2]), static_cast<std::uint32_t>(init[2] >> 32),
                          static_cast<std::uint32_t>(init[3]), static_cast<std::uint32_t>(init[3] >> 32)};
        eng_.seed(seq);
    }

    // Uniform on (0,1]; never returns 0 so log() is safe.
    double uniform() {
        return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller (one draw consumes two uniforms).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    std::uint64_t raw() { return eng_(); }

private:
    std::mt19937_64 eng_;
};

} // namespace cmv
