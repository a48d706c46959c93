#pragma once

#include <cstdint>

namespace trimshift {

// Counter-based generator stack used for every random draw in the project.
// The exact construction is part of the output contract (seeded runs must be
// reproducible bit-for-bit, including across reimplementations):
//
//   stream_seed(master, path) = mix64(master XOR (0x9E3779B97F4A7C15 * (path + 1)))
//   state[0..3]               = four successive SplitMix64 outputs from stream_seed
//   draws                     = xoshiro256++ on that state
//   unit double               = (next() >> 11) * 2^-53   in [0, 1)
//
// mix64 is the SplitMix64 finalizer (Steele/Lea/Burrows constants).

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix64(state_);
    }

private:
    std::uint64_t state_;
};

class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        SplitMix64 sm(seed);
        for (auto& w : s_) w = sm.next();
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 0x9E3779B97F4A7C15ULL;
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

inline std::uint64_t stream_seed(std::uint64_t master_seed, std::uint64_t path_index) {
    return mix64(master_seed ^ (0x9E3779B97F4A7C15ULL * (path_index + 1)));
}

inline Xoshiro256pp make_path_rng(std::uint64_t master_seed, std::uint64_t path_index) {
    return Xoshiro256pp(stream_seed(master_seed, path_index));
}

} // namespace trimshift
