#pragma once

#include <cstdint>

namespace normest {

// splitmix64 step; used both as a stream generator seed expander and as the
// integer mixing function for replicate seed derivation.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Replicate seed = mix(mix(mix(master) xor n') xor r') where n', r' are the
// multiplied counters below. Counter-based: any (master, n, r) maps to a
// fixed seed independent of evaluation order or scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t n, std::uint64_t r) {
    std::uint64_t s = master;
    std::uint64_t a = splitmix64(s);
    s = a ^ (n * 0xD1342543DE82EF95ULL + 0x2545F4914F6CDD1DULL);
    a = splitmix64(s);
    s = a ^ (r * 0xDA942042E4DD58B5ULL + 0x9E6C63D0876A9B4BULL);
    return splitmix64(s);
}

// xoshiro256++ with splitmix64 seed expansion. Integer-only state
// transitions, so sequences are bit-identical across platforms.
class rng256 {
public:
    explicit rng256(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    std::uint64_t next_u64() {
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

    // Uniform in [0,1) with 53 random mantissa bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

} // namespace normest
