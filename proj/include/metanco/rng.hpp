#pragma once

#include <cstdint>

namespace metanco {

/// splitmix64 step; advances the state and returns the next value.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic 64-bit random stream (xoshiro256++ seeded via splitmix64).
///
/// Streams are splittable: substream(seed, index) derives an independent
/// stream per index, so dataset generation is order-independent.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed);

    static RandomStream substream(std::uint64_t seed, std::uint64_t index);

    std::uint64_t next_u64();

    /// Uniform in [0, 1).
    double next_double();

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);

    /// Uniform in {0, ..., n-1}, unbiased.
    std::uint64_t next_below(std::uint64_t n);

    /// Uniform integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi);

    /// Standard normal via the polar method (one value cached).
    double gaussian();

private:
    std::uint64_t s_[4];
    double cached_gauss_ = 0.0;
    bool has_cached_gauss_ = false;
};

} // namespace metanco
