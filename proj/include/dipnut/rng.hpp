#pragma once

#include <cstdint>

namespace dipnut {

/// splitmix64 (Steele/Lea/Flood). Counter-based: output i is a pure function
/// of (seed, i), so any element of a stream can be evaluated in O(1) and the
/// result never depends on call order, worker count, or platform.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : seed_(seed) {}

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t at(std::uint64_t i) const {
        return mix(seed_ + (i + 1) * 0x9e3779b97f4a7c15ULL);
    }

    /// uniform in [0,1) with 53 random bits; bit-identical everywhere
    double u01_at(std::uint64_t i) const {
        return static_cast<double>(at(i) >> 11) * 0x1.0p-53;
    }

    /// independent stream for disorder realization r
    SplitMix64 substream(std::uint64_t r) const { return SplitMix64(at(r)); }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
};

}  // namespace dipnut
