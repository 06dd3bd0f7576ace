#pragma once

#include <cstdint>

namespace qsched {

/// SplitMix64: output is a bijective hash of a counter advanced by the golden
/// gamma. Tiny state, platform-independent streams, cheap splitting — exactly
/// what seeded reproducible simulations need.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Independent stream derived from this seed; stream 0 differs from *this.
    static SplitMix64 stream(std::uint64_t seed, std::uint64_t stream_index) {
        SplitMix64 mixer(seed ^ (0xA3EC647659359ACDULL * (stream_index + 1)));
        return SplitMix64(mixer.next_u64());
    }

  private:
    std::uint64_t state_;
};

} // namespace qsched
