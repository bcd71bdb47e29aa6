#pragma once

#include <cstdint>
#include <string_view>

namespace curator {

// SplitMix64. Small, portable, and good enough for the per-record draws the
// pipeline needs; every decision stream is derived from (seed, record id,
// stage tag) so outcomes do not depend on processing order or worker count.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1) with 53 random bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [0,n). Multiply-shift reduction; bias is < 2^-64 per draw.
    std::uint64_t uniform_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

  private:
    std::uint64_t state_;
};

// Derived RNG for one record in one stage.
SplitMix64 record_rng(std::uint64_t global_seed, std::string_view record_id,
                      std::string_view stage_tag);

}  // namespace curator
