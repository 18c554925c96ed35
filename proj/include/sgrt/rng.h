// Copyright Contributors to the sgrt Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace sgrt {

// Random-number phases. Every consumer of randomness draws from its own phase
// so that adding draws in one place never shifts another.
enum class Phase : std::uint32_t {
    Forward = 1,      // forward color picks
    PickFront = 2,    // backward index I
    PickBehind = 3,   // backward index K
    Shade = 4,        // shadow rays and environment directions of forward colors
    ShadeFront = 5,   // shading of c+ in the backward pass
    ShadeBehind = 6,  // shading of c- in the backward pass
    Test = 100,
};

struct RngKey {
    std::uint64_t seed = 0;
    std::uint64_t pixel = 0;
    std::uint64_t sample = 0;
    Phase phase = Phase::Forward;

    RngKey with_sample(std::uint64_t s) const { return {seed, pixel, s, phase}; }
    RngKey with_phase(Phase p) const { return {seed, pixel, sample, p}; }
};

inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Combines two words into a new seed; used to derive per-iteration seeds.
inline constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a + 0x9e3779b97f4a7c15ull + mix64(b));
}

// Counter-based stream: the n-th output is a pure function of (key, n), so a
// stream can be replayed or run on any worker with identical results.
class RngStream {
  public:
    RngStream() = default;
    explicit RngStream(const RngKey &key)
        : state_(hash_combine(
              hash_combine(hash_combine(key.seed, key.pixel), key.sample),
              static_cast<std::uint64_t>(key.phase))) {}

    std::uint64_t next_u64() {
        return mix64(mix64(state_ + 0x9e3779b97f4a7c15ull * ++counter_));
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    std::uint64_t counter() const { return counter_; }

  private:
    std::uint64_t state_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace sgrt
