#pragma once

#include <cstdint>
#include <initializer_list>

#include "stochain/types.hpp"

namespace stochain {

// Counter-based random streams. Every draw site derives a fresh stream from
// (seed_base, path, step, salt), so the sample produced at step k does not
// depend on which other steps were sampled before it or on how work is split
// across threads. Same inputs, same bits, always.
//
// The generator is SplitMix64 (Steele, Lea, Flood 2014, public domain). It is
// tiny, passes BigCrush, and seeding is a single mix, which matters because we
// construct one stream per simulated step.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1), 53 random bits.
  Real next_real() { return static_cast<Real>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1); safe to pass to log().
  Real next_real_pos() {
    Real u;
    do {
      u = next_real();
    } while (u == 0.0);
    return u;
  }

  // Uniform on {0, ..., n-1} without modulo bias (Lemire's method with a
  // rejection step).
  std::uint64_t next_below(std::uint64_t n);

 private:
  std::uint64_t state_;
};

// Hashes a list of 64-bit words into one seed. Order matters, so
// derive_seed({a, b}) and derive_seed({b, a}) name different streams.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts);

// The stream a model uses for step k on sample path `path`. `salt`
// distinguishes independent draw sites inside one step (a composed model
// samples its own noise with a different salt than its base chain).
RngStream stream_at(std::uint64_t seed_base, std::uint64_t path, long k,
                    std::uint64_t salt = 0);

}  // namespace stochain
