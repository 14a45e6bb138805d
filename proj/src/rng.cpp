#include "stochain/rng.hpp"

namespace stochain {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t RngStream::next_below(std::uint64_t n) {
  // Multiply-shift maps a 64-bit draw to [0, n); the rejection loop removes
  // the bias from the 2^64 % n leftover values.
  __uint128_t m = static_cast<__uint128_t>(next_u64()) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    std::uint64_t threshold = -n % n;
    while (low < threshold) {
      m = static_cast<__uint128_t>(next_u64()) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x8f3ad1a6c0935c81ull;
  for (std::uint64_t p : parts) {
    h = mix64(h ^ (p + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2)));
  }
  return h;
}

RngStream stream_at(std::uint64_t seed_base, std::uint64_t path, long k,
                    std::uint64_t salt) {
  return RngStream(
      derive_seed({seed_base, path, static_cast<std::uint64_t>(k), salt}));
}

}  // namespace stochain
