#pragma once

#include <cstdint>

namespace starjet {

// SplitMix64.  Self-contained so seeded batteries are bit-identical across
// platforms and standard library versions.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [lo, hi], inclusive.
  long range(long lo, long hi) {
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<long>(next() % span);
  }

  // Derived stream, so batteries can fork without coupling draw counts.
  Rng fork(std::uint64_t salt) { return Rng(next() ^ (salt * 0x9e3779b97f4a7c15ull)); }

private:
  std::uint64_t state_;
};

}  // namespace starjet
