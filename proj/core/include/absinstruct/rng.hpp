#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace absinstruct {

// Deterministic generator with a pinned algorithm (splitmix64) so that
// artifacts are byte-identical across platforms and standard libraries.
// std::shuffle / std::uniform_int_distribution are implementation-defined
// and must not be used anywhere an output artifact depends on randomness.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform draw in [0, bound) via rejection sampling (no modulo bias).
  uint64_t below(uint64_t bound) {
    if (bound <= 1) return 0;
    const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    uint64_t value = next();
    while (value >= limit) value = next();
    return value % bound;
  }

  double unit() {  // uniform in [0, 1)
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

 private:
  uint64_t state_;
};

// Stable 64-bit FNV-1a over a label, used to derive per-stage seeds.
inline uint64_t fnv1a64(std::string_view text) {
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

// All randomness flows from one root seed; stage seeds are derived from it
// by tag so stages can be re-run independently with identical draws.
inline uint64_t derive_seed(uint64_t root_seed, std::string_view tag) {
  Rng rng(root_seed ^ fnv1a64(tag));
  return rng.next();
}

// In-place Fisher-Yates shuffle with pinned draw order.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

// Sample `count` distinct indices from [0, population); the result order is
// the draw order (a truncated Fisher-Yates pass).
std::vector<size_t> sample_indices(size_t population, size_t count, Rng& rng);

}  // namespace absinstruct
