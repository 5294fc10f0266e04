#include "absinstruct/rng.hpp"

#include <numeric>

namespace absinstruct {

std::vector<size_t> sample_indices(size_t population, size_t count, Rng& rng) {
  if (count > population) count = population;
  std::vector<size_t> pool(population);
  std::iota(pool.begin(), pool.end(), size_t{0});
  std::vector<size_t> picked;
  picked.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    size_t j = i + static_cast<size_t>(rng.below(population - i));
    std::swap(pool[i], pool[j]);
    picked.push_back(pool[i]);
  }
  return picked;
}

}  // namespace absinstruct
