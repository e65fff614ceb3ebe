#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace grumt {

// Seedable generator used for every stochastic choice in the library.
// The raw stream is std::mt19937_64 (its output sequence is pinned by the
// C++ standard); the real-valued and index mappings below are spelled out
// here instead of using std::uniform_*_distribution, whose outputs differ
// between standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) built from the top 53 bits.
  double next_unit() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Uniform index in [0, n). Modulo bias is irrelevant for n far below 2^64
  // and keeps the mapping trivially portable.
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(engine_() % n);
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    if (items.size() < 2) return;
    for (std::size_t i = items.size() - 1; i > 0; --i) {
      std::swap(items[i], items[uniform_index(i + 1)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace grumt
