#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace fedrank {

// Deterministic random stream. std::mt19937_64 is fully specified by the
// standard; the distributions below are implemented here so that values are
// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  // Standard normal via Box-Muller.
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent stream seed for one purpose ("init", "dropout",
// "folds", ...) and an optional index (fold, epoch) from a run seed.
std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view purpose,
                          std::uint64_t index = 0);

}  // namespace fedrank
