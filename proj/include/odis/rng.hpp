#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace odis {

// Deterministic random transforms. std::mt19937_64 output is bit-exact per
// the standard, but the std distributions are not, so the mappings from raw
// engine output to doubles live here.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] inclusive.
  int64_t uniform_int(int64_t lo, int64_t hi);

  // Standard normal via Box-Muller; generates pairs internally.
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Sample k distinct indices from [0, n) by partial Fisher-Yates. Returned
  // order is the draw order.
  std::vector<size_t> sample_indices(size_t n, size_t k);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace odis
