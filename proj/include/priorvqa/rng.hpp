#pragma once

#include <cstdint>
#include <random>

namespace priorvqa {

// Seeded generator with a uniform draw defined from raw 64-bit output, so the
// weight initialisation is independent of the standard library's distribution
// implementation.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  double gaussian(double mean, double stddev) {
    return mean + stddev * normal_(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace priorvqa
