#pragma once

//! \file rng.hpp
//! \brief Seedable generator with platform-independent uniform and normal draws.

#include <cstdint>
#include <random>

namespace viscopann {

class Rng
{
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal by inverse CDF.
  double normal();

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace viscopann
