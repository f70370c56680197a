#pragma once

#include <cmath>
#include <initializer_list>
#include <numbers>
#include <random>

#include "sublab/types.hpp"

namespace testing {

inline constexpr double kPi = std::numbers::pi;

inline sublab::Vec vec(std::initializer_list<double> values) {
  sublab::Vec v(static_cast<int>(values.size()));
  int i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

// Fixed-seed uniform draws; every test owns its own stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace testing
