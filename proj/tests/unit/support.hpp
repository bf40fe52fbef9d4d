#pragma once

#include <cmath>
#include <random>
#include <string>

#include <doctest.h>

#include "fbent/qpm.hpp"

namespace testing {

inline std::string data_path(const std::string& rel) { return std::string(FBENT_DATA_DIR) + "/" + rel; }

inline fbent::CrystalSpec default_crystal() { return fbent::load_crystal(data_path("crystals/default.json")); }

// Purely relative comparison; doctest's default scale of 1 swamps SI-small values.
inline doctest::Approx approx(double v) {
  return v == 0.0 ? doctest::Approx(v) : doctest::Approx(v).scale(0.0);
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Constant-index toy crystal: H on the extraordinary axis, V ordinary.
inline fbent::CrystalSpec toy_crystal(double n_e, double n_o, double period, double length = 20e-3) {
  fbent::CrystalSpec spec;
  spec.segments = {{period, length, 1.0}};
  spec.temperature = 25.0;
  spec.pump_wavelength = 775e-9;
  spec.pump_polarization = fbent::Polarization::V;
  spec.material.sellmeier[fbent::Axis::extraordinary] =
      fbent::SellmeierSet::constant_index(n_e, fbent::Axis::extraordinary);
  spec.material.sellmeier[fbent::Axis::ordinary] = fbent::SellmeierSet::constant_index(n_o, fbent::Axis::ordinary);
  return spec;
}

// Deterministic generator for property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace testing
