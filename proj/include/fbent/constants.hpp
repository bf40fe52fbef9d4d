#pragma once

#include <numbers>

namespace fbent {

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double kNm = 1e-9;
inline constexpr double kUm = 1e-6;
inline constexpr double kMm = 1e-3;
inline constexpr double kPs = 1e-12;
inline constexpr double kFs = 1e-15;
inline constexpr double kTHz = 1e12;

inline double angular_frequency(double wavelength) { return kTwoPi * kSpeedOfLight / wavelength; }
inline double wavelength_of(double omega) { return kTwoPi * kSpeedOfLight / omega; }

}  // namespace fbent
