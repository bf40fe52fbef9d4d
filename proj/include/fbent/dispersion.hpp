#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

namespace fbent {

enum class Axis { ordinary, extraordinary };
enum class Polarization { H, V };

Polarization orthogonal(Polarization pol);
std::string to_string(Axis axis);
std::string to_string(Polarization pol);
Axis axis_from_string(const std::string& s);
Polarization polarization_from_string(const std::string& s);

/// Functional form of a Sellmeier set; selects which coefficient names are read
/// and how temperature enters.
///   edwards_lawrence: n^2 = A1 + (A2 + B1 F)/(l^2 - (A3 + B2 F)^2) + B3 F - A4 l^2,
///                     F = (T - T0)(T + T0 + 546.32)
///   jundt:            n^2 = a1 + b1 f + (a2 + b2 f)/(l^2 - (a3 + b3 f)^2)
///                           + (a4 + b4 f)/(l^2 - a5^2) - a6 l^2,
///                     f = (T - 24.5)(T + 570.82)
///   constant:         n = n0 (test materials)
/// l is the vacuum wavelength in micrometres, T in degrees Celsius.
enum class SellmeierForm { edwards_lawrence, jundt, constant };

struct SellmeierSet {
  std::string name;
  Axis axis = Axis::extraordinary;
  SellmeierForm form = SellmeierForm::constant;
  std::map<std::string, double> coefficients;
  std::array<double, 2> valid_wavelength_um{0.0, 0.0};
  std::array<double, 2> valid_temperature_C{0.0, 0.0};
  std::string source;

  double coefficient(const std::string& key) const;

  static SellmeierSet constant_index(double n, Axis axis = Axis::extraordinary,
                                     std::array<double, 2> wavelength_um = {0.2, 5.0},
                                     std::array<double, 2> temperature_C = {-273.0, 1000.0});
};

SellmeierSet sellmeier_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const SellmeierSet& set);
SellmeierSet load_sellmeier(const std::filesystem::path& path);

struct OpticalField {
  double wavelength = 0.0;  // vacuum, metres
  Polarization polarization = Polarization::H;
  double temperature = 20.0;  // degrees Celsius
};

inline constexpr double kDefaultGroupIndexStep = 0.01e-9;  // metres

double refractive_index(const OpticalField& field, const SellmeierSet& set);

/// k = 2 pi n / lambda, rad/m.
double wavenumber(const OpticalField& field, const SellmeierSet& set);

/// n_g = n - lambda dn/dlambda with a central difference of half-width `step`.
double group_index(const OpticalField& field, const SellmeierSet& set,
                   double step = kDefaultGroupIndexStep);

/// n_g from the closed-form derivative of the Sellmeier polynomial.
double group_index_analytic(const OpticalField& field, const SellmeierSet& set);

/// Maps each polarization onto a crystal axis and each axis onto a Sellmeier set.
struct Material {
  std::map<Polarization, Axis> axis_map{{Polarization::H, Axis::extraordinary},
                                        {Polarization::V, Axis::ordinary}};
  std::map<Axis, SellmeierSet> sellmeier;

  const SellmeierSet& set_for(Polarization pol) const;
  double index(const OpticalField& field) const { return refractive_index(field, set_for(field.polarization)); }
  double k(const OpticalField& field) const { return wavenumber(field, set_for(field.polarization)); }
  double group_index(const OpticalField& field) const {
    return fbent::group_index(field, set_for(field.polarization));
  }
};

}  // namespace fbent
