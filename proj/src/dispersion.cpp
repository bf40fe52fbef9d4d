#include "fbent/dispersion.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "fbent/constants.hpp"
#include "fbent/error.hpp"

namespace fbent {

namespace {

struct IndexSquared {
  double value;       // n^2
  double derivative;  // d(n^2)/d(lambda_um)
};

IndexSquared edwards_lawrence(const SellmeierSet& s, double l, double t) {
  const double t0 = s.coefficients.contains("T0") ? s.coefficient("T0") : 24.5;
  const double f = (t - t0) * (t + t0 + 2.0 * 273.16);
  const double num = s.coefficient("A2") + s.coefficient("B1") * f;
  const double pole = s.coefficient("A3") + s.coefficient("B2") * f;
  const double den = l * l - pole * pole;
  const double a4 = s.coefficient("A4");
  return {s.coefficient("A1") + num / den + s.coefficient("B3") * f - a4 * l * l,
          -2.0 * l * num / (den * den) - 2.0 * a4 * l};
}

IndexSquared jundt(const SellmeierSet& s, double l, double t) {
  const double f = (t - 24.5) * (t + 570.82);
  const double num1 = s.coefficient("a2") + s.coefficient("b2") * f;
  const double pole1 = s.coefficient("a3") + s.coefficient("b3") * f;
  const double den1 = l * l - pole1 * pole1;
  const double num2 = s.coefficient("a4") + s.coefficient("b4") * f;
  const double a5 = s.coefficient("a5");
  const double den2 = l * l - a5 * a5;
  const double a6 = s.coefficient("a6");
  return {s.coefficient("a1") + s.coefficient("b1") * f + num1 / den1 + num2 / den2 - a6 * l * l,
          -2.0 * l * num1 / (den1 * den1) - 2.0 * l * num2 / (den2 * den2) - 2.0 * a6 * l};
}

IndexSquared evaluate(const SellmeierSet& s, double l, double t) {
  switch (s.form) {
    case SellmeierForm::edwards_lawrence:
      return edwards_lawrence(s, l, t);
    case SellmeierForm::jundt:
      return jundt(s, l, t);
    case SellmeierForm::constant: {
      const double n = s.coefficient("n");
      return {n * n, 0.0};
    }
  }
  throw ArgumentError("unknown Sellmeier form");
}

void check_range(const OpticalField& field, const SellmeierSet& set) {
  if (!(field.wavelength > 0.0)) {
    throw RangeError("wavelength must be positive (got " + std::to_string(field.wavelength) + " m)");
  }
  const double l = field.wavelength / kUm;
  std::ostringstream msg;
  msg.precision(10);
  if (l < set.valid_wavelength_um[0]) {
    msg << set.name << ": wavelength " << l << " um below minimum " << set.valid_wavelength_um[0] << " um";
    throw RangeError(msg.str());
  }
  if (l > set.valid_wavelength_um[1]) {
    msg << set.name << ": wavelength " << l << " um above maximum " << set.valid_wavelength_um[1] << " um";
    throw RangeError(msg.str());
  }
  if (field.temperature < set.valid_temperature_C[0]) {
    msg << set.name << ": temperature " << field.temperature << " C below minimum "
        << set.valid_temperature_C[0] << " C";
    throw RangeError(msg.str());
  }
  if (field.temperature > set.valid_temperature_C[1]) {
    msg << set.name << ": temperature " << field.temperature << " C above maximum "
        << set.valid_temperature_C[1] << " C";
    throw RangeError(msg.str());
  }
}

SellmeierForm form_from_string(const std::string& s) {
  if (s == "edwards_lawrence") return SellmeierForm::edwards_lawrence;
  if (s == "jundt") return SellmeierForm::jundt;
  if (s == "constant") return SellmeierForm::constant;
  throw ConfigError("unknown Sellmeier form '" + s + "'");
}

std::string form_to_string(SellmeierForm f) {
  switch (f) {
    case SellmeierForm::edwards_lawrence:
      return "edwards_lawrence";
    case SellmeierForm::jundt:
      return "jundt";
    case SellmeierForm::constant:
      return "constant";
  }
  return "unknown";
}

}  // namespace

Polarization orthogonal(Polarization pol) {
  return pol == Polarization::H ? Polarization::V : Polarization::H;
}

std::string to_string(Axis axis) { return axis == Axis::ordinary ? "ordinary" : "extraordinary"; }

std::string to_string(Polarization pol) { return pol == Polarization::H ? "H" : "V"; }

Axis axis_from_string(const std::string& s) {
  if (s == "ordinary" || s == "o") return Axis::ordinary;
  if (s == "extraordinary" || s == "e") return Axis::extraordinary;
  throw ConfigError("unknown crystal axis '" + s + "'");
}

Polarization polarization_from_string(const std::string& s) {
  if (s == "H" || s == "h") return Polarization::H;
  if (s == "V" || s == "v") return Polarization::V;
  throw ConfigError("unknown polarization '" + s + "' (expected H or V)");
}

double SellmeierSet::coefficient(const std::string& key) const {
  const auto it = coefficients.find(key);
  if (it == coefficients.end()) {
    throw ConfigError("Sellmeier set '" + name + "' lacks coefficient '" + key + "'");
  }
  return it->second;
}

SellmeierSet SellmeierSet::constant_index(double n, Axis axis, std::array<double, 2> wavelength_um,
                                          std::array<double, 2> temperature_C) {
  SellmeierSet s;
  s.name = "constant";
  s.axis = axis;
  s.form = SellmeierForm::constant;
  s.coefficients["n"] = n;
  s.valid_wavelength_um = wavelength_um;
  s.valid_temperature_C = temperature_C;
  s.source = "dispersionless test material";
  return s;
}

SellmeierSet sellmeier_from_json(const nlohmann::json& doc) {
  try {
    SellmeierSet s;
    s.name = doc.at("name").get<std::string>();
    s.axis = axis_from_string(doc.at("axis").get<std::string>());
    s.form = form_from_string(doc.at("form").get<std::string>());
    for (const auto& [key, value] : doc.at("coefficients").items()) {
      s.coefficients[key] = value.get<double>();
    }
    s.valid_wavelength_um = doc.at("valid_wavelength_um").get<std::array<double, 2>>();
    s.valid_temperature_C = doc.at("valid_temperature_C").get<std::array<double, 2>>();
    s.source = doc.value("source", "");
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed Sellmeier document: ") + e.what());
  }
}

nlohmann::json to_json(const SellmeierSet& set) {
  return {{"name", set.name},
          {"axis", to_string(set.axis)},
          {"form", form_to_string(set.form)},
          {"coefficients", set.coefficients},
          {"valid_wavelength_um", set.valid_wavelength_um},
          {"valid_temperature_C", set.valid_temperature_C},
          {"source", set.source}};
}

SellmeierSet load_sellmeier(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open Sellmeier file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return sellmeier_from_json(doc);
}

double refractive_index(const OpticalField& field, const SellmeierSet& set) {
  check_range(field, set);
  return std::sqrt(evaluate(set, field.wavelength / kUm, field.temperature).value);
}

double wavenumber(const OpticalField& field, const SellmeierSet& set) {
  return kTwoPi * refractive_index(field, set) / field.wavelength;
}

double group_index(const OpticalField& field, const SellmeierSet& set, double step) {
  if (!(step > 0.0)) throw ArgumentError("group index step must be positive");
  check_range(field, set);
  OpticalField lo = field;
  OpticalField hi = field;
  lo.wavelength -= step;
  hi.wavelength += step;
  try {
    check_range(lo, set);
    check_range(hi, set);
  } catch (const RangeError& e) {
    throw RangeError(std::string("difference stencil leaves valid range: ") + e.what());
  }
  const double dn = (refractive_index(hi, set) - refractive_index(lo, set)) / (2.0 * step);
  return refractive_index(field, set) - field.wavelength * dn;
}

double group_index_analytic(const OpticalField& field, const SellmeierSet& set) {
  check_range(field, set);
  const double l = field.wavelength / kUm;
  const auto sq = evaluate(set, l, field.temperature);
  const double n = std::sqrt(sq.value);
  // dn/dl = d(n^2)/dl / (2n); the um scale cancels in l * dn/dl.
  return n - l * sq.derivative / (2.0 * n);
}

const SellmeierSet& Material::set_for(Polarization pol) const {
  const auto axis = axis_map.find(pol);
  if (axis == axis_map.end()) {
    throw ConfigError("no crystal axis mapped for polarization " + to_string(pol));
  }
  const auto set = sellmeier.find(axis->second);
  if (set == sellmeier.end()) {
    throw ConfigError("no Sellmeier set for the " + to_string(axis->second) + " axis");
  }
  return set->second;
}

}  // namespace fbent
