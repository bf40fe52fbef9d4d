#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include <json.hpp>

#include "fbent/dispersion.hpp"
#include "fbent/error.hpp"

namespace fbent {

struct PolingSegment {
  double period = 0.0;  // metres
  double length = 0.0;  // metres
  double amplitude_scale = 1.0;
};

struct CrystalSpec {
  std::vector<PolingSegment> segments;
  double temperature = 20.0;  // degrees Celsius
  double pump_wavelength = 0.0;  // metres
  Polarization pump_polarization = Polarization::V;
  Material material;

  double total_length() const;
  const PolingSegment& segment(std::size_t index) const;
  OpticalField pump() const { return {pump_wavelength, pump_polarization, temperature}; }
  OpticalField field(double wavelength, Polarization pol) const { return {wavelength, pol, temperature}; }

  /// Throws ConfigError when a segment or the operating temperature is invalid.
  void validate() const;
};

CrystalSpec crystal_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
CrystalSpec load_crystal(const std::filesystem::path& path);
/// Fully resolved document (Sellmeier sets inlined) for provenance records.
nlohmann::json to_json(const CrystalSpec& spec);

struct PhaseMatchPoint {
  double pump_wavelength = 0.0;
  double signal_wavelength = 0.0;
  double idler_wavelength = 0.0;
  Polarization signal_pol = Polarization::H;
  Polarization idler_pol = Polarization::V;
  double residual_mismatch = 0.0;  // rad/m
};

nlohmann::json to_json(const PhaseMatchPoint& point);

/// Idler wavelength fixed by energy conservation, 1/l_i = 1/l_p - 1/l_s.
double idler_wavelength(double pump_wavelength, double signal_wavelength);

/// Grating momentum 2 pi / period; `unpoled()` contributes nothing.
class Grating {
 public:
  static Grating unpoled() { return Grating(0.0); }
  static Grating period(double period);
  double momentum() const { return momentum_; }

 private:
  explicit Grating(double momentum) : momentum_(momentum) {}
  double momentum_;
};

/// k_p - k_s - k_i - 2 pi / period, rad/m.
double delta_k(const Material& material, const OpticalField& pump, const OpticalField& signal,
               const OpticalField& idler, Grating grating);

enum class Branch { signal_short, signal_long };

class NoPhaseMatchError : public NumericalError {
 public:
  NoPhaseMatchError(const std::string& what, double min_delta_k, double max_delta_k)
      : NumericalError(what), min_delta_k_(min_delta_k), max_delta_k_(max_delta_k) {}
  double min_delta_k() const { return min_delta_k_; }
  double max_delta_k() const { return max_delta_k_; }

 private:
  double min_delta_k_;
  double max_delta_k_;
};

class AmbiguityError : public NumericalError {
 public:
  AmbiguityError(const std::string& what, std::vector<double> roots)
      : NumericalError(what), roots_(std::move(roots)) {}
  /// Approximate signal wavelengths (metres) of every bracketed root.
  const std::vector<double>& roots() const { return roots_; }

 private:
  std::vector<double> roots_;
};

struct SolveOptions {
  std::array<double, 2> signal_bracket{1200e-9, 1900e-9};
  std::optional<Branch> branch;
  double tolerance = 1e-3;  // rad/m on |delta k|
  int scan_points = 701;
  std::optional<double> temperature;  // overrides spec.temperature
};

PhaseMatchPoint solve_signal_idler(const CrystalSpec& spec, std::size_t segment_index,
                                   Polarization signal_pol = Polarization::H,
                                   const SolveOptions& options = {});

/// Poling period that phase-matches `target` (residual ignored) at the spec's
/// temperature and pump polarization.
double solve_period(const PhaseMatchPoint& target, const CrystalSpec& context);

enum class SweepVariable { temperature, pump_wavelength };

struct Sweep {
  SweepVariable variable = SweepVariable::temperature;
  double from = 0.0;  // degrees Celsius or metres
  double to = 0.0;
  int steps = 0;
};

struct TuningSample {
  double value = 0.0;
  std::optional<PhaseMatchPoint> point;  // empty where phase matching fails
};

std::vector<TuningSample> tuning_curve(const CrystalSpec& spec, std::size_t segment_index, const Sweep& sweep,
                                       Polarization signal_pol = Polarization::H,
                                       const SolveOptions& options = {});

/// CSV with header `variable,lambda_s_nm,lambda_i_nm,residual_rad_per_m`;
/// temperatures in C, pump wavelengths in nm, gaps written as `nan`.
void write_tuning_csv(std::ostream& out, const std::vector<TuningSample>& samples, SweepVariable variable);

/// Temperature at which segment `first` (H signal) and segment `second` emit the
/// same wavelength pair with exchanged polarizations.
double find_operating_temperature(const CrystalSpec& spec, std::size_t first = 0, std::size_t second = 1,
                                  std::array<double, 2> bracket = {60.0, 200.0});

/// Copy of `spec` moved to its operating temperature.
CrystalSpec at_operating_point(const CrystalSpec& spec);

}  // namespace fbent
