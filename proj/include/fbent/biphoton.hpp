#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include <json.hpp>

#include "fbent/qpm.hpp"

namespace fbent {

using cdouble = std::complex<double>;

/// Reduced two-bin description of the emitted pair. Bin 1 is the H-photon
/// frequency of the first segment's process; p is the weight of that process.
struct BiphotonState {
  double p = 0.5;
  double V = 1.0;
  double phi = 0.0;          // rad
  double delta_omega = 0.0;  // rad/s, omega_1 - omega_2 magnitude
  double tau_c = std::numeric_limits<double>::infinity();  // s
  std::array<double, 2> bin_centers{0.0, 0.0};             // rad/s

  /// Throws PhysicalityError when p, V, delta_omega or tau_c are out of bounds.
  void validate() const;
};

nlohmann::json to_json(const BiphotonState& state);

/// Grid layout: one uniform window of `points_per_window` samples spanning
/// +-`lobes` sinc half-widths around every segment's peak (overlapping
/// windows are merged). The sinc tails carry O(1/lobes) of the weight, so V
/// converges slowly with `lobes`.
struct GridSpec {
  int points_per_window = 16384;
  double lobes = 400.0;
};

class ResolutionError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

class ReductionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Monochromatic-pump joint spectral amplitude as a function of the H-photon
/// frequency; the V photon sits at omega_p - omega.
struct SpectralAmplitude {
  double pump_omega = 0.0;
  std::vector<double> omega;   // rad/s, ascending
  std::vector<double> weight;  // quadrature weight (rad/s) per point
  std::vector<cdouble> total;  // normalized: sum |total|^2 weight = 1
  std::vector<std::vector<cdouble>> per_segment;  // same normalization factor as total
  std::vector<double> peak_omega;                 // per segment
  double normalization = 1.0;  // factor applied to raw segment amplitudes
  GridSpec meta;

  double intensity(std::size_t i) const { return std::norm(total[i]); }
};

/// amplitude_scale L sinc(dk L / 2) exp(-i [dk L / 2 + sum_{m > j} dk_m L_m]) for
/// an H photon at omega_s and a V photon at omega_p - omega_s.
cdouble segment_amplitude(const CrystalSpec& spec, std::size_t segment_index, double omega_s);

/// Sum of all segment amplitudes at omega_s (unnormalized).
cdouble total_amplitude(const CrystalSpec& spec, double omega_s);

/// d(delta k)/d(omega_s) at fixed pump for segment `j`'s H/V assignment, s/m.
double mismatch_slope(const CrystalSpec& spec, double omega_s);

SpectralAmplitude joint_spectrum(const CrystalSpec& spec, const GridSpec& grid = {});

/// Intensity FWHM of segment `j` on the grid, expressed in wavelength (m).
double segment_bandwidth(const SpectralAmplitude& sa, std::size_t segment_index);

struct BinReduction {
  BiphotonState state;
  double overlap_delay = 0.0;               // delay maximizing the exchange overlap, s
  std::array<double, 2> bin_weight{0, 0};   // integrated intensity per bin
  std::array<double, 2> bandwidth{0, 0};    // per-segment FWHM in wavelength, m
};

BinReduction reduce_to_bins_detailed(const SpectralAmplitude& sa, const CrystalSpec& spec);
BiphotonState reduce_to_bins(const SpectralAmplitude& sa, const CrystalSpec& spec);

/// Coincidence probability of the polarization Michelson HOM evaluated
/// directly from the spectrum (no envelope model).
double homi_from_spectrum(const SpectralAmplitude& sa, const CrystalSpec& spec, double tau);

/// Copy of `spec` with amplitude scales chosen so every segment emits the same
/// integrated intensity (largest scale = 1).
CrystalSpec balance_amplitudes(const CrystalSpec& spec);

/// CSV `omega_s_rad_s,lambda_s_nm,re_total,im_total,intensity` plus
/// `re_seg<j>,im_seg<j>` columns when `per_segment` is set.
void write_spectrum_csv(std::ostream& out, const SpectralAmplitude& sa, bool per_segment = false);

/// Ideal n-bin state: sum_j a_j |omega_j>|omega_{n-j+1}>.
struct NModeState {
  std::vector<double> centers;  // rad/s
  struct Term {
    std::size_t a;  // index into centers for photon A
    std::size_t b;
    cdouble amplitude;
  };
  std::vector<Term> terms;

  std::size_t modes() const { return centers.size(); }
  /// Only for n = 2: p = |a_1|^2, V = 2|a_1 a_2|, phi = arg(a_2 / a_1).
  BiphotonState to_biphoton(double tau_c = std::numeric_limits<double>::infinity()) const;
};

/// Empty `amplitudes` means equal weights 1/sqrt(n); otherwise normalized.
NModeState n_mode_state(const std::vector<double>& centers, const std::vector<cdouble>& amplitudes = {});

}  // namespace fbent
