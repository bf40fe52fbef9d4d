#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include <json.hpp>

#include "fbent/biphoton.hpp"
#include "fbent/error.hpp"

namespace fbent {

struct HomParams {
  double N = 1.0;            // coincidence rate far outside the envelope, times 2
  double V = 0.0;
  double delta_omega = 0.0;  // rad/s
  double tau_c = 1e-12;      // s
  double tau_offset = 0.0;   // s
};

/// (N/2){1 - V cos(dw t)(1 - |t/tau_c|)} inside the envelope, N/2 outside,
/// with t = tau - tau_offset.
double homi_rate(const HomParams& params, double tau);

/// (1/2){1 - V cos(dw tau + phi) max(0, 1 - |tau|/tau_c)}.
double homi_from_state(const BiphotonState& state, double tau);

struct Acquisition {
  double pairs_per_point = 0.0;
  std::optional<std::uint64_t> rng_seed;
};

struct HomScan {
  std::vector<double> delays;  // s, strictly increasing
  std::vector<double> counts;
  std::vector<double> sigma;
  Acquisition acquisition;

  std::size_t size() const { return delays.size(); }
  void validate() const;
};

/// Poisson sigma = sqrt(max(count, 1)).
std::vector<double> poisson_sigma(const std::vector<double>& counts);

/// Counts ~ Poisson(homi_rate) with N = pairs_per_point.
HomScan synthesize_scan(const HomParams& params, const std::vector<double>& delays, double pairs_per_point,
                        std::uint64_t rng_seed);

/// Noise-free scan (counts equal the model means).
HomScan model_scan(const HomParams& params, const std::vector<double>& delays);

std::vector<double> uniform_delays(double from, double to, int points);

struct HomFit {
  HomParams params;
  std::array<std::array<double, 5>, 5> covariance{};  // order N, V, dw, tau_c, tau_offset
  std::array<double, 5> standard_error{};
  double residual_norm = 0.0;  // sqrt(chi^2)
  int iterations = 0;
  bool converged = false;
  bool visibility_clipped = false;
  bool delta_omega_identifiable = true;
};

class FitError : public NumericalError {
 public:
  FitError(const std::string& what, HomParams last, double residual_norm)
      : NumericalError(what), last_(last), residual_norm_(residual_norm) {}
  const HomParams& last_iterate() const { return last_; }
  double residual_norm() const { return residual_norm_; }

 private:
  HomParams last_;
  double residual_norm_;
};

struct FitOptions {
  std::optional<HomParams> init;
  /// Band (rad/s) searched for the beat frequency; defaults to
  /// [2 pi / span, pi / min spacing].
  std::optional<std::array<double, 2>> omega_band;
  int max_iterations = 200;
  double step_tolerance = 1e-8;
};

/// Initial estimate from the scan alone (out-of-envelope level, periodogram
/// peak, minimum-count delay, fringe excursion, envelope slope).
HomParams initial_estimate(const HomScan& scan, const FitOptions& options = {});

HomFit fit_homi(const HomScan& scan, const FitOptions& options = {});

/// CSV `tau_fs,counts,sigma` (lines starting with '#' are comments).
void write_scan_csv(std::ostream& out, const HomScan& scan);
HomScan read_scan_csv(std::istream& in);

nlohmann::json to_json(const HomParams& params);
nlohmann::json to_json(const HomFit& fit);

}  // namespace fbent
