#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "fbent/constants.hpp"
#include "fbent/entanglement.hpp"
#include "fbent/hom.hpp"

namespace fbent {

/// Measured-state parameters feeding the frequency-to-polarization chain.
struct ChainParams {
  double p = 0.516;
  double V = 0.934;
  double delta_omega = kTwoPi * 11.5e12;
  double tau_c = 2.40e-12;
  double phi0 = 0.0;
  /// Expected counts per unit-overlap projector for simulated tomography.
  double tomography_intensity = 4000.0;
};

struct DelayRow {
  double tau = 0.0;            // s
  double rate = 0.0;           // I(tau)/N
  double phi = 0.0;            // delta_omega * tau + phi0, wrapped to [0, 2 pi)
  double fidelity = 0.0;       // model state vs psi_p(phi)
  double concurrence = 0.0;
  std::optional<double> fidelity_mle;
  std::optional<double> concurrence_mle;
};

/// Visibility left at delay tau: V max(0, 1 - |tau|/tau_c).
double effective_visibility(const ChainParams& params, double tau);

/// Polarization state after the mode transfer at delay tau.
DensityMatrix polarization_state(const ChainParams& params, double tau);

/// One column of the tomography table. With a seed, the polarization state is
/// also sampled through simulated tomography and reconstructed by MLE.
DelayRow delay_row(const ChainParams& params, double tau, std::optional<std::uint64_t> rng_seed = std::nullopt);

std::vector<DelayRow> delay_table(const ChainParams& params, const std::vector<double>& delays,
                              std::optional<std::uint64_t> rng_seed = std::nullopt);

double wrap_phase(double phi);

nlohmann::json to_json(const ChainParams& params);
nlohmann::json to_json(const DelayRow& row);

}  // namespace fbent
