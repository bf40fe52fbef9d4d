#include "fbent/pipeline.hpp"

#include <cmath>

#include "fbent/constants.hpp"

namespace fbent {

double wrap_phase(double phi) {
  double w = std::fmod(phi, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  return w;
}

double effective_visibility(const ChainParams& params, double tau) {
  return params.V * std::max(0.0, 1.0 - std::abs(tau) / params.tau_c);
}

DensityMatrix polarization_state(const ChainParams& params, double tau) {
  const auto rho = rho_freq(params.p, effective_visibility(params, tau), params.phi0);
  return mode_convert(rho, tau, params.delta_omega);
}

DelayRow delay_row(const ChainParams& params, double tau, std::optional<std::uint64_t> rng_seed) {
  HomParams hp;
  hp.N = 1.0;
  hp.V = params.V;
  hp.delta_omega = params.delta_omega;
  hp.tau_c = params.tau_c;

  DelayRow row;
  row.tau = tau;
  row.rate = homi_rate(hp, tau);
  row.phi = wrap_phase(params.phi0 + params.delta_omega * tau);
  const auto target = ideal_state(row.phi, BasisDomain::polarization);
  const auto rho = polarization_state(params, tau);
  row.fidelity = fidelity(rho, target);
  row.concurrence = concurrence(rho);
  if (rng_seed) {
    const auto data = simulate_counts(rho, canonical_settings(), params.tomography_intensity, rng_seed);
    const auto rec = mle_tomography(data);
    row.fidelity_mle = fidelity(rec, target);
    row.concurrence_mle = concurrence(rec);
  }
  return row;
}

std::vector<DelayRow> delay_table(const ChainParams& params, const std::vector<double>& delays,
                              std::optional<std::uint64_t> rng_seed) {
  std::vector<DelayRow> rows;
  for (std::size_t i = 0; i < delays.size(); ++i) {
    std::optional<std::uint64_t> seed;
    if (rng_seed) seed = *rng_seed + i;
    rows.push_back(delay_row(params, delays[i], seed));
  }
  return rows;
}

nlohmann::json to_json(const ChainParams& params) {
  return {{"p", params.p},
          {"V", params.V},
          {"delta_omega_thz", params.delta_omega / kTwoPi / 1e12},
          {"tau_c_ps", params.tau_c / kPs},
          {"phi0_rad", params.phi0},
          {"tomography_intensity", params.tomography_intensity}};
}

nlohmann::json to_json(const DelayRow& row) {
  nlohmann::json j = {{"tau_fs", row.tau / kFs},
                      {"rate", row.rate},
                      {"phi_rad", row.phi},
                      {"phi_over_pi", row.phi / kPi},
                      {"fidelity", row.fidelity},
                      {"concurrence", row.concurrence}};
  if (row.fidelity_mle) j["fidelity_mle"] = *row.fidelity_mle;
  if (row.concurrence_mle) j["concurrence_mle"] = *row.concurrence_mle;
  return j;
}

}  // namespace fbent
