#include <doctest.h>

#include <cmath>

#include "fbent/constants.hpp"
#include "fbent/pipeline.hpp"
#include "support.hpp"

using namespace fbent;

TEST_CASE("model chain rows") {
  const ChainParams cp;
  const auto rows = delay_table(cp, {0.0, 47e-15, -20e-15});
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].rate == testing::approx(0.033));
  CHECK(rows[0].phi == 0.0);
  CHECK(rows[0].fidelity == testing::approx(0.967));
  CHECK(rows[0].concurrence == testing::approx(0.934));
  CHECK(rows[2].phi / kPi == testing::approx(1.54).epsilon(1e-3));
  // dw tau at 47 fs is 1.081 pi, so the fringe sits just past its maximum.
  CHECK(rows[1].phi / kPi == testing::approx(1.081).epsilon(1e-3));
  CHECK(rows[1].rate == testing::approx(0.943).epsilon(1e-3));
  for (const auto& r : rows) CHECK_FALSE(r.fidelity_mle.has_value());
}

TEST_CASE("symmetric state at the dip, anti-symmetric at the bright fringe") {
  ChainParams cp;
  cp.delta_omega = 2.0 * kPi * 11.5e12;
  const double bright = kPi / cp.delta_omega;
  const auto dip = delay_row(cp, 0.0);
  const auto peak = delay_row(cp, bright);
  CHECK(dip.rate < 0.05);
  CHECK(peak.rate > 0.9);
  const auto rho_peak = polarization_state(cp, bright);
  CHECK(fidelity(rho_peak, ideal_state(kPi, BasisDomain::polarization)) >
        fidelity(rho_peak, ideal_state(0.0, BasisDomain::polarization)));
}

TEST_CASE("visibility shrinks along the envelope") {
  const ChainParams cp;
  CHECK(effective_visibility(cp, 0.0) == cp.V);
  CHECK(effective_visibility(cp, 1.2e-12) == testing::approx(cp.V / 2));
  CHECK(effective_visibility(cp, 3e-12) == 0.0);
  CHECK(wrap_phase(-0.5) == testing::approx(2.0 * kPi - 0.5));
}

TEST_CASE("seeded rows carry reproducible tomography estimates") {
  const ChainParams cp;
  const auto a = delay_row(cp, -20e-15, 4);
  const auto b = delay_row(cp, -20e-15, 4);
  REQUIRE(a.fidelity_mle.has_value());
  CHECK(*a.fidelity_mle == *b.fidelity_mle);
  CHECK(std::abs(*a.fidelity_mle - a.fidelity) < 0.1);
  const auto j = to_json(a);
  CHECK(j.contains("concurrence_mle"));
}
