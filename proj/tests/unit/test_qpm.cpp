#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fbent/constants.hpp"
#include "fbent/qpm.hpp"
#include "support.hpp"

using namespace fbent;

TEST_CASE("degenerate toy crystal: period 2 lambda_p / (n_o - n_e) gives lambda_s = 2 lambda_p") {
  const double ne = 2.10;
  const double no = 2.20;
  const double period = 2.0 * 775e-9 / (no - ne);
  const auto spec = testing::toy_crystal(ne, no, period);
  const auto pt = solve_signal_idler(spec, 0);
  CHECK(pt.signal_wavelength == testing::approx(1550e-9).epsilon(1e-9));
  CHECK(pt.idler_wavelength == testing::approx(1550e-9).epsilon(1e-9));
  CHECK(std::abs(pt.residual_mismatch) < 1e-3);
  CHECK(solve_period(pt, spec) == testing::approx(period).epsilon(1e-9));
}

TEST_CASE("toy crystal: closed-form signal for arbitrary period") {
  // dk = (n_o - n_e) w_s / c - 2 pi / L  =>  lambda_s = L (n_o - n_e).
  const double ne = 2.10;
  const double no = 2.20;
  const auto spec = testing::toy_crystal(ne, no, 14.0e-6);
  const auto pt = solve_signal_idler(spec, 0);
  CHECK(pt.signal_wavelength == testing::approx(14.0e-6 * (no - ne)).epsilon(1e-9));
}

TEST_CASE("delta_k sign convention") {
  const auto spec = testing::toy_crystal(2.1, 2.2, 15.5e-6);
  const double l = 1550e-9;
  const double expected = 2 * kPi * 2.2 / 775e-9 - 2 * kPi * 2.1 / l - 2 * kPi * 2.2 / l;
  const double dk0 = delta_k(spec.material, spec.pump(), spec.field(l, Polarization::H), spec.field(l, Polarization::V),
                             Grating::unpoled());
  CHECK(dk0 == testing::approx(expected).epsilon(1e-12));
  const double dk = delta_k(spec.material, spec.pump(), spec.field(l, Polarization::H), spec.field(l, Polarization::V),
                            Grating::period(15.5e-6));
  CHECK(dk == testing::approx(expected - 2 * kPi / 15.5e-6).epsilon(1e-9));
  CHECK_THROWS_AS(Grating::period(0.0), ArgumentError);
}

TEST_CASE("idler from energy conservation") {
  CHECK(idler_wavelength(775e-9, 1550e-9) == testing::approx(1550e-9));
  CHECK(1.0 / idler_wavelength(775e-9, 1506e-9) == testing::approx(1.0 / 775e-9 - 1.0 / 1506e-9));
  CHECK_THROWS_AS(idler_wavelength(775e-9, 700e-9), ArgumentError);
}

TEST_CASE("default crystal at 120 C lands near 1506/1594 nm") {
  const auto spec = testing::default_crystal();
  const auto p0 = solve_signal_idler(spec, 0, Polarization::H);
  const auto p1 = solve_signal_idler(spec, 1, Polarization::H);
  CHECK(std::abs(p0.signal_wavelength - 1506e-9) < 15e-9);
  CHECK(std::abs(p0.idler_wavelength - 1594e-9) < 15e-9);
  CHECK(std::abs(p1.signal_wavelength - 1594e-9) < 15e-9);
  CHECK(std::abs(p1.idler_wavelength - 1506e-9) < 15e-9);
  for (const auto& p : {p0, p1}) {
    CHECK(1.0 / p.pump_wavelength == testing::approx(1.0 / p.signal_wavelength + 1.0 / p.idler_wavelength).epsilon(1e-13));
    CHECK(std::abs(p.residual_mismatch) < 1e-3);
  }
}

TEST_CASE("solve/period round trip is exact for random periods") {
  auto spec = testing::default_crystal();
  testing::Gen gen(11);
  for (int i = 0; i < 40; ++i) {
    spec.segments[0].period = gen.uniform(9.0e-6, 9.7e-6);
    spec.temperature = gen.uniform(60.0, 180.0);
    const auto pt = solve_signal_idler(spec, 0);
    CHECK(testing::rel_err(solve_period(pt, spec), spec.segments[0].period) < 1e-6);
  }
}

TEST_CASE("signal polarization V swaps the roles") {
  const auto spec = testing::default_crystal();
  const auto h = solve_signal_idler(spec, 0, Polarization::H);
  const auto v = solve_signal_idler(spec, 0, Polarization::V);
  CHECK(v.signal_pol == Polarization::V);
  CHECK(v.signal_wavelength == testing::approx(h.idler_wavelength).epsilon(1e-9));
}

TEST_CASE("operating temperature makes the segments emit the same pair") {
  const auto spec = testing::default_crystal();
  const double t = find_operating_temperature(spec);
  CHECK(t > 100.0);
  CHECK(t < 130.0);
  const auto op = at_operating_point(spec);
  CHECK(op.temperature == testing::approx(t));
  const auto p0 = solve_signal_idler(op, 0);
  const auto p1 = solve_signal_idler(op, 1);
  CHECK(std::abs(p0.signal_wavelength - p1.idler_wavelength) < 1e-12);
  CHECK(std::abs(p0.idler_wavelength - p1.signal_wavelength) < 1e-12);
}

TEST_CASE("failures are typed") {
  auto spec = testing::default_crystal();
  spec.segments[0].period = 3e-6;
  CHECK_THROWS_AS(solve_signal_idler(spec, 0), NoPhaseMatchError);
  CHECK_THROWS_AS(solve_signal_idler(spec, 7), ArgumentError);
  PhaseMatchPoint bad{775e-9, 1506e-9, 1594e-9, Polarization::H, Polarization::V, 0.0};
  CHECK_THROWS_AS(solve_period(bad, spec), ArgumentError);
  auto cold = testing::default_crystal();
  cold.temperature = -50.0;
  CHECK_THROWS_AS(cold.validate(), ConfigError);
}

TEST_CASE("NoPhaseMatchError carries the mismatch range") {
  auto spec = testing::default_crystal();
  spec.segments[0].period = 3e-6;
  try {
    solve_signal_idler(spec, 0);
    FAIL("expected NoPhaseMatchError");
  } catch (const NoPhaseMatchError& e) {
    CHECK(e.min_delta_k() <= e.max_delta_k());
    CHECK(e.min_delta_k() * e.max_delta_k() > 0.0);
  }
}

TEST_CASE("tuning curves") {
  const auto spec = testing::default_crystal();
  SUBCASE("reversed sweep gives the reversed curve") {
    const auto up = tuning_curve(spec, 0, {SweepVariable::temperature, 100.0, 140.0, 5});
    const auto down = tuning_curve(spec, 0, {SweepVariable::temperature, 140.0, 100.0, 5});
    REQUIRE(up.size() == 5);
    for (std::size_t i = 0; i < up.size(); ++i) {
      CHECK(up[i].value == testing::approx(down[4 - i].value));
      CHECK(up[i].point->signal_wavelength == testing::approx(down[4 - i].point->signal_wavelength).epsilon(1e-12));
    }
  }
  SUBCASE("single step is the spec's own point") {
    auto at = spec;
    at.temperature = 110.0;
    const auto one = tuning_curve(spec, 0, {SweepVariable::temperature, 110.0, 110.0, 1});
    REQUIRE(one.size() == 1);
    CHECK(one[0].point->signal_wavelength == testing::approx(solve_signal_idler(at, 0).signal_wavelength));
  }
  SUBCASE("pump sweep moves the signal") {
    const auto curve = tuning_curve(spec, 0, {SweepVariable::pump_wavelength, 774e-9, 776e-9, 3});
    CHECK(curve[0].point->signal_wavelength != testing::approx(curve[2].point->signal_wavelength));
  }
  SUBCASE("invalid sweeps") {
    CHECK_THROWS_AS(tuning_curve(spec, 0, {SweepVariable::temperature, 100.0, 140.0, 0}), ArgumentError);
    CHECK_THROWS_AS(tuning_curve(spec, 0, {SweepVariable::temperature, 100.0, 100.0, 4}), ArgumentError);
  }
  SUBCASE("gaps are kept and written as nan") {
    auto odd = spec;
    odd.segments[0].period = 8.2e-6;
    const auto curve = tuning_curve(odd, 0, {SweepVariable::temperature, 20.0, 240.0, 12});
    bool gap = false;
    for (const auto& s : curve) gap = gap || !s.point;
    CHECK(gap);
    std::ostringstream out;
    write_tuning_csv(out, curve, SweepVariable::temperature);
    CHECK(out.str().rfind("variable,lambda_s_nm,lambda_i_nm,residual_rad_per_m\n", 0) == 0);
    CHECK(out.str().find("nan") != std::string::npos);
  }
}

TEST_CASE("crystal JSON round trip and path resolution") {
  const auto spec = testing::default_crystal();
  const auto back = crystal_from_json(to_json(spec));
  REQUIRE(back.segments.size() == 2);
  CHECK(back.segments[1].period == testing::approx(spec.segments[1].period));
  CHECK(back.total_length() == testing::approx(40e-3));
  CHECK(back.pump_polarization == Polarization::V);
  CHECK(solve_signal_idler(back, 1).signal_wavelength == solve_signal_idler(spec, 1).signal_wavelength);
  CHECK_THROWS_AS(load_crystal("/nonexistent/crystal.json"), ConfigError);
  auto doc = to_json(spec);
  doc["segments"][0]["length_mm"] = -1.0;
  CHECK_THROWS_AS(crystal_from_json(doc), ConfigError);
  doc = to_json(spec);
  doc.erase("pump_nm");
  CHECK_THROWS_AS(crystal_from_json(doc), ConfigError);
}
