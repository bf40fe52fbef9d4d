#include <doctest.h>

#include <cmath>

#include "fbent/dispersion.hpp"
#include "support.hpp"

using namespace fbent;

namespace {

// Hand transcription of the congruent LiNbO3 temperature Sellmeier, kept
// separate from the data files on purpose.
double el_index(double lambda_um, double t_c, bool extraordinary) {
  const double a1 = extraordinary ? 4.5820 : 4.9048;
  const double a2 = extraordinary ? 0.099169 : 0.11775;
  const double a3 = extraordinary ? 0.21090 : 0.21802;
  const double a4 = extraordinary ? 0.021940 : 0.027153;
  const double b1 = extraordinary ? 5.2716e-8 : 2.2314e-8;
  const double b2 = extraordinary ? -4.9143e-8 : -2.9671e-8;
  const double b3 = extraordinary ? 2.2971e-7 : 2.1429e-8;
  const double f = (t_c - 24.5) * (t_c + 24.5 + 546.32);
  const double l2 = lambda_um * lambda_um;
  return std::sqrt(a1 + (a2 + b1 * f) / (l2 - std::pow(a3 + b2 * f, 2)) + b3 * f - a4 * l2);
}

SellmeierSet el(bool extraordinary) {
  return load_sellmeier(testing::data_path(extraordinary ? "sellmeier/ln_congruent_edwards_lawrence_e.json"
                                                         : "sellmeier/ln_congruent_edwards_lawrence_o.json"));
}

}  // namespace

TEST_CASE("shipped Sellmeier files match a hand evaluation") {
  for (bool e : {true, false}) {
    const auto set = el(e);
    for (double lum : {0.775, 1.064, 1.506, 1.55, 1.594, 2.5}) {
      for (double t : {25.0, 80.0, 120.0, 180.0}) {
        const OpticalField f{lum * 1e-6, Polarization::H, t};
        CHECK(refractive_index(f, set) == testing::approx(el_index(lum, t, e)).epsilon(1e-14));
      }
    }
  }
  // Textbook magnitudes near room temperature.
  CHECK(el_index(1.55, 24.5, true) == testing::approx(2.138).epsilon(1e-3));
  CHECK(el_index(1.55, 24.5, false) == testing::approx(2.211).epsilon(1e-3));
}

TEST_CASE("Jundt and Edwards-Lawrence extraordinary indices agree closely") {
  const auto jundt = load_sellmeier(testing::data_path("sellmeier/ln_congruent_jundt_e.json"));
  for (double lum : {0.8, 1.3, 1.55}) {
    const OpticalField f{lum * 1e-6, Polarization::H, 100.0};
    CHECK(std::abs(refractive_index(f, jundt) - refractive_index(f, el(true))) < 3e-3);
  }
}

TEST_CASE("wavenumber is 2 pi n / lambda") {
  const auto set = el(true);
  const OpticalField f{1.5e-6, Polarization::H, 120.0};
  CHECK(wavenumber(f, set) == testing::approx(2.0 * M_PI * refractive_index(f, set) / 1.5e-6).epsilon(1e-15));
}

TEST_CASE("finite-difference group index converges quadratically to the analytic one") {
  for (bool e : {true, false}) {
    const auto set = el(e);
    for (double lum : {1.2, 1.5, 1.6, 2.0}) {
      const OpticalField f{lum * 1e-6, Polarization::H, 115.0};
      const double exact = group_index_analytic(f, set);
      CHECK(group_index(f, set) == testing::approx(exact).epsilon(1e-8));
      const double e1 = std::abs(group_index(f, set, 20e-9) - exact);
      const double e2 = std::abs(group_index(f, set, 10e-9) - exact);
      CHECK(e1 / e2 == testing::approx(4.0).epsilon(0.05));
    }
  }
}

TEST_CASE("group index exceeds phase index in the normal-dispersion region") {
  const auto set = el(true);
  for (double lum : {0.8, 1.5, 2.0}) {
    const OpticalField f{lum * 1e-6, Polarization::H, 120.0};
    CHECK(group_index(f, set) > refractive_index(f, set));
  }
}

TEST_CASE("constant sets are dispersionless") {
  const auto set = SellmeierSet::constant_index(2.0);
  const OpticalField f{1.3e-6, Polarization::H, 30.0};
  CHECK(refractive_index(f, set) == 2.0);
  CHECK(group_index(f, set) == testing::approx(2.0).epsilon(1e-12));
  CHECK(group_index_analytic(f, set) == 2.0);
}

TEST_CASE("out-of-range inputs raise RangeError") {
  const auto set = el(true);
  CHECK_THROWS_AS(refractive_index({5e-6, Polarization::H, 100.0}, set), RangeError);
  CHECK_THROWS_AS(refractive_index({1.5e-6, Polarization::H, 400.0}, set), RangeError);
  CHECK_THROWS_AS(refractive_index({-1e-6, Polarization::H, 100.0}, set), RangeError);
  // The stencil must stay inside the range too.
  CHECK_THROWS_AS(group_index({3.4e-6, Polarization::H, 100.0}, set), RangeError);
  CHECK_THROWS_AS(group_index({1.5e-6, Polarization::H, 100.0}, set, 0.0), ArgumentError);
}

TEST_CASE("Sellmeier JSON round trip") {
  const auto set = el(false);
  const auto back = sellmeier_from_json(to_json(set));
  CHECK(back.name == set.name);
  CHECK(back.axis == set.axis);
  CHECK(back.form == set.form);
  CHECK(back.coefficients == set.coefficients);
  CHECK(back.valid_wavelength_um == set.valid_wavelength_um);
  const OpticalField f{1.55e-6, Polarization::V, 90.0};
  CHECK(refractive_index(f, back) == refractive_index(f, set));
  CHECK_THROWS_AS(sellmeier_from_json(nlohmann::json::parse(R"({"name": "x"})")), ConfigError);
  CHECK_THROWS_AS(load_sellmeier("/nonexistent.json"), ConfigError);
}

TEST_CASE("material routes polarizations to axes") {
  Material m;
  m.sellmeier[Axis::extraordinary] = el(true);
  m.sellmeier[Axis::ordinary] = el(false);
  const OpticalField h{1.55e-6, Polarization::H, 120.0};
  const OpticalField v{1.55e-6, Polarization::V, 120.0};
  CHECK(m.index(h) == testing::approx(el_index(1.55, 120.0, true)));
  CHECK(m.index(v) == testing::approx(el_index(1.55, 120.0, false)));
  m.axis_map[Polarization::H] = Axis::ordinary;
  CHECK(m.index(h) == m.index(v));
  m.sellmeier.erase(Axis::ordinary);
  CHECK_THROWS_AS(m.index(v), ConfigError);
}

TEST_CASE("polarization and axis names") {
  CHECK(polarization_from_string("H") == Polarization::H);
  CHECK(to_string(Polarization::V) == "V");
  CHECK(orthogonal(Polarization::H) == Polarization::V);
  CHECK(axis_from_string("ordinary") == Axis::ordinary);
  CHECK_THROWS_AS(polarization_from_string("X"), ConfigError);
}
