#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fbent/biphoton.hpp"
#include "fbent/constants.hpp"
#include "support.hpp"

using namespace fbent;

namespace {

const CrystalSpec& operating_crystal() {
  static const CrystalSpec spec = at_operating_point(testing::default_crystal());
  return spec;
}

const SpectralAmplitude& default_spectrum() {
  static const SpectralAmplitude sa = joint_spectrum(operating_crystal());
  return sa;
}

// Group-index mismatch slope of segment j, computed independently of the
// library's mismatch_slope.
double slope_oracle(const CrystalSpec& spec, std::size_t j) {
  const auto pt = solve_signal_idler(spec, j);
  const double ng_h = group_index_analytic(spec.field(pt.signal_wavelength, Polarization::H),
                                           spec.material.set_for(Polarization::H));
  const double ng_v = group_index_analytic(spec.field(pt.idler_wavelength, Polarization::V),
                                           spec.material.set_for(Polarization::V));
  return std::abs(ng_v - ng_h) / kSpeedOfLight;
}

}  // namespace

TEST_CASE("segment amplitude peaks at L and vanishes at the first sinc zero") {
  const double ne = 2.10;
  const double no = 2.20;
  const double period = 2.0 * 775e-9 / (no - ne);
  const double length = 10e-3;
  const auto spec = testing::toy_crystal(ne, no, period, length);
  const double w0 = angular_frequency(1550e-9);
  CHECK(std::abs(segment_amplitude(spec, 0, w0)) == testing::approx(length).epsilon(1e-9));
  // dk = (n_o - n_e)(w - w0)/c, first zero at |dk| L / 2 = pi.
  const double zero = w0 + 2.0 * kPi * kSpeedOfLight / ((no - ne) * length);
  CHECK(std::abs(segment_amplitude(spec, 0, zero)) < 1e-9 * length);
  // d(kp - ks - ki)/d(ws) = -n_e/c + n_o/c.
  CHECK(mismatch_slope(spec, w0) == testing::approx((no - ne) / kSpeedOfLight).epsilon(1e-6));
}

TEST_CASE("relative phase at the bin centres follows the grating arithmetic") {
  const auto& spec = operating_crystal();
  const auto state = reduce_to_bins(default_spectrum(), spec);
  const double l2 = spec.segments[1].length;
  const double expected =
      std::fmod(2.0 * kPi * (1.0 / spec.segments[0].period - 1.0 / spec.segments[1].period) * l2, 2.0 * kPi);
  CHECK(state.phi == testing::approx(expected).epsilon(1e-6));
  // 2 pi (1/9.25 - 1/9.50) 20000 = 2 pi * 56.899
  CHECK(state.phi == testing::approx(2.0 * kPi * 0.8990).epsilon(1e-3));
}

TEST_CASE("two-bin reduction of the default crystal") {
  const auto& spec = operating_crystal();
  const auto red = reduce_to_bins_detailed(default_spectrum(), spec);
  const auto& s = red.state;
  CHECK(s.delta_omega / (2.0 * kPi * 1e12) > 10.5);
  CHECK(s.delta_omega / (2.0 * kPi * 1e12) < 12.0);

  // Rectangle oracle: segment j has a temporal rectangle of width a_j L and
  // height 1/a_j, so p = a_1/(a_0 + a_1) and V = 2 min(a)/(a_0 + a_1).
  const double a0 = slope_oracle(spec, 0);
  const double a1 = slope_oracle(spec, 1);
  CHECK(s.p == testing::approx(a1 / (a0 + a1)).epsilon(2e-3));
  CHECK(s.V == testing::approx(2.0 * std::min(a0, a1) / (a0 + a1)).epsilon(5e-3));
  CHECK(s.V < 1.0);
  CHECK(s.V <= 2.0 * std::sqrt(s.p * (1.0 - s.p)));

  const double tau_c = 0.25 * (a0 + a1) * spec.segments[0].length;
  CHECK(s.tau_c == testing::approx(tau_c).epsilon(1e-3));

  for (std::size_t j = 0; j < 2; ++j) {
    // sinc^2 half maximum at |x| = 1.39156
    const double a = slope_oracle(spec, j);
    const double dw = 4.0 * 1.3915573 / (a * spec.segments[j].length);
    const double lambda = wavelength_of(s.bin_centers[j]);
    const double dl = lambda * lambda * dw / (2.0 * kPi * kSpeedOfLight);
    CHECK(red.bandwidth[j] == testing::approx(dl).epsilon(1e-2));
    CHECK(red.bandwidth[j] > 1.0e-9);
    CHECK(red.bandwidth[j] < 1.8e-9);
  }
}

TEST_CASE("bin-reduced state is stable under grid refinement") {
  const auto& spec = operating_crystal();
  const auto coarse = reduce_to_bins(default_spectrum(), spec);
  GridSpec fine;
  fine.points_per_window *= 2;
  const auto refined = reduce_to_bins(joint_spectrum(spec, fine), spec);
  CHECK(std::abs(refined.p - coarse.p) < 1e-3);
  CHECK(std::abs(refined.V - coarse.V) < 1e-3);
  CHECK(testing::rel_err(refined.delta_omega, coarse.delta_omega) < 1e-3);
  CHECK(testing::rel_err(refined.tau_c, coarse.tau_c) < 1e-3);
  GridSpec wide;
  wide.lobes = wide.lobes * 6 / 5;
  wide.points_per_window = static_cast<int>(wide.points_per_window * 1.2);
  const auto wider = reduce_to_bins(joint_spectrum(spec, wide), spec);
  CHECK(std::abs(wider.V - coarse.V) < 1e-3);
}

TEST_CASE("spectrum normalization and grid checks") {
  const auto& sa = default_spectrum();
  double total = 0.0;
  for (std::size_t i = 0; i < sa.omega.size(); ++i) total += sa.intensity(i) * sa.weight[i];
  CHECK(total == testing::approx(1.0).epsilon(1e-12));
  for (std::size_t i = 1; i < sa.omega.size(); ++i) CHECK(sa.omega[i] > sa.omega[i - 1]);
  CHECK_THROWS_AS(joint_spectrum(operating_crystal(), GridSpec{200, 60.0}), ResolutionError);
  CHECK_THROWS_AS(joint_spectrum(operating_crystal(), GridSpec{1, 6.0}), ArgumentError);
}

TEST_CASE("single-segment crystal has no defined visibility") {
  const auto spec = load_crystal(testing::data_path("crystals/single_segment.json"));
  const auto sa = joint_spectrum(spec, GridSpec{2048, 6.0});
  CHECK(sa.peak_omega.size() == 1);
  CHECK_THROWS_AS(reduce_to_bins(sa, spec), ReductionError);
}

TEST_CASE("HOM evaluated from the spectrum dips to (1 - V)/2 near the overlap delay") {
  const auto& spec = operating_crystal();
  const auto sa = joint_spectrum(spec, GridSpec{4096, 60.0});
  const auto red = reduce_to_bins_detailed(sa, spec);
  double lo = 1.0;
  double hi = 0.0;
  for (int k = -100; k <= 100; ++k) {
    const double r = homi_from_spectrum(sa, spec, red.overlap_delay + k * 1e-15);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  // 1 fs sampling of an 87 fs fringe; the peak lies half a fringe out on the
  // envelope.
  CHECK(std::abs(lo - 0.5 * (1.0 - red.state.V)) < 1e-3);
  CHECK(std::abs(hi - 0.5 * (1.0 + red.state.V)) < 3e-3);
  // Far outside the envelope the two photons do not interfere.
  CHECK(homi_from_spectrum(sa, spec, red.overlap_delay + 20e-12) == testing::approx(0.5).epsilon(2e-3));
}

TEST_CASE("balancing the segment amplitudes equalizes the bins") {
  const auto spec = balance_amplitudes(operating_crystal());
  CHECK(std::max(spec.segments[0].amplitude_scale, spec.segments[1].amplitude_scale) == 1.0);
  const auto s = reduce_to_bins(joint_spectrum(spec), spec);
  CHECK(s.p == testing::approx(0.5).epsilon(2e-3));
}

TEST_CASE("spectrum CSV layout") {
  const auto spec = load_crystal(testing::data_path("crystals/single_segment.json"));
  const auto sa = joint_spectrum(spec, GridSpec{64, 1.0});
  std::ostringstream out;
  write_spectrum_csv(out, sa, true);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  CHECK(header == "omega_s_rad_s,lambda_s_nm,re_total,im_total,intensity,re_seg0,im_seg0");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 64);
}

TEST_CASE("BiphotonState validation") {
  BiphotonState s;
  s.p = 0.5;
  s.V = 0.9;
  s.delta_omega = 1e13;
  CHECK_NOTHROW(s.validate());
  s.p = 0.9;
  CHECK_THROWS_AS(s.validate(), PhysicalityError);  // 2 sqrt(0.09) = 0.6 < 0.9
  s.p = 0.5;
  s.delta_omega = 0.0;
  CHECK_THROWS_AS(s.validate(), PhysicalityError);
  const auto j = to_json(BiphotonState{0.5, 1.0, 0.0, 1e13});
  CHECK(j["tau_c_ps"].is_null());
}

TEST_CASE("n-mode frequency-bin states") {
  SUBCASE("two modes reduce to p = 1/2, V = 1") {
    const auto st = n_mode_state({1.0e15, 1.1e15}, {cdouble(1.0, 0.0), std::polar(1.0, 0.7)});
    const auto b = st.to_biphoton(1e-12);
    CHECK(b.p == testing::approx(0.5));
    CHECK(b.V == testing::approx(1.0));
    CHECK(b.phi == testing::approx(0.7));
    CHECK(b.delta_omega == testing::approx(0.1e15));
  }
  SUBCASE("n modes pair j with n-1-j and are normalized") {
    const auto st = n_mode_state({1.0, 2.0, 3.0, 4.0, 5.0});
    REQUIRE(st.terms.size() == 5);
    double norm = 0.0;
    for (std::size_t j = 0; j < 5; ++j) {
      CHECK(st.terms[j].a == j);
      CHECK(st.terms[j].b == 4 - j);
      norm += std::norm(st.terms[j].amplitude);
    }
    CHECK(norm == testing::approx(1.0));
    CHECK_THROWS_AS(st.to_biphoton(), ArgumentError);
  }
  SUBCASE("invalid inputs") {
    CHECK_THROWS_AS(n_mode_state({1.0}), ArgumentError);
    CHECK_THROWS_AS(n_mode_state({1.0, 1.0}), ArgumentError);
    CHECK_THROWS_AS(n_mode_state({2.0, 1.0}), ArgumentError);
    CHECK_THROWS_AS(n_mode_state({1.0, 2.0}, {cdouble(1.0)}), ArgumentError);
    CHECK_THROWS_AS(n_mode_state({1.0, 2.0}, {cdouble(0.0), cdouble(0.0)}), ArgumentError);
  }
}
