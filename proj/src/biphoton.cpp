#include "fbent/biphoton.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include "fbent/constants.hpp"

namespace fbent {

namespace {

constexpr double kMinPointsPerLobe = 20.0;

double sinc(double x) { return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }

double wrap_phase(double phi) {
  phi = std::fmod(phi, kTwoPi);
  return phi < 0.0 ? phi + kTwoPi : phi;
}

// Mismatch of segment m's grating for an H photon at omega_s.
double segment_mismatch(const CrystalSpec& spec, std::size_t m, double omega_s) {
  const double omega_p = angular_frequency(spec.pump_wavelength);
  return delta_k(spec.material, spec.pump(), spec.field(wavelength_of(omega_s), Polarization::H),
                 spec.field(wavelength_of(omega_p - omega_s), Polarization::V),
                 Grating::period(spec.segments[m].period));
}

// Sum with a compensation term so the result is independent of grid size quirks.
template <typename T>
T kahan_sum(const std::vector<T>& values) {
  T sum{};
  T carry{};
  for (const auto& v : values) {
    const T y = v - carry;
    const T t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return sum;
}

double golden_max(auto&& f, double lo, double hi, int iterations = 80) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo;
  double b = hi;
  double c = b - g * (b - a);
  double d = a + g * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < iterations; ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

void BiphotonState::validate() const {
  std::ostringstream msg;
  if (!(p >= 0.0 && p <= 1.0)) {
    msg << "p = " << p << " outside [0, 1]";
  } else if (!(V >= 0.0) || V > std::min(1.0, 2.0 * std::sqrt(p * (1.0 - p))) + 1e-12) {
    msg << "V = " << V << " violates 0 <= V <= min(1, 2 sqrt(p(1-p)))";
  } else if (!(delta_omega > 0.0)) {
    msg << "delta_omega must be positive";
  } else if (!(tau_c > 0.0)) {
    msg << "tau_c must be positive";
  } else {
    return;
  }
  throw PhysicalityError(msg.str());
}

nlohmann::json to_json(const BiphotonState& s) {
  nlohmann::json tau_c = std::isfinite(s.tau_c) ? nlohmann::json(s.tau_c / kPs) : nlohmann::json(nullptr);
  return {{"p", s.p},
          {"V", s.V},
          {"phi_rad", s.phi},
          {"delta_omega_rad_s", s.delta_omega},
          {"delta_omega_over_2pi_THz", s.delta_omega / kTwoPi / kTHz},
          {"tau_c_ps", tau_c},
          {"bin_centers_rad_s", s.bin_centers},
          {"bin_centers_nm", {wavelength_of(s.bin_centers[0]) / kNm, wavelength_of(s.bin_centers[1]) / kNm}}};
}

double mismatch_slope(const CrystalSpec& spec, double omega_s) {
  const double omega_p = angular_frequency(spec.pump_wavelength);
  const double ng_h = spec.material.group_index(spec.field(wavelength_of(omega_s), Polarization::H));
  const double ng_v = spec.material.group_index(spec.field(wavelength_of(omega_p - omega_s), Polarization::V));
  return (ng_v - ng_h) / kSpeedOfLight;
}

cdouble segment_amplitude(const CrystalSpec& spec, std::size_t segment_index, double omega_s) {
  const auto& seg = spec.segment(segment_index);
  const double own = segment_mismatch(spec, segment_index, omega_s) * seg.length;
  double phase = 0.5 * own;
  for (std::size_t m = segment_index + 1; m < spec.segments.size(); ++m) {
    phase += segment_mismatch(spec, m, omega_s) * spec.segments[m].length;
  }
  return seg.amplitude_scale * seg.length * sinc(0.5 * own) * std::polar(1.0, -phase);
}

cdouble total_amplitude(const CrystalSpec& spec, double omega_s) {
  cdouble sum{};
  for (std::size_t j = 0; j < spec.segments.size(); ++j) sum += segment_amplitude(spec, j, omega_s);
  return sum;
}

SpectralAmplitude joint_spectrum(const CrystalSpec& spec, const GridSpec& grid) {
  if (grid.points_per_window < 2 || !(grid.lobes > 0.0)) throw ArgumentError("invalid grid specification");
  SpectralAmplitude sa;
  sa.meta = grid;
  sa.pump_omega = angular_frequency(spec.pump_wavelength);

  struct Window {
    double lo, hi;
    int points;
  };
  std::vector<Window> windows;
  double min_lobe = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < spec.segments.size(); ++j) {
    const auto pm = solve_signal_idler(spec, j, Polarization::H);
    const double peak = angular_frequency(pm.signal_wavelength);
    sa.peak_omega.push_back(peak);
    // First sinc zero at |dk| L / 2 = pi.
    const double half_lobe = kTwoPi / (std::abs(mismatch_slope(spec, peak)) * spec.segments[j].length);
    min_lobe = std::min(min_lobe, half_lobe);
    windows.push_back({peak - grid.lobes * half_lobe, peak + grid.lobes * half_lobe, grid.points_per_window});
  }

  std::sort(windows.begin(), windows.end(), [](const Window& a, const Window& b) { return a.lo < b.lo; });
  std::vector<Window> merged;
  for (const auto& w : windows) {
    if (!merged.empty() && w.lo <= merged.back().hi) {
      merged.back().hi = std::max(merged.back().hi, w.hi);
      merged.back().points += w.points;
    } else {
      merged.push_back(w);
    }
  }

  for (const auto& w : merged) {
    const double step = (w.hi - w.lo) / (w.points - 1);
    if (2.0 * min_lobe / step < kMinPointsPerLobe) {
      std::ostringstream msg;
      msg << "grid under-samples the sinc main lobe (" << 2.0 * min_lobe / step << " points, need "
          << kMinPointsPerLobe << ")";
      throw ResolutionError(msg.str());
    }
    for (int i = 0; i < w.points; ++i) {
      sa.omega.push_back(w.lo + step * i);
      sa.weight.push_back(step);
    }
  }

  const std::size_t n = sa.omega.size();
  sa.per_segment.assign(spec.segments.size(), std::vector<cdouble>(n));
  sa.total.assign(n, cdouble{});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < spec.segments.size(); ++j) {
      sa.per_segment[j][i] = segment_amplitude(spec, j, sa.omega[i]);
      sa.total[i] += sa.per_segment[j][i];
    }
  }

  std::vector<double> terms(n);
  for (std::size_t i = 0; i < n; ++i) terms[i] = std::norm(sa.total[i]) * sa.weight[i];
  const double norm = kahan_sum(terms);
  if (!(norm > 0.0)) throw ReductionError("spectrum carries no intensity");
  sa.normalization = 1.0 / std::sqrt(norm);
  for (auto& a : sa.total) a *= sa.normalization;
  for (auto& seg : sa.per_segment) {
    for (auto& a : seg) a *= sa.normalization;
  }
  return sa;
}

double segment_bandwidth(const SpectralAmplitude& sa, std::size_t j) {
  if (j >= sa.per_segment.size()) throw ArgumentError("segment index out of range");
  const auto& amp = sa.per_segment[j];
  std::size_t peak = 0;
  for (std::size_t i = 1; i < amp.size(); ++i) {
    if (std::norm(amp[i]) > std::norm(amp[peak])) peak = i;
  }
  const double half = 0.5 * std::norm(amp[peak]);
  auto crossing = [&](int dir) {
    std::size_t i = peak;
    while (true) {
      const std::size_t next = i + dir;
      if (next >= amp.size() || std::abs(sa.omega[next] - sa.omega[i]) > 1.5 * sa.weight[i]) {
        throw ResolutionError("half-maximum of segment " + std::to_string(j) + " lies outside the grid");
      }
      if (std::norm(amp[next]) <= half) {
        const double f = (std::norm(amp[i]) - half) / (std::norm(amp[i]) - std::norm(amp[next]));
        return sa.omega[i] + f * (sa.omega[next] - sa.omega[i]);
      }
      i = next;
    }
  };
  const double lo = crossing(-1);
  const double hi = crossing(+1);
  return wavelength_of(lo) - wavelength_of(hi);
}

BinReduction reduce_to_bins_detailed(const SpectralAmplitude& sa, const CrystalSpec& spec) {
  if (spec.segments.size() != 2 || sa.peak_omega.size() != 2) {
    throw ReductionError("two-bin reduction needs exactly two poling segments (got " +
                         std::to_string(spec.segments.size()) + "); V is undefined");
  }
  BinReduction out;
  const double w1 = sa.peak_omega[0];
  const double w2 = sa.peak_omega[1];
  out.bandwidth = {segment_bandwidth(sa, 0), segment_bandwidth(sa, 1)};
  const double sep = std::abs(wavelength_of(w1) - wavelength_of(w2));
  if (!(sep > 5.0 * std::max(out.bandwidth[0], out.bandwidth[1]))) {
    std::ostringstream msg;
    msg << "peaks not resolved: separation " << sep / kNm << " nm vs bandwidth "
        << std::max(out.bandwidth[0], out.bandwidth[1]) / kNm << " nm";
    throw ReductionError(msg.str());
  }

  // Each segment feeds one bin, so bin weights and the exchange overlap are
  // taken segment by segment; a split at the midpoint would hand sinc tails
  // to the wrong bin.
  std::vector<double> seg0_terms(sa.omega.size());
  std::vector<double> seg1_terms(sa.omega.size());
  std::vector<cdouble> products(sa.omega.size());
  std::vector<double> carrier(sa.omega.size());
  for (std::size_t i = 0; i < sa.omega.size(); ++i) {
    seg0_terms[i] = std::norm(sa.per_segment[0][i]) * sa.weight[i];
    seg1_terms[i] = std::norm(sa.per_segment[1][i]) * sa.weight[i];
    const cdouble partner = segment_amplitude(spec, 1, sa.pump_omega - sa.omega[i]) * sa.normalization;
    products[i] = sa.per_segment[0][i] * std::conj(partner) * sa.weight[i];
    carrier[i] = 2.0 * sa.omega[i] - sa.pump_omega;
  }
  const double n1 = kahan_sum(seg0_terms);
  const double n2 = kahan_sum(seg1_terms);
  out.bin_weight = {n1, n2};

  auto overlap = [&](double tau) {
    cdouble sum{};
    for (std::size_t k = 0; k < products.size(); ++k) sum += products[k] * std::polar(1.0, -carrier[k] * tau);
    return sum;
  };

  double mismatch_time = 0.0;
  double tau_c_sum = 0.0;
  for (std::size_t j = 0; j < 2; ++j) {
    const double w = std::abs(mismatch_slope(spec, sa.peak_omega[j])) * spec.segments[j].length;
    mismatch_time += w;
    tau_c_sum += 0.5 * w;
  }
  const double span = 2.0 * mismatch_time;
  const int scan = 401;
  double best_tau = -span;
  double best = -1.0;
  for (int i = 0; i < scan; ++i) {
    const double tau = -span + 2.0 * span * i / (scan - 1);
    const double mag = std::abs(overlap(tau));
    if (mag > best) {
      best = mag;
      best_tau = tau;
    }
  }
  const double step = 2.0 * span / (scan - 1);
  out.overlap_delay = golden_max([&](double t) { return std::abs(overlap(t)); }, best_tau - step, best_tau + step);
  const double o = std::abs(overlap(out.overlap_delay));

  auto& s = out.state;
  s.p = n1 / (n1 + n2);
  s.V = std::min(2.0 * o / (n1 + n2), 2.0 * std::sqrt(s.p * (1.0 - s.p)));
  s.phi = wrap_phase(std::arg(segment_amplitude(spec, 1, w2)) - std::arg(segment_amplitude(spec, 0, w1)));
  s.delta_omega = std::abs(w1 - w2);
  s.tau_c = tau_c_sum / 2.0;
  s.bin_centers = {w1, w2};
  s.validate();
  return out;
}

BiphotonState reduce_to_bins(const SpectralAmplitude& sa, const CrystalSpec& spec) {
  return reduce_to_bins_detailed(sa, spec).state;
}

double homi_from_spectrum(const SpectralAmplitude& sa, const CrystalSpec& spec, double tau) {
  // Both exchange orderings contribute complex-conjugate halves of the overlap.
  cdouble sum{};
  double norm = 0.0;
  for (std::size_t i = 0; i < sa.omega.size(); ++i) {
    const cdouble partner = total_amplitude(spec, sa.pump_omega - sa.omega[i]) * sa.normalization;
    sum += sa.total[i] * std::conj(partner) * sa.weight[i] *
           std::polar(1.0, -(2.0 * sa.omega[i] - sa.pump_omega) * tau);
    norm += std::norm(sa.total[i]) * sa.weight[i];
  }
  return 0.5 * (1.0 - sum.real() / norm);
}

CrystalSpec balance_amplitudes(const CrystalSpec& spec) {
  CrystalSpec out = spec;
  std::vector<double> scale(spec.segments.size());
  for (std::size_t j = 0; j < spec.segments.size(); ++j) {
    const auto pm = solve_signal_idler(spec, j, Polarization::H);
    const double slope = std::abs(mismatch_slope(spec, angular_frequency(pm.signal_wavelength)));
    // Integrated |s L sinc(slope L x / 2)|^2 dx = 2 pi s^2 L / slope.
    scale[j] = std::sqrt(slope / spec.segments[j].length);
  }
  const double top = *std::max_element(scale.begin(), scale.end());
  for (std::size_t j = 0; j < scale.size(); ++j) out.segments[j].amplitude_scale = scale[j] / top;
  return out;
}

void write_spectrum_csv(std::ostream& out, const SpectralAmplitude& sa, bool per_segment) {
  out << "omega_s_rad_s,lambda_s_nm,re_total,im_total,intensity";
  if (per_segment) {
    for (std::size_t j = 0; j < sa.per_segment.size(); ++j) out << ",re_seg" << j << ",im_seg" << j;
  }
  out << '\n';
  const auto old = out.precision(12);
  for (std::size_t i = 0; i < sa.omega.size(); ++i) {
    out << sa.omega[i] << ',' << wavelength_of(sa.omega[i]) / kNm << ',' << sa.total[i].real() << ','
        << sa.total[i].imag() << ',' << sa.intensity(i);
    if (per_segment) {
      for (const auto& seg : sa.per_segment) out << ',' << seg[i].real() << ',' << seg[i].imag();
    }
    out << '\n';
  }
  out.precision(old);
}

BiphotonState NModeState::to_biphoton(double tau_c) const {
  if (modes() != 2) throw ArgumentError("only a two-mode state reduces to a BiphotonState");
  const cdouble a1 = terms[0].amplitude;
  const cdouble a2 = terms[1].amplitude;
  BiphotonState s;
  s.p = std::norm(a1);
  s.V = 2.0 * std::abs(a1) * std::abs(a2);
  s.phi = wrap_phase(std::arg(a2) - std::arg(a1));
  s.delta_omega = std::abs(centers[0] - centers[1]);
  s.tau_c = tau_c;
  s.bin_centers = {centers[0], centers[1]};
  s.validate();
  return s;
}

NModeState n_mode_state(const std::vector<double>& centers, const std::vector<cdouble>& amplitudes) {
  const std::size_t n = centers.size();
  if (n < 2) throw ArgumentError("an n-mode frequency-bin state needs n >= 2");
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (centers[i] == centers[i + 1]) throw ArgumentError("duplicate bin centers");
    if (centers[i] > centers[i + 1]) throw ArgumentError("bin centers must be sorted");
  }
  std::vector<cdouble> amps = amplitudes;
  if (amps.empty()) {
    amps.assign(n, cdouble(1.0 / std::sqrt(static_cast<double>(n)), 0.0));
  } else {
    if (amps.size() != n) throw ArgumentError("need one amplitude per bin");
    double norm = 0.0;
    for (const auto& a : amps) norm += std::norm(a);
    if (!(norm > 0.0)) throw ArgumentError("amplitudes are all zero");
    for (auto& a : amps) a /= std::sqrt(norm);
  }
  NModeState state;
  state.centers = centers;
  for (std::size_t j = 0; j < n; ++j) state.terms.push_back({j, n - 1 - j, amps[j]});
  return state;
}

}  // namespace fbent
