#include "fbent/hom.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "fbent/constants.hpp"

namespace fbent {

namespace {

using Vec5 = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

// The fitter works in picoseconds so every parameter is O(1)..O(1e3).
Vec5 to_internal(const HomParams& p) {
  Vec5 v;
  v << p.N, p.V, p.delta_omega * kPs, p.tau_c / kPs, p.tau_offset / kPs;
  return v;
}

HomParams from_internal(const Vec5& v) {
  return {v(0), v(1), v(2) / kPs, v(3) * kPs, v(4) * kPs};
}

// Model value and gradient with respect to (N, V, dw, tau_c, tau_offset), tau in ps.
double model(const Vec5& th, double tau, Vec5* grad) {
  const double n = th(0), v = th(1), dw = th(2), tc = th(3), t0 = th(4);
  const double t = tau - t0;
  const double at = std::abs(t);
  if (at > tc) {
    if (grad) *grad << 0.5, 0.0, 0.0, 0.0, 0.0;
    return 0.5 * n;
  }
  const double env = 1.0 - at / tc;
  const double c = std::cos(dw * t);
  const double s = std::sin(dw * t);
  if (grad) {
    const double sgn = t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0);
    const double dI_dt = 0.5 * n * v * (dw * s * env + c * sgn / tc);
    (*grad) << 0.5 * (1.0 - v * c * env), -0.5 * n * c * env, 0.5 * n * v * s * t * env,
        -0.5 * n * v * c * at / (tc * tc), -dI_dt;
  }
  return 0.5 * n * (1.0 - v * c * env);
}

double chi_squared(const Vec5& th, const std::vector<double>& tau, const HomScan& scan) {
  double chi2 = 0.0;
  for (std::size_t k = 0; k < tau.size(); ++k) {
    const double r = (scan.counts[k] - model(th, tau[k], nullptr)) / scan.sigma[k];
    chi2 += r * r;
  }
  return chi2;
}

double periodogram(const std::vector<double>& t, const std::vector<double>& y, double omega) {
  double re = 0.0, im = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    re += y[k] * std::cos(omega * t[k]);
    im += y[k] * std::sin(omega * t[k]);
  }
  return re * re + im * im;
}

// Beat-frequency search band in rad/ps.
std::array<double, 2> search_band(const std::vector<double>& t, const FitOptions& options) {
  if (options.omega_band) return {(*options.omega_band)[0] * kPs, (*options.omega_band)[1] * kPs};
  double min_spacing = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < t.size(); ++k) min_spacing = std::min(min_spacing, t[k] - t[k - 1]);
  const double span = t.back() - t.front();
  return {2.0 * kTwoPi / span, kPi / min_spacing};
}

struct LmResult {
  Vec5 th;
  double chi2 = 0.0;
  Mat5 normal;
  int iterations = 0;
  bool converged = false;
};

LmResult levenberg_marquardt(const Vec5& start, const std::vector<double>& tau, const HomScan& scan,
                             const FitOptions& options) {
  const std::size_t n = tau.size();
  auto normal_equations = [&](const Vec5& p, Mat5& a, Vec5& g) {
    a.setZero();
    g.setZero();
    Vec5 grad;
    for (std::size_t k = 0; k < n; ++k) {
      const double r = (scan.counts[k] - model(p, tau[k], &grad)) / scan.sigma[k];
      const Vec5 j = grad / scan.sigma[k];
      a.noalias() += j * j.transpose();
      g += j * r;
    }
  };

  LmResult res;
  res.th = start;
  res.chi2 = chi_squared(start, tau, scan);
  double lambda = 1e-3;
  Vec5 g;
  normal_equations(res.th, res.normal, g);
  // Beyond this the envelope is flat across the scan and tau_c is pinned.
  const double tau_c_max = 1e4 * (tau.back() - tau.front());
  int it = 0;
  int stalled = 0;
  for (; it < options.max_iterations; ++it) {
    Mat5 damped = res.normal;
    const double floor = 1e-12 * std::max(res.normal.diagonal().maxCoeff(), 1e-300);
    for (int i = 0; i < 5; ++i) damped(i, i) += lambda * std::max(res.normal(i, i), floor);
    Vec5 step = damped.ldlt().solve(g);
    step(3) = std::min(res.th(3) + step(3), tau_c_max) - res.th(3);
    const Vec5 trial = res.th + step;
    // V and the origin are compared on absolute scales (unit visibility, one
    // radian of fringe phase), the rest relative to themselves.
    Vec5 scale = res.th.cwiseAbs();
    scale(1) = 1.0;
    scale(4) = 1.0 / res.th(2);
    const double rel = (step.cwiseAbs().array() / scale.array()).maxCoeff();

    const bool valid = trial(3) > 0.0 && std::isfinite(trial.sum());
    const double trial_chi2 = valid ? chi_squared(trial, tau, scan) : std::numeric_limits<double>::infinity();
    if (trial_chi2 <= res.chi2) {
      // A flat scan lets tau_c grow without bound; stop once chi^2 stalls.
      stalled = res.chi2 - trial_chi2 <= 1e-12 * std::max(res.chi2, 1.0) ? stalled + 1 : 0;
      res.th = trial;
      res.chi2 = trial_chi2;
      lambda = std::max(lambda / 3.0, 1e-12);
      normal_equations(res.th, res.normal, g);
      if (rel < options.step_tolerance || stalled >= 3) {
        res.converged = true;
        break;
      }
    } else {
      lambda *= 4.0;
      if (rel < options.step_tolerance || lambda > 1e16) {
        res.converged = true;
        break;
      }
    }
  }
  res.iterations = it + 1;
  return res;
}

}  // namespace

double homi_rate(const HomParams& p, double tau) {
  const double t = tau - p.tau_offset;
  if (std::abs(t) > p.tau_c) return 0.5 * p.N;
  return 0.5 * p.N * (1.0 - p.V * std::cos(p.delta_omega * t) * (1.0 - std::abs(t / p.tau_c)));
}

double homi_from_state(const BiphotonState& state, double tau) {
  const double env = std::max(0.0, 1.0 - std::abs(tau) / state.tau_c);
  return 0.5 * (1.0 - state.V * std::cos(state.delta_omega * tau + state.phi) * env);
}

void HomScan::validate() const {
  if (counts.size() != delays.size() || sigma.size() != delays.size()) {
    throw ArgumentError("scan arrays differ in length");
  }
  for (std::size_t k = 0; k < delays.size(); ++k) {
    if (k > 0 && !(delays[k] > delays[k - 1])) throw ArgumentError("scan delays must be strictly increasing");
    if (!(counts[k] >= 0.0)) throw ArgumentError("scan counts must be non-negative");
    if (counts[k] > 0.0 && !(sigma[k] > 0.0)) throw ArgumentError("uncertainty must be positive where counts > 0");
  }
}

std::vector<double> poisson_sigma(const std::vector<double>& counts) {
  std::vector<double> s(counts.size());
  std::transform(counts.begin(), counts.end(), s.begin(), [](double c) { return std::sqrt(std::max(c, 1.0)); });
  return s;
}

std::vector<double> uniform_delays(double from, double to, int points) {
  if (points < 2 || !(to > from)) throw ArgumentError("delay grid needs >= 2 points and to > from");
  std::vector<double> d(points);
  for (int i = 0; i < points; ++i) d[i] = from + (to - from) * i / (points - 1);
  return d;
}

HomScan synthesize_scan(const HomParams& params, const std::vector<double>& delays, double pairs_per_point,
                        std::uint64_t rng_seed) {
  if (!(pairs_per_point > 0.0)) throw ArgumentError("pairs_per_point must be positive");
  HomParams p = params;
  p.N = pairs_per_point;
  std::mt19937_64 gen(rng_seed);
  HomScan scan;
  scan.delays = delays;
  for (double tau : delays) {
    std::poisson_distribution<long long> dist(homi_rate(p, tau));
    scan.counts.push_back(static_cast<double>(dist(gen)));
  }
  scan.sigma = poisson_sigma(scan.counts);
  scan.acquisition = {pairs_per_point, rng_seed};
  scan.validate();
  return scan;
}

HomScan model_scan(const HomParams& params, const std::vector<double>& delays) {
  HomScan scan;
  scan.delays = delays;
  for (double tau : delays) scan.counts.push_back(homi_rate(params, tau));
  scan.sigma = poisson_sigma(scan.counts);
  scan.acquisition.pairs_per_point = params.N;
  scan.validate();
  return scan;
}

HomParams initial_estimate(const HomScan& scan, const FitOptions& options) {
  scan.validate();
  const std::size_t n = scan.size();
  if (n < 8) throw ArgumentError("scan too short to fit (need >= 8 points)");
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k) t[k] = scan.delays[k] / kPs;

  HomParams est;
  const std::size_t kmin = std::min_element(scan.counts.begin(), scan.counts.end()) - scan.counts.begin();
  const double t0 = t[kmin];

  // Level far from the dip.
  double far = 0.0;
  for (double x : t) far = std::max(far, std::abs(x - t0));
  double outer_sum = 0.0;
  int outer_n = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(t[k] - t0) >= 0.85 * far) {
      outer_sum += scan.counts[k];
      ++outer_n;
    }
  }
  const double level = outer_sum / outer_n;

  // Beat frequency from the periodogram of the fringe signal.
  std::vector<double> y(n);
  for (std::size_t k = 0; k < n; ++k) y[k] = scan.counts[k] - level;
  const double span = t.back() - t.front();
  const auto [w_lo, w_hi] = search_band(t, options);
  const double dw_step = kTwoPi / span / 8.0;
  double best_w = w_lo;
  double best_p = -1.0;
  for (double w = w_lo; w <= w_hi; w += dw_step) {
    const double pw = periodogram(t, y, w);
    if (pw > best_p) {
      best_p = pw;
      best_w = w;
    }
  }
  double a = std::max(w_lo, best_w - dw_step);
  double b = std::min(w_hi, best_w + dw_step);
  for (int i = 0; i < 60; ++i) {
    const double m1 = a + (b - a) / 3.0;
    const double m2 = b - (b - a) / 3.0;
    if (periodogram(t, y, m1) < periodogram(t, y, m2)) {
      a = m1;
    } else {
      b = m2;
    }
  }
  const double dw = 0.5 * (a + b);

  // The dip sits where the fringe phase is pi: sum y e^{-i w t} ~ -e^{-i w t0}.
  // Of those solutions take the one nearest the centroid of the fringe energy;
  // on a sparse scan the lowest sample can sit several fringes away.
  double re = 0.0, im = 0.0, e_sum = 0.0, e_t = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    re += y[k] * std::cos(dw * t[k]);
    im -= y[k] * std::sin(dw * t[k]);
    e_sum += y[k] * y[k];
    e_t += y[k] * y[k] * t[k];
  }
  const double centre = e_sum > 0.0 ? e_t / e_sum : t0;
  const double beat = kTwoPi / dw;
  double t_phase = (kPi - std::atan2(im, re)) / dw;
  t_phase += beat * std::round((centre - t_phase) / beat);

  // Fringe excursion within one beat period of the minimum.
  const double period = kTwoPi / dw;
  double hi = -1.0, lo = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < n; ++k) {
    if (std::abs(t[k] - t0) <= period) {
      hi = std::max(hi, scan.counts[k]);
      lo = std::min(lo, scan.counts[k]);
    }
  }
  double peak_dev = 0.0;
  for (double d : y) peak_dev = std::max(peak_dev, std::abs(d));
  const double v_excursion = hi + lo > 0.0 ? (hi - lo) / (hi + lo) : 0.0;
  const double v = std::clamp(std::max(v_excursion, level > 0.0 ? peak_dev / level : 0.0), 0.0, 1.0);

  // Envelope: per-period maxima of |counts - level| versus |t - t0|, linear fit.
  std::vector<double> xs, ys;
  const int bins = static_cast<int>(far / period) + 1;
  std::vector<double> peak(bins, -1.0), where(bins, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double d = std::abs(t[k] - t0);
    const int b_idx = std::min(bins - 1, static_cast<int>(d / period));
    const double dev = std::abs(y[k]);
    if (dev > peak[b_idx]) {
      peak[b_idx] = dev;
      where[b_idx] = d;
    }
  }
  const double noise = std::sqrt(std::max(level, 1.0));
  for (int i = 0; i < bins; ++i) {
    if (peak[i] > 3.0 * noise) {
      xs.push_back(where[i]);
      ys.push_back(peak[i]);
    }
  }
  double tau_c = 0.5 * span;
  if (xs.size() >= 2) {
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    if (slope < 0.0) {
      const double intercept = my - slope * mx;
      tau_c = std::clamp(-intercept / slope, 2.0 * period, 2.0 * span);
    }
  }

  est.N = 2.0 * level;
  est.V = v;
  est.delta_omega = dw / kPs;
  est.tau_c = tau_c * kPs;
  est.tau_offset = t_phase * kPs;
  return est;
}

HomFit fit_homi(const HomScan& scan, const FitOptions& options) {
  scan.validate();
  const std::size_t n = scan.size();
  std::vector<double> tau(n);
  for (std::size_t k = 0; k < n; ++k) tau[k] = scan.delays[k] / kPs;

  // Neighbouring fringes are local minima one beat period apart, so without
  // an explicit start the origin is tried on a few adjacent fringes.
  std::vector<Vec5> starts;
  if (options.init) {
    starts.push_back(to_internal(*options.init));
  } else {
    const Vec5 est = to_internal(initial_estimate(scan, options));
    const double beat = kTwoPi / est(2);
    for (int k = -2; k <= 2; ++k) {
      Vec5 s0 = est;
      s0(4) += k * beat;
      starts.push_back(s0);
    }
  }
  std::optional<LmResult> best;
  std::optional<LmResult> best_failed;
  for (const auto& s0 : starts) {
    auto r = levenberg_marquardt(s0, tau, scan, options);
    auto& slot = r.converged ? best : best_failed;
    if (!slot || r.chi2 < slot->chi2) slot = r;
  }
  if (!best) {
    throw FitError("HOM fit did not converge in " + std::to_string(options.max_iterations) + " iterations",
                   from_internal(best_failed->th), std::sqrt(best_failed->chi2));
  }
  const Vec5 th = best->th;
  const double chi2 = best->chi2;
  const Mat5& a = best->normal;
  HomFit fit;
  fit.converged = true;
  fit.iterations = best->iterations;

  // Covariance (J^T W J)^-1 via eigen-decomposition so rank loss shows up as
  // unbounded variance instead of garbage.
  Eigen::SelfAdjointEigenSolver<Mat5> eig(a);
  const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
  Mat5 inv = Mat5::Zero();
  std::array<bool, 5> unbounded{};
  for (int k = 0; k < 5; ++k) {
    const double ev = eig.eigenvalues()(k);
    if (ev > 1e-12 * top) {
      inv += eig.eigenvectors().col(k) * eig.eigenvectors().col(k).transpose() / ev;
    } else {
      for (int i = 0; i < 5; ++i) unbounded[i] = unbounded[i] || std::abs(eig.eigenvectors()(i, k)) > 1e-6;
    }
  }
  // Back to SI: scale factors per parameter.
  const std::array<double, 5> unit{1.0, 1.0, 1.0 / kPs, kPs, kPs};
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) fit.covariance[i][j] = inv(i, j) * unit[i] * unit[j];
  }
  for (int i = 0; i < 5; ++i) {
    fit.standard_error[i] = unbounded[i] ? std::numeric_limits<double>::infinity()
                                         : std::sqrt(std::max(fit.covariance[i][i], 0.0));
  }

  fit.params = from_internal(th);
  fit.residual_norm = std::sqrt(chi2);
  if (fit.params.V < 0.0 || fit.params.V > 1.0) {
    fit.params.V = std::clamp(fit.params.V, 0.0, 1.0);
    fit.visibility_clipped = true;
  }
  // With V = 0 the fit still picks the strongest noise fringe in the band, so
  // V/se(V) is compared against the 1% false-alarm level of the largest of M
  // independent Rayleigh variates, M = band * span / 2 pi.
  const auto band = search_band(tau, options);
  const double trials = std::max(1.0, (band[1] - band[0]) * (tau.back() - tau.front()) / kTwoPi);
  const double threshold = std::sqrt(2.0 * std::log(trials / 0.01));
  fit.delta_omega_identifiable = std::isfinite(fit.standard_error[2]) &&
                                 std::isfinite(fit.standard_error[1]) &&
                                 fit.params.V > threshold * fit.standard_error[1];
  return fit;
}

void write_scan_csv(std::ostream& out, const HomScan& scan) {
  out << "tau_fs,counts,sigma\n";
  const auto old = out.precision(12);
  for (std::size_t k = 0; k < scan.size(); ++k) {
    out << scan.delays[k] / kFs << ',' << scan.counts[k] << ',' << scan.sigma[k] << '\n';
  }
  out.precision(old);
}

HomScan read_scan_csv(std::istream& in) {
  HomScan scan;
  std::string line;
  bool header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "tau_fs,counts,sigma") throw ConfigError("scan CSV header must be 'tau_fs,counts,sigma'");
      header = true;
      continue;
    }
    std::istringstream row(line);
    std::string a, b, c;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c, ',')) {
      throw ConfigError("scan CSV line " + std::to_string(lineno) + " needs three fields");
    }
    try {
      scan.delays.push_back(std::stod(a) * kFs);
      scan.counts.push_back(std::stod(b));
      scan.sigma.push_back(std::stod(c));
    } catch (const std::exception&) {
      throw ConfigError("scan CSV line " + std::to_string(lineno) + " is not numeric");
    }
  }
  if (!header) throw ConfigError("scan CSV is empty");
  scan.validate();
  return scan;
}

nlohmann::json to_json(const HomParams& p) {
  return {{"N", p.N},
          {"V", p.V},
          {"delta_omega_rad_s", p.delta_omega},
          {"delta_omega_over_2pi_THz", p.delta_omega / kTwoPi / kTHz},
          {"tau_c_ps", p.tau_c / kPs},
          {"tau_offset_fs", p.tau_offset / kFs}};
}

nlohmann::json to_json(const HomFit& fit) {
  auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  const auto& se = fit.standard_error;
  nlohmann::json cov = nlohmann::json::array();
  for (const auto& row : fit.covariance) {
    nlohmann::json r = nlohmann::json::array();
    for (double x : row) r.push_back(num(x));
    cov.push_back(r);
  }
  return {{"parameters", to_json(fit.params)},
          {"standard_errors",
           {{"N", num(se[0])},
            {"V", num(se[1])},
            {"delta_omega_rad_s", num(se[2])},
            {"delta_omega_over_2pi_THz", num(se[2] / kTwoPi / kTHz)},
            {"tau_c_ps", num(se[3] / kPs)},
            {"tau_offset_fs", num(se[4] / kFs)}}},
          {"covariance_order", {"N", "V", "delta_omega_rad_s", "tau_c_s", "tau_offset_s"}},
          {"covariance", cov},
          {"residual_norm", fit.residual_norm},
          {"iterations", fit.iterations},
          {"converged", fit.converged},
          {"visibility_clipped", fit.visibility_clipped},
          {"delta_omega_identifiable", fit.delta_omega_identifiable}};
}

}  // namespace fbent
