#include "fbent/entanglement.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "fbent/constants.hpp"

namespace fbent {

namespace {

using cd = std::complex<double>;
constexpr cd kI{0.0, 1.0};

Matrix4c hermitian_part(const Matrix4c& m) { return 0.5 * (m + m.adjoint()); }

// sigma_y (x) sigma_y in the fixed product ordering.
Matrix4c spin_flip() {
  Matrix4c y = Matrix4c::Zero();
  y(0, 3) = -1.0;
  y(1, 2) = 1.0;
  y(2, 1) = 1.0;
  y(3, 0) = -1.0;
  return y;
}

std::array<Eigen::Matrix2cd, 4> paulis() {
  Eigen::Matrix2cd i2 = Eigen::Matrix2cd::Identity();
  Eigen::Matrix2cd x, y, z;
  x << 0, 1, 1, 0;
  y << 0, -kI, kI, 0;
  z << 1, 0, 0, -1;
  return {i2, x, y, z};
}

Matrix4c kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
  Matrix4c out;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  }
  return out;
}

// Real 16x16 map from Pauli-product coefficients r_ab to projector
// probabilities, rho = sum r_ab sigma_a (x) sigma_b / 4.
Eigen::MatrixXd measurement_matrix(const std::vector<ProjectorSetting>& settings) {
  const auto p = paulis();
  Eigen::MatrixXd m(settings.size(), 16);
  for (std::size_t k = 0; k < settings.size(); ++k) {
    const Vector4c v = settings[k].vector();
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) m(k, 4 * a + b) = (v.adjoint() * kron(p[a], p[b]) * v)(0, 0).real() / 4.0;
    }
  }
  return m;
}

// Cholesky-style parametrization: 4 real diagonal entries, then real and
// imaginary parts of the 6 strictly-lower entries.
struct TriangularEntry {
  int row, col;
  bool imaginary;
};

std::array<TriangularEntry, 16> triangular_layout() {
  std::array<TriangularEntry, 16> layout{};
  int k = 0;
  for (int i = 0; i < 4; ++i) layout[k++] = {i, i, false};
  for (int r = 1; r < 4; ++r) {
    for (int c = 0; c < r; ++c) {
      layout[k++] = {r, c, false};
      layout[k++] = {r, c, true};
    }
  }
  return layout;
}

Matrix4c triangular(const Eigen::Matrix<double, 16, 1>& t) {
  static const auto layout = triangular_layout();
  Matrix4c m = Matrix4c::Zero();
  for (int k = 0; k < 16; ++k) {
    const auto& e = layout[k];
    m(e.row, e.col) += e.imaginary ? kI * t(k) : cd(t(k), 0.0);
  }
  return m;
}

// Poisson deviance / 2: sum n log(n/mu) - n + mu, zero at a perfect fit.
double half_deviance(const std::vector<double>& n, const std::vector<double>& mu) {
  double d = 0.0;
  for (std::size_t k = 0; k < n.size(); ++k) {
    const double m = std::max(mu[k], 1e-300);
    d += (n[k] > 0.0 ? n[k] * std::log(n[k] / m) : 0.0) - n[k] + m;
  }
  return d;
}

}  // namespace

std::array<std::string, 4> basis_labels(BasisDomain domain) {
  if (domain == BasisDomain::frequency) return {"w1w1", "w1w2", "w2w1", "w2w2"};
  return {"HH", "HV", "VH", "VV"};
}

std::string to_string(BasisDomain domain) {
  return domain == BasisDomain::frequency ? "frequency" : "polarization";
}

BasisDomain basis_from_labels(const std::vector<std::string>& labels) {
  for (auto d : {BasisDomain::frequency, BasisDomain::polarization}) {
    const auto expect = basis_labels(d);
    if (labels.size() == 4 && std::equal(labels.begin(), labels.end(), expect.begin())) return d;
  }
  throw LabelError("unrecognized basis labels");
}

PhysicalityReport check_physicality(const Matrix4c& rho) {
  PhysicalityReport r;
  r.hermiticity_error = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  r.trace_error = std::abs(rho.trace() - cd(1.0, 0.0));
  Eigen::SelfAdjointEigenSolver<Matrix4c> eig(hermitian_part(rho), Eigen::EigenvaluesOnly);
  r.min_eigenvalue = eig.eigenvalues().minCoeff();
  return r;
}

DensityMatrix::DensityMatrix(const Matrix4c& elements, BasisDomain basis, const PhysicalityTolerance& tol)
    : rho_(elements), basis_(basis) {
  const auto r = check_physicality(rho_);
  if (!r.ok(tol)) {
    std::ostringstream msg;
    msg << "unphysical density matrix: hermiticity error " << r.hermiticity_error << ", trace error "
        << r.trace_error << ", min eigenvalue " << r.min_eigenvalue;
    throw PhysicalityError(msg.str());
  }
}

Eigen::Vector4d DensityMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Matrix4c> eig(rho_, Eigen::EigenvaluesOnly);
  return eig.eigenvalues();
}

DensityMatrix DensityMatrix::relabeled(BasisDomain basis) const { return DensityMatrix(rho_, basis); }

DensityMatrix rho_freq(double p, double V, double phi) {
  if (!(p >= 0.0 && p <= 1.0)) throw PhysicalityError("p must lie in [0, 1]");
  const double bound = 2.0 * std::sqrt(p * (1.0 - p));
  if (!(V >= 0.0) || V > bound + 1e-15) {
    std::ostringstream msg;
    msg << "V = " << V << " exceeds 2 sqrt(p(1-p)) = " << bound << "; the matrix would not be positive";
    throw PhysicalityError(msg.str());
  }
  Matrix4c rho = Matrix4c::Zero();
  rho(1, 1) = p;
  rho(2, 2) = 1.0 - p;
  rho(1, 2) = 0.5 * V * std::polar(1.0, -phi);
  rho(2, 1) = std::conj(rho(1, 2));
  return DensityMatrix(rho, BasisDomain::frequency);
}

StateVector ideal_state(double phi, BasisDomain domain) {
  StateVector s;
  s.basis = domain;
  s.amplitudes = Vector4c::Zero();
  s.amplitudes(1) = 1.0 / std::sqrt(2.0);
  s.amplitudes(2) = std::polar(1.0 / std::sqrt(2.0), phi);
  return s;
}

double fidelity(const DensityMatrix& rho, const StateVector& target) {
  if (rho.basis() != target.basis) {
    throw LabelError("fidelity between " + to_string(rho.basis()) + " and " + to_string(target.basis) +
                     " bases");
  }
  const double norm = target.amplitudes.squaredNorm();
  if (std::abs(norm - 1.0) > 1e-12) throw ArgumentError("target state is not normalized");
  return (target.amplitudes.adjoint() * rho.elements() * target.amplitudes)(0, 0).real();
}

double concurrence(const DensityMatrix& rho) {
  // Wootters: lambda_i are the singular values of tau = W^T Y W with
  // rho = W W^dagger, W = U sqrt(diag(e)) over the non-null eigenvectors.
  // Dropping numerically-null eigenvalues keeps sqrt() from amplifying noise.
  Eigen::SelfAdjointEigenSolver<Matrix4c> eig(rho.elements());
  const Eigen::Vector4d e = eig.eigenvalues();
  std::vector<int> keep;
  for (int i = 0; i < 4; ++i) {
    if (e(i) > 1e-14) keep.push_back(i);
  }
  if (keep.empty()) return 0.0;
  Eigen::MatrixXcd w(4, keep.size());
  for (std::size_t j = 0; j < keep.size(); ++j) w.col(j) = eig.eigenvectors().col(keep[j]) * std::sqrt(e(keep[j]));
  const Eigen::MatrixXcd tau = w.transpose() * spin_flip() * w;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(tau);
  std::array<double, 4> lambda{0.0, 0.0, 0.0, 0.0};
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) lambda[i] = svd.singularValues()(i);
  std::sort(lambda.begin(), lambda.end(), std::greater<>());
  return std::max(0.0, lambda[0] - lambda[1] - lambda[2] - lambda[3]);
}

double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  Eigen::SelfAdjointEigenSolver<Matrix4c> eig(hermitian_part(a.elements() - b.elements()), Eigen::EigenvaluesOnly);
  return 0.5 * eig.eigenvalues().cwiseAbs().sum();
}

double purity(const DensityMatrix& rho) { return (rho.elements() * rho.elements()).trace().real(); }

DensityMatrix mode_convert(const DensityMatrix& rho, double tau, double delta_omega) {
  if (rho.basis() != BasisDomain::frequency) throw LabelError("mode conversion expects a frequency-bin state");
  // Local phase on photon A's x2 component: u_A = diag(1, e^{i theta}), u_B = 1.
  const cd phase = std::polar(1.0, delta_omega * tau);
  Matrix4c u = Matrix4c::Identity();
  u(2, 2) = phase;
  u(3, 3) = phase;
  return DensityMatrix(hermitian_part(u * rho.elements() * u.adjoint()), BasisDomain::polarization);
}

StateVector mode_convert(const StateVector& state, double tau, double delta_omega) {
  if (state.basis != BasisDomain::frequency) throw LabelError("mode conversion expects a frequency-bin state");
  StateVector out = state;
  const cd phase = std::polar(1.0, delta_omega * tau);
  out.amplitudes(2) *= phase;
  out.amplitudes(3) *= phase;
  out.basis = BasisDomain::polarization;
  return out;
}

RatioEstimate probability_from_counts(double n12, double n21) {
  if (!(n12 >= 0.0 && n21 >= 0.0) || !(n12 + n21 > 0.0)) {
    throw ArgumentError("need non-negative counts with a positive total");
  }
  const double n = n12 + n21;
  const double p = n12 / n;
  return {p, std::sqrt(p * (1.0 - p) / n)};
}

Vector4c ProjectorSetting::vector() const {
  Vector4c v;
  v << state_a(0) * state_b(0), state_a(0) * state_b(1), state_a(1) * state_b(0), state_a(1) * state_b(1);
  return v;
}

Vector2c analyzer_state(const std::string& label) {
  const double r = 1.0 / std::sqrt(2.0);
  Vector2c v;
  if (label == "H") {
    v << 1.0, 0.0;
  } else if (label == "V") {
    v << 0.0, 1.0;
  } else if (label == "D") {
    v << r, r;
  } else if (label == "A") {
    v << r, -r;
  } else if (label == "R") {
    v << r, cd(0.0, r);
  } else if (label == "L") {
    v << r, cd(0.0, -r);
  } else {
    throw ConfigError("unknown analyzer state '" + label + "'");
  }
  return v;
}

std::vector<ProjectorSetting> canonical_settings() {
  std::vector<ProjectorSetting> out;
  for (const char* a : {"H", "V", "D", "R"}) {
    for (const char* b : {"H", "V", "D", "R"}) out.push_back({a, b, analyzer_state(a), analyzer_state(b)});
  }
  return out;
}

std::vector<ProjectorSetting> settings_from_json(const nlohmann::json& doc) {
  std::map<std::string, Vector2c> custom;
  try {
    if (doc.contains("states")) {
      for (const auto& [label, s] : doc.at("states").items()) {
        const auto re = s.at("re").get<std::array<double, 2>>();
        const auto im = s.at("im").get<std::array<double, 2>>();
        Vector2c v(cd(re[0], im[0]), cd(re[1], im[1]));
        if (std::abs(v.norm() - 1.0) > 1e-9) throw ConfigError("analyzer state '" + label + "' is not normalized");
        custom[label] = v;
      }
    }
    auto lookup = [&](const std::string& label) {
      const auto it = custom.find(label);
      return it != custom.end() ? it->second : analyzer_state(label);
    };
    std::vector<ProjectorSetting> out;
    for (const auto& s : doc.at("settings")) {
      const auto a = s.at("a").get<std::string>();
      const auto b = s.at("b").get<std::string>();
      out.push_back({a, b, lookup(a), lookup(b)});
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed tomography settings: ") + e.what());
  }
}

std::vector<ProjectorSetting> load_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open settings file " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  return settings_from_json(doc);
}

void require_informationally_complete(const std::vector<ProjectorSetting>& settings) {
  if (settings.size() < 16) {
    throw ArgumentError("tomography needs at least 16 settings (got " + std::to_string(settings.size()) + ")");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(measurement_matrix(settings));
  qr.setThreshold(1e-10);
  if (qr.rank() < 16) {
    throw ArgumentError("tomography settings are not informationally complete (rank " + std::to_string(qr.rank()) +
                        ")");
  }
}

TomographyDataset simulate_counts(const DensityMatrix& rho, const std::vector<ProjectorSetting>& settings,
                                  double intensity, std::optional<std::uint64_t> rng_seed) {
  require_informationally_complete(settings);
  if (!(intensity > 0.0)) throw ArgumentError("intensity must be positive");
  TomographyDataset data;
  data.basis = rho.basis();
  data.settings = settings;
  data.intensity = intensity;
  data.rng_seed = rng_seed;
  std::mt19937_64 gen(rng_seed.value_or(0));
  for (const auto& s : settings) {
    const Vector4c v = s.vector();
    const double mean = intensity * std::max(0.0, (v.adjoint() * rho.elements() * v)(0, 0).real());
    if (rng_seed) {
      std::poisson_distribution<long long> dist(mean);
      data.counts.push_back(mean > 0.0 ? static_cast<double>(dist(gen)) : 0.0);
    } else {
      data.counts.push_back(mean);
    }
  }
  return data;
}

Matrix4c linear_inversion(const TomographyDataset& data) {
  require_informationally_complete(data.settings);
  const Eigen::MatrixXd m = measurement_matrix(data.settings);
  const Eigen::VectorXd n = Eigen::Map<const Eigen::VectorXd>(data.counts.data(), data.counts.size());
  const Eigen::VectorXd r = m.colPivHouseholderQr().solve(n);
  if (!(r(0) > 0.0)) throw ArgumentError("counts carry no signal");
  const auto p = paulis();
  Matrix4c rho = Matrix4c::Zero();
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) rho += r(4 * a + b) * kron(p[a], p[b]) / 4.0;
  }
  return hermitian_part(rho / rho.trace().real());
}

MleResult mle_tomography_detailed(const TomographyDataset& data, const MleOptions& options) {
  if (data.counts.size() != data.settings.size()) throw ArgumentError("one count per setting required");
  double total = 0.0;
  for (double c : data.counts) {
    if (!(c >= 0.0)) throw ArgumentError("tomography counts must be non-negative");
    total += c;
  }
  if (!(total > 0.0)) throw ArgumentError("all tomography counts are zero");
  require_informationally_complete(data.settings);

  const std::size_t ns = data.settings.size();
  std::vector<Vector4c> bare(ns);
  for (std::size_t k = 0; k < ns; ++k) bare[k] = data.settings[k].vector();
  // rho = U^dagger T^dagger T U for a fixed unitary frame U, so the model
  // means are |T U pi|^2.
  Matrix4c frame = Matrix4c::Identity();
  std::vector<Vector4c> proj = bare;
  auto set_frame = [&](const Matrix4c& u) {
    frame = u;
    for (std::size_t k = 0; k < ns; ++k) proj[k] = u * bare[k];
  };

  static const auto layout = triangular_layout();
  using Mat16 = Eigen::Matrix<double, 16, 16>;
  using Vec16 = Eigen::Matrix<double, 16, 1>;

  // T with U^dagger T^dagger T U = (1 - mix) rho + mix I/4, scaled to the
  // total counts, via Cholesky of the index-reversed matrix.
  auto factor = [&](const Matrix4c& rho, double mix) {
    Matrix4c r = hermitian_part(frame * ((1.0 - mix) * rho + mix * Matrix4c::Identity() / 4.0) * frame.adjoint());
    double expected = 0.0;
    for (const auto& v : proj) expected += (v.adjoint() * r * v)(0, 0).real();
    r *= total / expected;
    Eigen::PermutationMatrix<4> rev;
    rev.indices() << 3, 2, 1, 0;
    const Matrix4c reversed = rev * r * rev.transpose();
    const Matrix4c l = Eigen::LLT<Matrix4c>(reversed).matrixL();
    const Matrix4c t0 = rev * Matrix4c(l.adjoint()) * rev.transpose();
    Vec16 th;
    for (int k = 0; k < 16; ++k) {
      const auto& en = layout[k];
      th(k) = en.imaginary ? t0(en.row, en.col).imag() : t0(en.row, en.col).real();
    }
    return th;
  };
  auto normalized = [&](const Vec16& th) {
    const Matrix4c t = triangular(th) * frame;
    const Matrix4c rho = t.adjoint() * t;
    return Matrix4c(hermitian_part(rho / rho.trace().real()));
  };

  auto means = [&](const Vec16& th) {
    const Matrix4c t = triangular(th);
    std::vector<double> mu(ns);
    for (std::size_t k = 0; k < ns; ++k) mu[k] = (t * proj[k]).squaredNorm();
    return mu;
  };

  // Negative gradient and Hessian of the half-deviance, plus the expected
  // information used to scale the damping. mu_k is quadratic in theta, so the
  // Hessian is exact: sum c/mu^2 d d^T + (1 - c/mu) d^2 mu.
  auto derivatives = [&](const Vec16& th, Mat16& hessian, Mat16& fisher, Vec16& grad) {
    const Matrix4c t = triangular(th);
    hessian.setZero();
    fisher.setZero();
    grad.setZero();
    for (std::size_t k = 0; k < ns; ++k) {
      const Vector4c w = t * proj[k];
      const double mu = std::max(w.squaredNorm(), 1e-300);
      const double c = data.counts[k];
      Vec16 d;
      std::array<cd, 16> q;
      for (int a = 0; a < 16; ++a) {
        const auto& en = layout[a];
        // E_a pi = coef pi_col e_row, d mu / d theta_a = 2 Re[(E_a pi)^dagger w].
        q[a] = (en.imaginary ? kI : cd(1.0, 0.0)) * proj[k](en.col);
        d(a) = 2.0 * (std::conj(q[a]) * w(en.row)).real();
      }
      fisher.noalias() += d * d.transpose() / mu;
      hessian.noalias() += (c / (mu * mu)) * d * d.transpose();
      const double curvature = 2.0 * (1.0 - c / mu);
      for (int a = 0; a < 16; ++a) {
        for (int b = 0; b < 16; ++b) {
          if (layout[a].row == layout[b].row) hessian(a, b) += curvature * (std::conj(q[a]) * q[b]).real();
        }
      }
      grad += (c / mu - 1.0) * d;
    }
  };

  // Start from the linear inversion pulled into the positive cone.
  Eigen::SelfAdjointEigenSolver<Matrix4c> eig(linear_inversion(data));
  Eigen::Vector4d e = eig.eigenvalues().cwiseMax(0.0);
  e /= e.sum();
  Vec16 theta = factor(eig.eigenvectors() * e.cast<cd>().asDiagonal() * eig.eigenvectors().adjoint(), 1e-3);

  double dev = half_deviance(data.counts, means(theta));
  MleResult result{DensityMatrix(Matrix4c::Identity() / 4.0, data.basis), -dev, 0, {-dev}};
  Mat16 hessian;
  Mat16 fisher;
  Vec16 grad;
  int it = 0;
  Matrix4c best = normalized(theta);
  double best_dev = dev;
  // A pivot of T that collapses to zero can pin the iterate on a face of the
  // cone away from the optimum. A converged run is therefore re-factored in a
  // rotated frame and resumed until that no longer helps.
  std::mt19937_64 frames(0x5eed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  constexpr int kMaxRestarts = 8;
  for (int restart = 0;; ++restart) {
    const double best_before = best_dev;
    double lambda = 1e-3;
    derivatives(theta, hessian, fisher, grad);
    bool converged = false;
    for (; it < options.max_iterations; ++it) {
      Mat16 damped = hessian;
      const double floor = 1e-12 * std::max(fisher.diagonal().maxCoeff(), 1e-300);
      for (int a = 0; a < 16; ++a) damped(a, a) += lambda * std::max(fisher(a, a), floor);
      const Eigen::LLT<Mat16> llt(damped);
      if (llt.info() != Eigen::Success) {
        // Negative curvature: lean further on the damping.
        lambda *= 4.0;
        continue;
      }
      const Vec16 step = llt.solve(grad);
      const Vec16 trial = theta + step;
      const double trial_dev = half_deviance(data.counts, means(trial));
      if (std::isfinite(trial_dev) && trial_dev <= dev) {
        const double improvement = dev - trial_dev;
        theta = trial;
        dev = trial_dev;
        result.history.push_back(std::max(result.history.back(), -dev));
        lambda = std::max(lambda / 3.0, 1e-15);
        derivatives(theta, hessian, fisher, grad);
        if (improvement < options.tolerance) {
          converged = true;
          break;
        }
      } else {
        lambda *= 4.0;
        if (lambda > 1e20) {
          // No representable improvement left.
          converged = true;
          break;
        }
      }
    }
    if (!converged) {
      throw ConvergenceError("MLE tomography did not converge in " + std::to_string(options.max_iterations) +
                             " iterations (deviance " + std::to_string(2.0 * dev) + ")");
    }
    if (dev < best_dev) {
      best_dev = dev;
      best = normalized(theta);
    }
    if ((restart > 0 && best_before - dev < options.tolerance) || restart == kMaxRestarts) break;
    Matrix4c g;
    for (int i = 0; i < 16; ++i) g(i / 4, i % 4) = cd(gauss(frames), gauss(frames));
    const Matrix4c current = normalized(theta);
    set_frame(Eigen::HouseholderQR<Matrix4c>(g).householderQ());
    theta = factor(current, 1e-6);
    dev = half_deviance(data.counts, means(theta));
  }
  dev = best_dev;
  result.rho = DensityMatrix(best, data.basis);
  result.log_likelihood = -dev;
  result.iterations = it + 1;
  return result;
}

DensityMatrix mle_tomography(const TomographyDataset& data, const MleOptions& options) {
  return mle_tomography_detailed(data, options).rho;
}

nlohmann::json to_json(const DensityMatrix& rho) {
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  for (int r = 0; r < 4; ++r) {
    nlohmann::json rr = nlohmann::json::array(), ii = nlohmann::json::array();
    for (int c = 0; c < 4; ++c) {
      rr.push_back(rho(r, c).real());
      ii.push_back(rho(r, c).imag());
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  return {{"basis", basis_labels(rho.basis())}, {"re", re}, {"im", im}};
}

DensityMatrix density_matrix_from_json(const nlohmann::json& doc) {
  try {
    const auto basis = basis_from_labels(doc.at("basis").get<std::vector<std::string>>());
    const auto re = doc.at("re").get<std::vector<std::vector<double>>>();
    const auto im = doc.at("im").get<std::vector<std::vector<double>>>();
    if (re.size() != 4 || im.size() != 4) throw ConfigError("density matrix must be 4x4");
    Matrix4c m;
    for (int r = 0; r < 4; ++r) {
      if (re[r].size() != 4 || im[r].size() != 4) throw ConfigError("density matrix must be 4x4");
      for (int c = 0; c < 4; ++c) m(r, c) = cd(re[r][c], im[r][c]);
    }
    return DensityMatrix(m, basis);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed density matrix document: ") + e.what());
  }
}

void write_tomography_csv(std::ostream& out, const TomographyDataset& data) {
  out << "setting_id,proj_a,proj_b,counts\n";
  const auto old = out.precision(15);
  for (std::size_t k = 0; k < data.settings.size(); ++k) {
    out << k << ',' << data.settings[k].a << ',' << data.settings[k].b << ',' << data.counts[k] << '\n';
  }
  out.precision(old);
}

TomographyDataset read_tomography_csv(std::istream& in, BasisDomain basis) {
  TomographyDataset data;
  data.basis = basis;
  std::string line;
  bool header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "setting_id,proj_a,proj_b,counts") {
        throw ConfigError("tomography CSV header must be 'setting_id,proj_a,proj_b,counts'");
      }
      header = true;
      continue;
    }
    std::istringstream row(line);
    std::string id, a, b, n;
    if (!std::getline(row, id, ',') || !std::getline(row, a, ',') || !std::getline(row, b, ',') ||
        !std::getline(row, n, ',')) {
      throw ConfigError("tomography CSV line " + std::to_string(lineno) + " needs four fields");
    }
    data.settings.push_back({a, b, analyzer_state(a), analyzer_state(b)});
    try {
      data.counts.push_back(std::stod(n));
    } catch (const std::exception&) {
      throw ConfigError("tomography CSV line " + std::to_string(lineno) + " has non-numeric counts");
    }
  }
  if (!header) throw ConfigError("tomography CSV is empty");
  return data;
}

}  // namespace fbent
