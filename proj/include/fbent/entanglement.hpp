#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "fbent/error.hpp"

namespace fbent {

using Matrix4c = Eigen::Matrix4cd;
using Vector4c = Eigen::Vector4cd;
using Vector2c = Eigen::Vector2cd;

/// Two-qubit basis, always ordered |x1 x1>, |x1 x2>, |x2 x1>, |x2 x2> with
/// photon A first.
enum class BasisDomain { frequency, polarization };

std::array<std::string, 4> basis_labels(BasisDomain domain);
std::string to_string(BasisDomain domain);
BasisDomain basis_from_labels(const std::vector<std::string>& labels);

struct PhysicalityTolerance {
  double hermiticity = 1e-12;
  double trace = 1e-12;
  double eigenvalue = -1e-10;
};

class DensityMatrix {
 public:
  /// Validates Hermiticity, unit trace and positivity; throws PhysicalityError.
  DensityMatrix(const Matrix4c& elements, BasisDomain basis, const PhysicalityTolerance& tol = {});

  const Matrix4c& elements() const { return rho_; }
  BasisDomain basis() const { return basis_; }
  std::complex<double> operator()(int r, int c) const { return rho_(r, c); }
  Eigen::Vector4d eigenvalues() const;

  /// Same elements with a different label set (the physical content is unchanged).
  DensityMatrix relabeled(BasisDomain basis) const;

 private:
  Matrix4c rho_;
  BasisDomain basis_;
};

struct PhysicalityReport {
  double hermiticity_error = 0.0;
  double trace_error = 0.0;
  double min_eigenvalue = 0.0;
  bool ok(const PhysicalityTolerance& tol = {}) const {
    return hermiticity_error <= tol.hermiticity && trace_error <= tol.trace && min_eigenvalue >= tol.eigenvalue;
  }
};

PhysicalityReport check_physicality(const Matrix4c& rho);

struct StateVector {
  Vector4c amplitudes;
  BasisDomain basis = BasisDomain::frequency;
};

/// p |w1w2><w1w2| + (1-p) |w2w1><w2w1| + (V/2)(e^{-i phi}|w1w2><w2w1| + h.c.),
/// which equals |psi_f(phi)><psi_f(phi)| for p = 1/2, V = 1.
DensityMatrix rho_freq(double p, double V, double phi);

/// (|x1 x2> + e^{i phi} |x2 x1>)/sqrt(2).
StateVector ideal_state(double phi, BasisDomain domain);

/// <psi|rho|psi>; throws LabelError when the bases differ.
double fidelity(const DensityMatrix& rho, const StateVector& target);

/// Wootters concurrence.
double concurrence(const DensityMatrix& rho);

double trace_distance(const DensityMatrix& a, const DensityMatrix& b);
double purity(const DensityMatrix& rho);

/// Frequency-bin to polarization transfer with the delay phase
/// phi' = phi + delta_omega * tau applied to the |x2 ...> branch.
DensityMatrix mode_convert(const DensityMatrix& rho, double tau, double delta_omega);
StateVector mode_convert(const StateVector& state, double tau, double delta_omega);

struct RatioEstimate {
  double p = 0.0;
  double sigma = 0.0;
};

/// p = n12 / (n12 + n21) with binomial error sqrt(p(1-p)/n).
RatioEstimate probability_from_counts(double n12, double n21);

/// Product projector |a><a| (x) |b><b| described by per-photon labels.
struct ProjectorSetting {
  std::string a;
  std::string b;
  Vector2c state_a;
  Vector2c state_b;

  Vector4c vector() const;  // kron(state_a, state_b)
};

/// Per-photon analysis states H, V, D, A, R, L (H = x1, V = x2).
Vector2c analyzer_state(const std::string& label);

/// All 16 combinations of {H, V, D, R} per photon.
std::vector<ProjectorSetting> canonical_settings();
std::vector<ProjectorSetting> settings_from_json(const nlohmann::json& doc);
std::vector<ProjectorSetting> load_settings(const std::filesystem::path& path);

/// Throws ArgumentError unless the projectors span all two-qubit operators.
void require_informationally_complete(const std::vector<ProjectorSetting>& settings);

struct TomographyDataset {
  BasisDomain basis = BasisDomain::polarization;
  std::vector<ProjectorSetting> settings;
  std::vector<double> counts;
  /// Expected counts for a projector with unit overlap (provenance only).
  double intensity = 0.0;
  std::optional<std::uint64_t> rng_seed;
};

/// Counts with means intensity * Tr(rho Pi_k); Poisson-sampled when a seed is
/// given, exact means otherwise.
TomographyDataset simulate_counts(const DensityMatrix& rho, const std::vector<ProjectorSetting>& settings,
                                  double intensity, std::optional<std::uint64_t> rng_seed);

/// Least-squares inversion, trace-normalized but not necessarily positive.
Matrix4c linear_inversion(const TomographyDataset& data);

struct MleOptions {
  int max_iterations = 5000;
  double tolerance = 1e-10;  // log-likelihood improvement per accepted step
};

struct MleResult {
  DensityMatrix rho;
  double log_likelihood = 0.0;  // up to a data-only constant
  int iterations = 0;
  std::vector<double> history;  // best log-likelihood after each accepted step
};

/// rho = T^dagger T / Tr(T^dagger T), T lower triangular, maximizing the
/// Poisson likelihood of the counts.
MleResult mle_tomography_detailed(const TomographyDataset& data, const MleOptions& options = {});
DensityMatrix mle_tomography(const TomographyDataset& data, const MleOptions& options = {});

nlohmann::json to_json(const DensityMatrix& rho);
DensityMatrix density_matrix_from_json(const nlohmann::json& doc);

/// CSV `setting_id,proj_a,proj_b,counts`.
void write_tomography_csv(std::ostream& out, const TomographyDataset& data);
TomographyDataset read_tomography_csv(std::istream& in, BasisDomain basis = BasisDomain::polarization);

}  // namespace fbent
