#include "cqed/observables.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace cqed {

double amplitude_db(double amplitude, double reference) {
  if (!(reference > 0.0)) throw std::invalid_argument("transmission reference must be > 0");
  if (!(amplitude > 0.0)) return kTransmissionFloorDb;
  return std::max(kTransmissionFloorDb, 20.0 * std::log10(amplitude / reference));
}

double transmission(const SteadyStateResult& r, double reference, TransmissionMode mode) {
  double amplitude = std::abs(r.alpha_out_mean);
  if (mode == TransmissionMode::magnitude && r.classification == Classification::non_stationary)
    amplitude = r.alpha_abs_mean;
  return amplitude_db(amplitude, reference);
}

const char* to_string(G2Formula f) {
  return f == G2Formula::magnitude_moments ? "magnitude_moments" : "fourth_moment";
}

std::optional<double> g2_zero(std::span<const double> tail, G2Formula formula) {
  if (tail.empty()) return std::nullopt;
  const double n = static_cast<double>(tail.size());
  if (formula == G2Formula::magnitude_moments) {
    // <|a|^2>/<|a|>^2 = 1 + var(|a|)/<|a|>^2; the variance form is exactly 1
    // for a constant tail.
    const double mean = std::accumulate(tail.begin(), tail.end(), 0.0) / n;
    if (!(mean > 0.0)) return std::nullopt;
    double var = 0.0;
    for (double x : tail) var += (x - mean) * (x - mean);
    var /= n;
    return 1.0 + var / (mean * mean);
  }
  double m2 = 0.0;
  for (double x : tail) m2 += x * x;
  m2 /= n;
  if (!(m2 > 0.0)) return std::nullopt;
  double var2 = 0.0;
  for (double x : tail) var2 += (x * x - m2) * (x * x - m2);
  var2 /= n;
  return 1.0 + var2 / (m2 * m2);
}

EigenmodeSet chain_eigenmodes(const LatticeParams& params) {
  const int n = params.n_sites;
  if (n < 1) throw ConfigError("n_sites must be >= 1");
  Eigen::VectorXd diag = Eigen::VectorXd::Constant(n, params.omega_r);
  Eigen::VectorXd sub = Eigen::VectorXd::Constant(std::max(n - 1, 0), params.t_hop);
  EigenmodeSet set;
  if (n == 1) {
    set.frequencies = diag;
    set.weights = Eigen::MatrixXd::Identity(1, 1);
    return set;
  }
  // Diagonalize the hopping part around zero and shift back, which keeps the
  // relative accuracy of the band structure independent of omega_r.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(Eigen::VectorXd::Zero(n), sub, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw NumericError("tridiagonal eigensolver failed");
  set.frequencies = solver.eigenvalues().array() + params.omega_r;
  set.weights = solver.eigenvectors();
  for (int mu = 0; mu < n; ++mu) {
    auto col = set.weights.col(mu);
    for (int j = 0; j < n; ++j) {
      if (std::abs(col(j)) > 1e-8) {
        if (col(j) < 0.0) col = -col;
        break;
      }
    }
  }
  return set;
}

double uniform_chain_frequency(const LatticeParams& params, int mu) {
  return params.omega_r +
         2.0 * params.t_hop * std::cos(mu * std::numbers::pi / (params.n_sites + 1));
}

std::vector<double> predict_emission_peaks(const LatticeParams& params) {
  const auto set = chain_eigenmodes(params);
  return {set.frequencies.data(), set.frequencies.data() + set.frequencies.size()};
}

std::pair<LatticeParams, DriveSpec> map_u_sign(const LatticeParams& params, const DriveSpec& drive) {
  LatticeParams p = params;
  DriveSpec d = drive;
  d.omega_p = 2.0 * params.omega_r - drive.omega_p;
  p.omega_q = params.omega_r - (params.omega_q - params.omega_r);
  for (auto& w : p.omega_q_site) w = params.omega_r - (w - params.omega_r);
  p.g_coupling = -params.g_coupling;
  p.t_hop = -params.t_hop;
  d.epsilon = -std::conj(drive.epsilon);
  return {p, d};
}

}  // namespace cqed
