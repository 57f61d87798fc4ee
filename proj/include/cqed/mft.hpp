// mft.hpp: time integration of the quasi-classical mean-field equations
//
//   i d(alpha_j)/dt = (omega - omega_p - i kappa/2) alpha_j + g beta_j
//                     + t (alpha_{j-1} + alpha_{j+1}) + eps(t) delta_{j,1}
//   i d(beta_j)/dt  = (Omega - omega_p - i Gamma/2) beta_j
//                     + U |beta_j|^2 beta_j + g alpha_j
//
// written in the frame rotating at the drive frequency, on an open chain
// (alpha_0 = alpha_{N+1} = 0).

#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cqed/model.hpp"

namespace cqed {

/// Integration aborted because an amplitude exceeded the divergence bound or
/// became non-finite.
class DivergenceError : public NumericError {
 public:
  DivergenceError(const std::string& what, double time) : NumericError(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

struct IntegratorConfig {
  enum class Method { dopri45, rk4_fixed };

  Method method{Method::dopri45};
  double dt_max{1e-9};
  double rel_tol{1e-8};
  double abs_tol{1e-10};
  double t_transient{0.0};
  double t_average{0.0};
  double divergence_bound{1e6};
  int average_samples{4000};           ///< uniform samples over the averaging window
  double fixed_point_threshold{1e-3};  ///< relative std of |alpha_out| for a fixed point
  /// Adaptive steps are also capped at max_phase_per_step divided by the
  /// largest frequency of the chain, Kerr shift of the current state
  /// included (0 disables).
  double max_phase_per_step{1.0};

  /// t_transient = t_average = 200/kappa, dt_max = 1/kappa.
  static IntegratorConfig defaults_for(const LatticeParams& params);
};

/// Throws ConfigError unless every field is in range.
const IntegratorConfig& validate(const IntegratorConfig& config);

enum class Classification { fixed_point, non_stationary };

const char* to_string(Classification c);

struct SteadyStateResult {
  Classification classification{Classification::fixed_point};
  cplx alpha_out_mean{};
  double alpha_abs_mean{0.0};
  double alpha_abs2_mean{0.0};
  double alpha_abs_variance{0.0};
  MeanFieldState final_state{};
  /// |alpha_out(t)| sampled uniformly over the averaging window.
  std::vector<double> tail_abs{};
};

struct Trajectory {
  std::vector<double> times;
  std::vector<MeanFieldState> states;
};

/// Evaluates the right-hand side on packed doubles. The packed layout is the
/// std::complex interleave of [alpha_1..alpha_N, beta_1..beta_N].
class MeanFieldSystem {
 public:
  MeanFieldSystem(const LatticeParams& params, const DriveSpec& drive);

  int n_sites() const { return n_; }
  std::size_t dimension() const { return 4 * static_cast<std::size_t>(n_); }
  void rhs(double time, const double* y, double* dy) const;
  /// Rough upper bound of the instantaneous oscillation frequency, used for
  /// the first step size guess.
  double frequency_scale(const double* y) const;
  /// Gershgorin bound on the linear part's eigenfrequencies.
  double linear_frequency_scale() const;

  const LatticeParams& params() const { return params_; }
  const DriveSpec& drive() const { return drive_; }

 private:
  LatticeParams params_;
  DriveSpec drive_;
  int n_;
  int drive0_;
  double cav_detuning_;
  std::vector<double> qubit_detuning_;
};

/// Time derivatives of (alpha, beta).
MeanFieldState mft_rhs(const MeanFieldState& state, const LatticeParams& params,
                       const DriveSpec& drive, double time);

using SampleObserver = std::function<void(double time, std::span<const double> packed)>;

/// Integrates `packed` in place from t0 to t_end. The observer is called at
/// t_first_sample + k*sample_dt (k >= 0, up to t_end) with interpolated states.
/// Returns the number of accepted steps.
long integrate_packed(const MeanFieldSystem& system, std::vector<double>& packed, double t0,
                      double t_end, const IntegratorConfig& config, double t_first_sample,
                      double sample_dt, const SampleObserver& observer);

/// Time-sampled trajectory from 0 to t_end, including t = 0.
Trajectory integrate(const MeanFieldState& state0, const LatticeParams& params,
                     const DriveSpec& drive, const IntegratorConfig& config, double t_end,
                     double sample_dt);

/// Exact stationary amplitudes of the U = 0 chain from a dense linear solve.
MeanFieldState linear_steady_state(const LatticeParams& params, const DriveSpec& drive);

/// Integrates through the envelope duration plus t_transient, then averages
/// |alpha_out| over t_average and classifies the attractor.
SteadyStateResult find_steady_state(const LatticeParams& params, const DriveSpec& drive,
                                    const MeanFieldState& init, const IntegratorConfig& config);

/// fixed_point iff std(|alpha_out|) <= threshold * mean(|alpha_out|) over the
/// window. Throws std::invalid_argument for fewer than 10 samples.
Classification classify_attractor(std::span<const double> tail_abs, double threshold = 1e-3);

MeanFieldState unpack_state(std::span<const double> packed, int n_sites);
std::vector<double> pack_state(const MeanFieldState& state);

}  // namespace cqed
