// model.hpp: physical parameters, drive specification and mean-field state
// of a driven, dissipative cavity-qubit chain.
//
// All frequencies and rates are angular (rad/s); time is in seconds.

#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cqed {

using cplx = std::complex<double>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Thrown when a parameter record violates one of its invariants.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when numerical integration fails (divergence, non-finite values).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LatticeParams {
  int n_sites{1};
  double omega_r{0.0};     ///< cavity frequency
  double omega_q{0.0};     ///< qubit frequency (uniform chain)
  double u_kerr{0.0};      ///< Kerr / Hubbard interaction U (transmon: U = -E_C)
  double g_coupling{0.0};  ///< qubit-cavity coupling
  double t_hop{0.0};       ///< nearest-neighbour photon hopping
  double kappa{0.0};       ///< photon loss rate
  double gamma_q{0.0};     ///< qubit relaxation rate
  int drive_site{1};       ///< 1-based; the drive acts on site 1 only
  int output_site{1};      ///< 1-based transmission readout site
  /// Optional per-site qubit frequencies; empty means uniform omega_q.
  std::vector<double> omega_q_site{};

  double qubit_frequency(int site0) const {
    return omega_q_site.empty() ? omega_q : omega_q_site[static_cast<std::size_t>(site0)];
  }

  bool operator==(const LatticeParams&) const = default;
};

/// Drive amplitude envelope: scale factor ramping linearly from `start` to
/// `stop` over `duration`, then held at `stop`. Constant drive has
/// start = stop = 1.
struct Envelope {
  enum class Kind { constant, up_pulse, down_pulse, linear_ramp };
  Kind kind{Kind::constant};
  double start{1.0};
  double stop{1.0};
  double duration{0.0};

  static Envelope constant() { return {}; }
  /// Approach the hold amplitude from above (overshoot, then settle):
  /// prepares the high-power state.
  static Envelope up_pulse(double duration, double overshoot = 3.0) {
    return {Kind::up_pulse, overshoot, 1.0, duration};
  }
  /// Approach the hold amplitude from zero: prepares the low-power state.
  static Envelope down_pulse(double duration) { return {Kind::down_pulse, 0.0, 1.0, duration}; }
  static Envelope linear_ramp(double start, double stop, double duration) {
    return {Kind::linear_ramp, start, stop, duration};
  }

  double factor(double time) const {
    if (kind == Kind::constant) return 1.0;
    if (time >= duration || duration <= 0.0) return stop;
    if (time <= 0.0) return start;
    return start + (stop - start) * (time / duration);
  }

  bool operator==(const Envelope&) const = default;
};

struct DriveSpec {
  double omega_p{0.0};  ///< drive frequency
  cplx epsilon{0.0};    ///< drive strength
  Envelope envelope{};

  cplx amplitude(double time) const { return epsilon * envelope.factor(time); }
  bool operator==(const DriveSpec&) const = default;
};

/// Mean-field amplitudes alpha_j = <a_j>, beta_j = <b_j>.
struct MeanFieldState {
  std::vector<cplx> alpha;
  std::vector<cplx> beta;

  MeanFieldState() = default;
  explicit MeanFieldState(int n_sites)
      : alpha(static_cast<std::size_t>(n_sites)), beta(static_cast<std::size_t>(n_sites)) {}

  static MeanFieldState vacuum(int n_sites) { return MeanFieldState(n_sites); }

  int n_sites() const { return static_cast<int>(alpha.size()); }
  bool all_finite() const;
  double max_abs() const;

  bool operator==(const MeanFieldState&) const = default;
};

/// Device defaults: 72 sites, omega_r/2pi = 7.5 GHz, t/2pi = 144 MHz,
/// kappa/2pi = 1.6 MHz, g/2pi = 265 MHz, U/2pi = -180 MHz, Gamma = 1/(1 us),
/// Omega/2pi = 8.4 GHz (middle of the 8-8.8 GHz qubit band).
LatticeParams paper_default_params();

/// Returns `params` unchanged when every invariant holds, otherwise throws
/// ConfigError naming the violated invariant.
const LatticeParams& validate(const LatticeParams& params);

/// Drive-side checks (finite frequency and amplitude, sane envelope).
const DriveSpec& validate(const DriveSpec& drive);

}  // namespace cqed
