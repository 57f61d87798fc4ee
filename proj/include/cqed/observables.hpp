// observables.hpp: transmission, g2(0), chain eigenmodes and the U-sign
// mapping.

#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cqed/mft.hpp"

namespace cqed {

/// Floor reported for a vanishing transmitted amplitude.
inline constexpr double kTransmissionFloorDb = -200.0;

enum class TransmissionMode {
  coherent,   ///< |<<alpha_out>>_t|, the time-averaged complex amplitude (S21 ~ <a_j>)
  magnitude,  ///< <<|alpha_out|>>_t for non-stationary states, |<<alpha_out>>_t| otherwise
};

/// 20 log10(amplitude / reference), floored at kTransmissionFloorDb.
double amplitude_db(double amplitude, double reference);

/// 20 log10(|alpha_out| / reference), floored at kTransmissionFloorDb.
/// Throws std::invalid_argument if reference <= 0.
double transmission(const SteadyStateResult& result, double reference,
                    TransmissionMode mode = TransmissionMode::coherent);

enum class G2Formula {
  magnitude_moments,  ///< <<|a|^2>> / <<|a|>>^2
  fourth_moment,      ///< <<|a|^4>> / <<|a|^2>>^2
};

const char* to_string(G2Formula f);

/// Second-order coherence of |alpha_out(t)| samples. Returns nullopt when the
/// denominator vanishes (undefined g2).
std::optional<double> g2_zero(std::span<const double> tail_abs,
                              G2Formula formula = G2Formula::magnitude_moments);

struct EigenmodeSet {
  Eigen::VectorXd frequencies;  ///< ascending
  Eigen::MatrixXd weights;      ///< weights(j, mu): site j, mode mu; orthonormal columns
};

/// Normal modes of the bare hopping chain (diagonal omega_r, off-diagonal t).
/// Columns are sign-fixed so that the first non-negligible site weight is positive.
EigenmodeSet chain_eigenmodes(const LatticeParams& params);

/// omega_r + 2 t cos(mu pi / (N + 1)), mu = 1..N.
double uniform_chain_frequency(const LatticeParams& params, int mu);

/// The eigenmode frequencies, i.e. the comb of expected multimode emission
/// lines (frequencies only).
std::vector<double> predict_emission_peaks(const LatticeParams& params);

/// (omega_p, Omega - omega, g, t) -> (2 omega - omega_p, omega - Omega, -g, -t),
/// eps -> -conj(eps). U is left unchanged: the mapped problem solved with -U
/// has amplitudes equal to the complex conjugates of the original problem
/// solved with U, so |alpha_j| and |beta_j| coincide.
std::pair<LatticeParams, DriveSpec> map_u_sign(const LatticeParams& params, const DriveSpec& drive);

}  // namespace cqed
