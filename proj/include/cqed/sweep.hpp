// sweep.hpp: frequency x power maps, directional power sweeps with state
// continuation, hysteresis and two-seed bistability maps, pulse-initialized
// state preparation.
//
// Cells of a map are independent and run under OpenMP; the serial reference
// in cqed::serial runs the identical per-cell kernel in index order and is
// kept for testing and benchmarking.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cqed/mft.hpp"
#include "cqed/observables.hpp"

namespace cqed {

enum class Protocol { fresh_start, sweep_up, sweep_down, seed_vacuum, seed_excited };
enum class Direction { up, down };
enum class Pulse { up, down };

const char* to_string(Protocol p);
Protocol protocol_from_string(const std::string& s);

struct SweepOptions {
  IntegratorConfig integrator{};
  TransmissionMode transmission_mode{TransmissionMode::coherent};
  G2Formula g2_formula{G2Formula::magnitude_moments};
  /// Excited seed: |alpha_j| = excited_seed_factor x the largest linear-response
  /// amplitude at the cell's drive, random phases.
  double excited_seed_factor{10.0};
  std::uint64_t seed{12345};
  /// Hold-amplitude ramp used by pulse_initialized_point.
  double pulse_ramp_time{0.0};
  double pulse_overshoot{3.0};
  /// |difference| above which a cell counts as hysteretic / multi-attractor.
  double hysteresis_threshold_db{3.0};

  static SweepOptions defaults_for(const LatticeParams& params);
};

struct CellSummary {
  Classification classification{Classification::fixed_point};
  cplx alpha_out_mean{};
  double alpha_abs_mean{0.0};
  double transmission_db{kTransmissionFloorDb};
  std::optional<double> g2{};  ///< per SweepOptions::g2_formula; nullopt if undefined
  bool diverged{false};

  bool operator==(const CellSummary&) const = default;
};

struct SweepGrid {
  std::vector<double> freqs;   ///< drive frequencies [rad/s]
  std::vector<double> powers;  ///< drive amplitudes |eps| [rad/s]
  std::vector<CellSummary> cells;  ///< freq-major: cells[f * powers.size() + p]
  Protocol protocol{Protocol::fresh_start};
  /// Transmission reference: max |alpha_out|/|eps| over the lowest-power row.
  double reference_gain{0.0};

  std::size_t index(std::size_t f, std::size_t p) const { return f * powers.size() + p; }
  const CellSummary& at(std::size_t f, std::size_t p) const { return cells[index(f, p)]; }
  CellSummary& at(std::size_t f, std::size_t p) { return cells[index(f, p)]; }
  bool operator==(const SweepGrid&) const = default;
};

struct HysteresisMap {
  SweepGrid grid_up;    ///< up sweep (or vacuum seed)
  SweepGrid grid_down;  ///< down sweep (or excited seed)
  std::vector<double> difference;  ///< dB, same indexing as the grids
  double threshold_db{3.0};

  /// Indices of cells with |difference| > threshold_db.
  std::vector<std::size_t> hysteretic_cells() const;
};

struct PulseResult {
  SteadyStateResult state;
  std::optional<double> g2;
};

/// Log-spaced drive amplitudes from lo to hi (inclusive).
std::vector<double> log_spaced(double lo, double hi, int count);
std::vector<double> lin_spaced(double lo, double hi, int count);

/// Excited seed for one cell, reproducible from (seed, stream).
MeanFieldState excited_seed(const LatticeParams& params, const DriveSpec& drive, double factor,
                            std::uint64_t seed, std::uint64_t stream);

/// One find_steady_state per cell; fresh_start and seed_vacuum start every
/// cell from vacuum, seed_excited from excited_seed. Divergent cells are
/// flagged, not fatal.
SweepGrid frequency_power_map(const LatticeParams& params, const std::vector<double>& freqs,
                              const std::vector<double>& powers, Protocol protocol,
                              const SweepOptions& options);

/// Sequential sweep at one frequency: step k seeds step k+1. `powers` must be
/// strictly increasing for up and strictly decreasing for down. Results are
/// returned in the order of `powers`.
std::vector<CellSummary> power_sweep(const LatticeParams& params, double freq,
                                     const std::vector<double>& powers, Direction direction,
                                     const SweepOptions& options);

/// Up and down power sweeps at every frequency over increasing `powers`.
HysteresisMap hysteresis_map(const LatticeParams& params, const std::vector<double>& freqs,
                             const std::vector<double>& powers, const SweepOptions& options);

/// Vacuum-seeded versus excited-seeded maps.
HysteresisMap two_seed_map(const LatticeParams& params, const std::vector<double>& freqs,
                           const std::vector<double>& powers, const SweepOptions& options);

/// up: approach xi from above (overshoot, then settle) for the high-power state;
/// down: ramp up from zero for the low-power state.
PulseResult pulse_initialized_point(const LatticeParams& params, double freq, double xi,
                                    Pulse pulse, const SweepOptions& options);

/// Fills transmission_db from alpha amplitudes using the lowest-power row as
/// reference.
void normalize_transmission(SweepGrid& grid, TransmissionMode mode);

namespace serial {

SweepGrid frequency_power_map(const LatticeParams& params, const std::vector<double>& freqs,
                              const std::vector<double>& powers, Protocol protocol,
                              const SweepOptions& options);

HysteresisMap hysteresis_map(const LatticeParams& params, const std::vector<double>& freqs,
                             const std::vector<double>& powers, const SweepOptions& options);

}  // namespace serial

}  // namespace cqed
