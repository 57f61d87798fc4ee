#include "cqed/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace cqed {

const char* to_string(Protocol p) {
  switch (p) {
    case Protocol::fresh_start: return "fresh_start";
    case Protocol::sweep_up: return "sweep_up";
    case Protocol::sweep_down: return "sweep_down";
    case Protocol::seed_vacuum: return "seed_vacuum";
    case Protocol::seed_excited: return "seed_excited";
  }
  return "unknown";
}

Protocol protocol_from_string(const std::string& s) {
  for (auto p : {Protocol::fresh_start, Protocol::sweep_up, Protocol::sweep_down,
                 Protocol::seed_vacuum, Protocol::seed_excited})
    if (s == to_string(p)) return p;
  throw ConfigError("unknown protocol '" + s + "'");
}

SweepOptions SweepOptions::defaults_for(const LatticeParams& params) {
  SweepOptions o;
  o.integrator = IntegratorConfig::defaults_for(params);
  o.pulse_ramp_time = 100.0 / params.kappa;
  return o;
}

std::vector<std::size_t> HysteresisMap::hysteretic_cells() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < difference.size(); ++i)
    if (std::abs(difference[i]) > threshold_db) out.push_back(i);
  return out;
}

std::vector<double> log_spaced(double lo, double hi, int count) {
  if (count < 1 || !(lo > 0.0) || !(hi > 0.0)) throw std::invalid_argument("bad log axis");
  std::vector<double> v(static_cast<std::size_t>(count));
  if (count == 1) {
    v[0] = lo;
    return v;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i) v[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (count - 1));
  v.front() = lo;
  v.back() = hi;
  return v;
}

std::vector<double> lin_spaced(double lo, double hi, int count) {
  if (count < 1) throw std::invalid_argument("bad linear axis");
  std::vector<double> v(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    v[static_cast<std::size_t>(i)] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
  return v;
}

MeanFieldState excited_seed(const LatticeParams& params, const DriveSpec& drive, double factor,
                            std::uint64_t seed, std::uint64_t stream) {
  LatticeParams linear = params;
  linear.u_kerr = 0.0;
  DriveSpec constant = drive;
  constant.envelope = Envelope::constant();
  const auto response = linear_steady_state(linear, constant);
  double amp = 0.0;
  for (const auto& a : response.alpha) amp = std::max(amp, std::abs(a));
  amp *= factor;

  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  MeanFieldState s(params.n_sites);
  for (auto& a : s.alpha) a = std::polar(amp, phase(rng));
  return s;
}

namespace {

struct CellOutcome {
  CellSummary summary;
  MeanFieldState final_state;
};

CellOutcome run_cell(const LatticeParams& params, const DriveSpec& drive, const MeanFieldState& init,
                     const SweepOptions& options) {
  CellOutcome out;
  try {
    auto r = find_steady_state(params, drive, init, options.integrator);
    out.summary.classification = r.classification;
    out.summary.alpha_out_mean = r.alpha_out_mean;
    out.summary.alpha_abs_mean = r.alpha_abs_mean;
    if (r.alpha_abs_mean > options.integrator.abs_tol) out.summary.g2 = g2_zero(r.tail_abs, options.g2_formula);
    out.final_state = std::move(r.final_state);
  } catch (const DivergenceError&) {
    out.summary.diverged = true;
    out.summary.classification = Classification::non_stationary;
  }
  return out;
}

double cell_amplitude(const CellSummary& c, TransmissionMode mode) {
  if (mode == TransmissionMode::magnitude && c.classification == Classification::non_stationary)
    return c.alpha_abs_mean;
  return std::abs(c.alpha_out_mean);
}

void check_axes(const std::vector<double>& freqs, const std::vector<double>& powers) {
  if (freqs.empty() || powers.empty()) throw std::invalid_argument("sweep axes must be nonempty");
  bool inc = true, dec = true;
  for (std::size_t i = 1; i < powers.size(); ++i) {
    inc = inc && powers[i] > powers[i - 1];
    dec = dec && powers[i] < powers[i - 1];
  }
  if (!inc && !dec) throw std::invalid_argument("powers must be strictly monotone");
  for (double p : powers)
    if (!(p >= 0.0)) throw std::invalid_argument("powers must be >= 0");
}

MeanFieldState cell_seed(const LatticeParams& params, const DriveSpec& drive, Protocol protocol,
                         const SweepOptions& options, std::size_t cell) {
  if (protocol == Protocol::seed_excited)
    return excited_seed(params, drive, options.excited_seed_factor, options.seed, cell);
  return MeanFieldState::vacuum(params.n_sites);
}

CellSummary map_cell(const LatticeParams& params, const std::vector<double>& freqs,
                     const std::vector<double>& powers, Protocol protocol,
                     const SweepOptions& options, std::size_t cell) {
  const std::size_t f = cell / powers.size(), p = cell % powers.size();
  DriveSpec drive{freqs[f], powers[p], Envelope::constant()};
  return run_cell(params, drive, cell_seed(params, drive, protocol, options, cell), options).summary;
}

SweepGrid empty_grid(const std::vector<double>& freqs, const std::vector<double>& powers,
                     Protocol protocol) {
  SweepGrid g;
  g.freqs = freqs;
  g.powers = powers;
  g.protocol = protocol;
  g.cells.resize(freqs.size() * powers.size());
  return g;
}

void validate_map_inputs(const LatticeParams& params, const std::vector<double>& freqs,
                         const std::vector<double>& powers, Protocol protocol,
                         const SweepOptions& options) {
  validate(params);
  validate(options.integrator);
  check_axes(freqs, powers);
  if (protocol == Protocol::sweep_up || protocol == Protocol::sweep_down)
    throw std::invalid_argument("frequency_power_map runs independent cells; use hysteresis_map");
}

std::vector<double> increasing(const std::vector<double>& powers) {
  for (std::size_t i = 1; i < powers.size(); ++i)
    if (!(powers[i] > powers[i - 1])) throw std::invalid_argument("powers must be strictly increasing");
  return powers;
}

HysteresisMap combine(SweepGrid up, SweepGrid down, const SweepOptions& options) {
  HysteresisMap h;
  h.threshold_db = options.hysteresis_threshold_db;
  normalize_transmission(up, options.transmission_mode);
  // Common reference so the difference is a ratio of amplitudes.
  const double ref = up.reference_gain;
  for (std::size_t f = 0; f < down.freqs.size(); ++f)
    for (std::size_t p = 0; p < down.powers.size(); ++p) {
      auto& c = down.at(f, p);
      c.transmission_db = amplitude_db(cell_amplitude(c, options.transmission_mode),
                                       ref * down.powers[p]);
    }
  down.reference_gain = ref;
  h.difference.resize(up.cells.size());
  for (std::size_t i = 0; i < up.cells.size(); ++i)
    h.difference[i] = up.cells[i].transmission_db - down.cells[i].transmission_db;
  h.grid_up = std::move(up);
  h.grid_down = std::move(down);
  return h;
}

std::vector<CellSummary> sweep_line(const LatticeParams& params, double freq,
                                    const std::vector<double>& powers, Direction direction,
                                    const SweepOptions& options, std::uint64_t stream) {
  std::vector<CellSummary> out(powers.size());
  MeanFieldState state;
  bool broken = false;
  for (std::size_t k = 0; k < powers.size(); ++k) {
    DriveSpec drive{freq, powers[k], Envelope::constant()};
    if (broken) {
      out[k].diverged = true;
      out[k].classification = Classification::non_stationary;
      continue;
    }
    if (k == 0)
      state = direction == Direction::up
                  ? MeanFieldState::vacuum(params.n_sites)
                  : excited_seed(params, drive, options.excited_seed_factor, options.seed, stream);
    auto cell = run_cell(params, drive, state, options);
    out[k] = cell.summary;
    if (cell.summary.diverged) {
      broken = true;
      continue;
    }
    state = std::move(cell.final_state);
  }
  return out;
}

HysteresisMap hysteresis_impl(const LatticeParams& params, const std::vector<double>& freqs,
                              const std::vector<double>& powers, const SweepOptions& options,
                              bool parallel) {
  validate(params);
  validate(options.integrator);
  check_axes(freqs, powers);
  increasing(powers);
  SweepGrid up = empty_grid(freqs, powers, Protocol::sweep_up);
  SweepGrid down = empty_grid(freqs, powers, Protocol::sweep_down);
  const std::vector<double> reversed(powers.rbegin(), powers.rend());
  const long nf = static_cast<long>(freqs.size());
  const std::size_t np = powers.size();
  // One task per (frequency, direction); each task is sequential along power.
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long task = 0; task < 2 * nf; ++task) {
    const std::size_t f = static_cast<std::size_t>(task / 2);
    if (task % 2 == 0) {
      auto line = sweep_line(params, freqs[f], powers, Direction::up, options, f);
      for (std::size_t p = 0; p < np; ++p) up.at(f, p) = line[p];
    } else {
      auto line = sweep_line(params, freqs[f], reversed, Direction::down, options, f);
      for (std::size_t p = 0; p < np; ++p) down.at(f, np - 1 - p) = line[p];
    }
  }
  return combine(std::move(up), std::move(down), options);
}

}  // namespace

void normalize_transmission(SweepGrid& grid, TransmissionMode mode) {
  const std::size_t lowest = static_cast<std::size_t>(
      std::min_element(grid.powers.begin(), grid.powers.end()) - grid.powers.begin());
  double ref = 0.0;
  for (std::size_t f = 0; f < grid.freqs.size(); ++f) {
    const auto& c = grid.at(f, lowest);
    if (c.diverged || !(grid.powers[lowest] > 0.0)) continue;
    ref = std::max(ref, cell_amplitude(c, mode) / grid.powers[lowest]);
  }
  if (!(ref > 0.0)) ref = 1.0;
  grid.reference_gain = ref;
  for (std::size_t f = 0; f < grid.freqs.size(); ++f)
    for (std::size_t p = 0; p < grid.powers.size(); ++p) {
      auto& c = grid.at(f, p);
      const double reference = ref * grid.powers[p];
      c.transmission_db = reference > 0.0 ? amplitude_db(cell_amplitude(c, mode), reference)
                                          : kTransmissionFloorDb;
    }
}

SweepGrid frequency_power_map(const LatticeParams& params, const std::vector<double>& freqs,
                              const std::vector<double>& powers, Protocol protocol,
                              const SweepOptions& options) {
  validate_map_inputs(params, freqs, powers, protocol, options);
  SweepGrid grid = empty_grid(freqs, powers, protocol);
  const long n = static_cast<long>(grid.cells.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i)
    grid.cells[static_cast<std::size_t>(i)] =
        map_cell(params, freqs, powers, protocol, options, static_cast<std::size_t>(i));
  normalize_transmission(grid, options.transmission_mode);
  return grid;
}

std::vector<CellSummary> power_sweep(const LatticeParams& params, double freq,
                                     const std::vector<double>& powers, Direction direction,
                                     const SweepOptions& options) {
  validate(params);
  validate(options.integrator);
  if (powers.empty()) throw std::invalid_argument("power axis must be nonempty");
  for (std::size_t i = 1; i < powers.size(); ++i) {
    const bool ok = direction == Direction::up ? powers[i] > powers[i - 1] : powers[i] < powers[i - 1];
    if (!ok) throw std::invalid_argument("powers must be strictly monotone in the sweep direction");
  }
  return sweep_line(params, freq, powers, direction, options, 0);
}

HysteresisMap hysteresis_map(const LatticeParams& params, const std::vector<double>& freqs,
                             const std::vector<double>& powers, const SweepOptions& options) {
  return hysteresis_impl(params, freqs, powers, options, true);
}

HysteresisMap two_seed_map(const LatticeParams& params, const std::vector<double>& freqs,
                           const std::vector<double>& powers, const SweepOptions& options) {
  auto vac = frequency_power_map(params, freqs, powers, Protocol::seed_vacuum, options);
  auto exc = frequency_power_map(params, freqs, powers, Protocol::seed_excited, options);
  return combine(std::move(vac), std::move(exc), options);
}

PulseResult pulse_initialized_point(const LatticeParams& params, double freq, double xi,
                                    Pulse pulse, const SweepOptions& options) {
  if (!(xi >= 0.0)) throw std::invalid_argument("pulse hold amplitude must be >= 0");
  DriveSpec drive{freq, xi, pulse == Pulse::up
                                ? Envelope::up_pulse(options.pulse_ramp_time, options.pulse_overshoot)
                                : Envelope::down_pulse(options.pulse_ramp_time)};
  PulseResult r;
  r.state = find_steady_state(params, drive, MeanFieldState::vacuum(params.n_sites), options.integrator);
  if (r.state.alpha_abs_mean > options.integrator.abs_tol) r.g2 = g2_zero(r.state.tail_abs, options.g2_formula);
  return r;
}

namespace serial {

SweepGrid frequency_power_map(const LatticeParams& params, const std::vector<double>& freqs,
                              const std::vector<double>& powers, Protocol protocol,
                              const SweepOptions& options) {
  validate_map_inputs(params, freqs, powers, protocol, options);
  SweepGrid grid = empty_grid(freqs, powers, protocol);
  for (std::size_t i = 0; i < grid.cells.size(); ++i)
    grid.cells[i] = map_cell(params, freqs, powers, protocol, options, i);
  normalize_transmission(grid, options.transmission_mode);
  return grid;
}

HysteresisMap hysteresis_map(const LatticeParams& params, const std::vector<double>& freqs,
                             const std::vector<double>& powers, const SweepOptions& options) {
  return hysteresis_impl(params, freqs, powers, options, false);
}

}  // namespace serial

}  // namespace cqed
