// cqed: command-line driver for maps, sweeps, pulses, eigenmodes, synthetic
// telegraph traces, ADR extraction and plotting.
//
// Exit codes: 0 ok, 1 usage, 2 configuration or input file, 3 numeric failure.

#include <omp.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "cqed/io.hpp"
#include "cqed/plot.hpp"

namespace fs = std::filesystem;
using namespace cqed;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  int jobs{0};
  std::optional<std::uint64_t> seed;
};

struct Run {
  io::RunConfig config;
  fs::path out;
  std::vector<fs::path> artifacts;
  std::vector<std::string> command;
  std::uint64_t seed{0};
};

fs::path output_dir(const Common& c) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv("CQED_OUTPUT_DIR"); env && *env) return env;
  return "cqed_out";
}

Run prepare(const Common& c, const std::vector<std::string>& argv) {
  Run r;
  auto overrides = c.overrides;
  if (c.seed) {
    overrides.push_back("sweep.seed=" + std::to_string(*c.seed));
    overrides.push_back("analysis.trace_seed=" + std::to_string(*c.seed));
  }
  r.config = c.config.empty() ? io::parse_config("", overrides) : io::load_config(c.config, overrides);
  r.out = output_dir(c);
  fs::create_directories(r.out);
  r.command = argv;
  r.seed = r.config.sweep.seed;
  if (c.jobs > 0) omp_set_num_threads(c.jobs);
  const fs::path resolved = r.out / "config.ini";
  std::ofstream(resolved) << io::serialize_config(r.config);
  r.artifacts.push_back(resolved);
  return r;
}

void finish(const Run& r) {
  io::Manifest m;
  m.config_hash = io::config_hash(r.config);
  m.seed = r.seed;
  m.command = r.command;
  m.artifacts = r.artifacts;
  const auto path = io::write_manifest(r.out, m);
  for (const auto& a : r.artifacts) std::cout << a.string() << "\n";
  std::cout << path.string() << "\n";
}

void add_common(CLI::App* app, Common& c, bool needs_config = true) {
  auto* opt = app->add_option("-c,--config", c.config, "run configuration (INI)");
  if (needs_config) opt->required();
  app->add_option("-s,--set", c.overrides, "override a config key: section.key=value (repeatable)");
  app->add_option("-o,--out", c.out, "output directory (default: $CQED_OUTPUT_DIR or ./cqed_out)");
  app->add_option("-j,--jobs", c.jobs, "worker threads for independent cells")->check(CLI::NonNegativeNumber);
  app->add_option("--seed", c.seed, "seed for every stochastic step");
}

Protocol parse_map_protocol(const std::string& s) {
  const Protocol p = protocol_from_string(s);
  if (p == Protocol::sweep_up || p == Protocol::sweep_down)
    throw ConfigError("map protocol must be fresh_start, seed_vacuum or seed_excited; use `hysteresis` for sweeps");
  return p;
}

double pick_frequency(const io::RunConfig& c, std::optional<double> freq_hz, std::optional<int> index) {
  if (freq_hz) return kTwoPi * *freq_hz;
  const auto freqs = c.axes.freqs();
  const int k = index.value_or(0);
  if (k < 0 || k >= static_cast<int>(freqs.size())) throw ConfigError("frequency index out of range");
  return freqs[static_cast<std::size_t>(k)];
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"cavity-qubit chain mean-field simulator and switching-rate analysis"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "cqed 1.0");

  Common common;

  auto* validate_cmd = app.add_subcommand("validate-config", "check a configuration and print its digest");
  add_common(validate_cmd, common);

  std::string protocol_name;
  auto* map_cmd = app.add_subcommand("map", "frequency x power transmission map");
  add_common(map_cmd, common);
  map_cmd->add_option("--protocol", protocol_name, "fresh_start | seed_vacuum | seed_excited");

  std::optional<double> freq_hz;
  std::optional<int> freq_index;
  std::string direction = "up";
  auto* sweep_cmd = app.add_subcommand("sweep", "power sweep with state continuation at one frequency");
  add_common(sweep_cmd, common);
  sweep_cmd->add_option("--freq-hz", freq_hz, "drive frequency [Hz]");
  sweep_cmd->add_option("--freq-index", freq_index, "index into the configured frequency axis");
  sweep_cmd->add_option("--direction", direction, "up | down")->check(CLI::IsMember({"up", "down"}));

  auto* hyst_cmd = app.add_subcommand("hysteresis", "up and down sweeps at every frequency");
  add_common(hyst_cmd, common);

  auto* two_seed_cmd = app.add_subcommand("two-seed", "vacuum-seeded versus excited-seeded maps");
  add_common(two_seed_cmd, common);

  double xi = 0.0;
  std::string pulse_name = "up";
  bool dump_trajectory = false;
  double sample_dt = 0.0;
  auto* pulse_cmd = app.add_subcommand("pulse", "pulse-initialized steady state at one drive point");
  add_common(pulse_cmd, common);
  pulse_cmd->add_option("--freq-hz", freq_hz, "drive frequency [Hz]");
  pulse_cmd->add_option("--freq-index", freq_index, "index into the configured frequency axis");
  pulse_cmd->add_option("--xi", xi, "hold drive amplitude |eps| [rad/s]")->required();
  pulse_cmd->add_option("--pulse", pulse_name, "up (from above) | down (from zero)")
      ->check(CLI::IsMember({"up", "down"}));
  pulse_cmd->add_flag("--dump-trajectory", dump_trajectory, "also write alpha_out(t) for the whole run");
  pulse_cmd->add_option("--sample-dt", sample_dt, "trajectory sample spacing [s] (default 1/(20 kappa))");

  auto* eig_cmd = app.add_subcommand("eigenmodes", "chain normal-mode frequencies");
  add_common(eig_cmd, common, false);

  auto* gen_cmd = app.add_subcommand("telegraph-gen", "synthetic homodyne telegraph trace bundle");
  add_common(gen_cmd, common, false);

  std::vector<std::string> trace_files;
  auto* adr_cmd = app.add_subcommand("adr", "switching rates and ADR from a trace bundle");
  add_common(adr_cmd, common, false);
  adr_cmd->add_option("traces", trace_files, "trace files (cqed-trace)")->required()->check(CLI::ExistingFile);

  std::string plot_input, plot_output, plot_channel = "phase", adr_report;
  std::optional<double> threshold;
  double max_duration = 0.0;
  auto* plot_cmd = app.add_subcommand("plot", "render a map, difference map or trace as SVG");
  plot_cmd->add_option("input", plot_input, "artifact file")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("-o,--output", plot_output, "SVG path (default: input with .svg)");
  plot_cmd->add_option("--threshold", threshold, "threshold overlay for traces");
  plot_cmd->add_option("--adr-report", adr_report, "take channel and threshold from an ADR report")
      ->check(CLI::ExistingFile);
  plot_cmd->add_option("--channel", plot_channel, "amplitude | phase")
      ->check(CLI::IsMember({"amplitude", "phase"}));
  plot_cmd->add_option("--max-duration", max_duration, "plot only the first seconds of a trace");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*validate_cmd) {
      const auto c = io::load_config(common.config, common.overrides);
      std::cout << "ok " << io::config_hash(c) << "\n";
      return 0;
    }

    if (*plot_cmd) {
      plot::RenderOptions o;
      o.threshold = threshold;
      o.channel = plot_channel;
      o.max_duration = max_duration;
      if (!adr_report.empty()) o.adr_report = fs::path(adr_report);
      fs::path out = plot_output.empty() ? fs::path(plot_input).replace_extension(".svg") : fs::path(plot_output);
      plot::render_artifact(plot_input, out, o);
      std::cout << out.string() << "\n";
      return 0;
    }

    Run run = prepare(common, args);
    const auto& cfg = run.config;
    const std::string hash = io::config_hash(cfg);

    if (*map_cmd) {
      const Protocol p = protocol_name.empty() ? cfg.protocol : parse_map_protocol(protocol_name);
      if (p == Protocol::sweep_up || p == Protocol::sweep_down)
        throw ConfigError("drive.protocol is a sweep protocol; use `hysteresis` or `sweep`");
      const auto grid = frequency_power_map(cfg.lattice, cfg.axes.freqs(), cfg.axes.powers(), p, cfg.sweep);
      run.artifacts.push_back(run.out / "map.tsv");
      io::write_map(run.artifacts.back(), grid, hash);
    } else if (*sweep_cmd) {
      const double w = pick_frequency(cfg, freq_hz, freq_index);
      auto powers = cfg.axes.powers();
      const bool up = direction == "up";
      SweepGrid grid;
      grid.freqs = {w};
      grid.powers = powers;
      grid.protocol = up ? Protocol::sweep_up : Protocol::sweep_down;
      if (up) {
        grid.cells = power_sweep(cfg.lattice, w, powers, Direction::up, cfg.sweep);
      } else {
        std::vector<double> rev(powers.rbegin(), powers.rend());
        auto line = power_sweep(cfg.lattice, w, rev, Direction::down, cfg.sweep);
        grid.cells.assign(line.rbegin(), line.rend());
      }
      normalize_transmission(grid, cfg.sweep.transmission_mode);
      run.artifacts.push_back(run.out / (std::string("sweep_") + direction + ".tsv"));
      io::write_map(run.artifacts.back(), grid, hash);
    } else if (*hyst_cmd || *two_seed_cmd) {
      const bool hyst = hyst_cmd->parsed();
      const auto m = hyst ? hysteresis_map(cfg.lattice, cfg.axes.freqs(), cfg.axes.powers(), cfg.sweep)
                          : two_seed_map(cfg.lattice, cfg.axes.freqs(), cfg.axes.powers(), cfg.sweep);
      const std::string stem = hyst ? "hysteresis" : "two_seed";
      run.artifacts.push_back(run.out / (stem + (hyst ? "_up.tsv" : "_vacuum.tsv")));
      io::write_map(run.artifacts.back(), m.grid_up, hash);
      run.artifacts.push_back(run.out / (stem + (hyst ? "_down.tsv" : "_excited.tsv")));
      io::write_map(run.artifacts.back(), m.grid_down, hash);
      run.artifacts.push_back(run.out / (stem + "_difference.tsv"));
      io::write_difference(run.artifacts.back(), m, hash);
      std::cout << "cells with |difference| > " << m.threshold_db << " dB: " << m.hysteretic_cells().size() << "\n";
    } else if (*pulse_cmd) {
      const double w = pick_frequency(cfg, freq_hz, freq_index);
      const Pulse pulse = pulse_name == "up" ? Pulse::up : Pulse::down;
      const auto r = pulse_initialized_point(cfg.lattice, w, xi, pulse, cfg.sweep);
      run.artifacts.push_back(run.out / ("pulse_" + pulse_name + ".tsv"));
      io::write_pulse_result(run.artifacts.back(), r, w, xi, pulse, hash);
      if (dump_trajectory) {
        const auto& ic = cfg.sweep.integrator;
        DriveSpec drive{w, xi, pulse == Pulse::up
                                   ? Envelope::up_pulse(cfg.sweep.pulse_ramp_time, cfg.sweep.pulse_overshoot)
                                   : Envelope::down_pulse(cfg.sweep.pulse_ramp_time)};
        const double t_end = drive.envelope.duration + ic.t_transient + ic.t_average;
        const double dt = sample_dt > 0.0 ? sample_dt : 1.0 / (20.0 * cfg.lattice.kappa);
        const auto tr = integrate(MeanFieldState::vacuum(cfg.lattice.n_sites), cfg.lattice, drive, ic, t_end, dt);
        run.artifacts.push_back(run.out / ("trajectory_" + pulse_name + ".tsv"));
        io::write_trajectory(run.artifacts.back(), tr, cfg.lattice.output_site);
      }
    } else if (*eig_cmd) {
      run.artifacts.push_back(run.out / "eigenmodes.tsv");
      io::write_eigenmodes(run.artifacts.back(), cfg.lattice);
    } else if (*gen_cmd) {
      run.seed = cfg.telegraph.trace.seed;
      const auto traces = simulate_bundle(cfg.telegraph.trace, cfg.telegraph.n_traces);
      for (std::size_t k = 0; k < traces.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "trace_%03zu.bin", k);
        run.artifacts.push_back(run.out / name);
        io::write_trace(run.artifacts.back(), traces[k]);
      }
    } else if (*adr_cmd) {
      run.seed = cfg.telegraph.trace.seed;
      std::vector<TelegraphTrace> traces;
      for (const auto& f : trace_files) traces.push_back(io::read_trace(f));
      const auto report = estimate_adr(traces, cfg.adr);
      run.artifacts.push_back(run.out / "adr.tsv");
      io::write_adr_report(run.artifacts.back(), report);
      if (report.estimate)
        std::cout << "adr " << report.estimate->adr << " s^-1 (gamma_12 " << report.estimate->rates.gamma_12
                  << ", gamma_21 " << report.estimate->rates.gamma_21 << ", channel " << to_string(report.chosen)
                  << ")\n";
      else
        std::cout << "monostable: no switching detected\n";
    }
    finish(run);
    return 0;
  } catch (const NumericError& e) {
    std::cerr << "cqed: numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const ConfigError& e) {
    std::cerr << "cqed: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const io::FormatError& e) {
    std::cerr << "cqed: input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "cqed: invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "cqed: error: " << e.what() << "\n";
    return kExitNumeric;
  }
}
