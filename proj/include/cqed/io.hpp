// io.hpp: run configuration (INI), versioned columnar artifacts, binary
// trace files, SHA-256 digests and the run manifest.
//
// Config keys holding a frequency or rate take either the angular value
// (`kappa = 1.005e7`, rad/s) or the ordinary frequency with an `_hz` suffix
// (`kappa_hz = 1.6e6`, multiplied by 2 pi). Unknown keys are errors.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cqed/sweep.hpp"
#include "cqed/telegraph.hpp"

namespace cqed::io {

inline constexpr int kFormatVersion = 1;

struct AxesSpec {
  double freq_lo{0.0};  ///< rad/s
  double freq_hi{0.0};
  int n_freqs{1};
  double power_lo{0.0};  ///< |eps|, rad/s
  double power_hi{0.0};
  int n_powers{1};
  bool log_powers{true};

  std::vector<double> freqs() const;
  std::vector<double> powers() const;
};

struct TelegraphRecipe {
  TelegraphConfig trace{};
  int n_traces{7};
  double snr{5.0};
};

struct RunConfig {
  LatticeParams lattice{};
  AxesSpec axes{};
  Protocol protocol{Protocol::fresh_start};
  SweepOptions sweep{};
  TelegraphRecipe telegraph{};
  AdrOptions adr{};
};

/// Paper-default lattice, a map window around the band centre, integrator
/// defaults for that lattice, and a 50/200 Hz telegraph recipe.
RunConfig default_run_config();

/// Throws ConfigError on syntax errors, unknown keys, or invariant violations.
/// `overrides` are "section.key=value" strings applied on top of the text;
/// an override replaces the key and its _hz twin.
RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
/// Canonical text; parse_config(serialize_config(c)) reproduces c exactly.
std::string serialize_config(const RunConfig& config);
void validate(const RunConfig& config);

std::string sha256_hex(std::string_view data);
std::string file_sha256(const std::filesystem::path& path);
/// Digest of the canonical serialization.
std::string config_hash(const RunConfig& config);

/// Thrown for unreadable or malformed artifact files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_map(const std::filesystem::path& path, const SweepGrid& grid, const std::string& hash);
SweepGrid read_map(const std::filesystem::path& path);

struct DifferenceMap {
  std::vector<double> freqs;
  std::vector<double> powers;
  std::vector<double> values;  ///< freq-major, dB
  double threshold_db{3.0};
};

void write_difference(const std::filesystem::path& path, const HysteresisMap& map,
                      const std::string& hash);
DifferenceMap read_difference(const std::filesystem::path& path);

/// Binary: text header lines ending with "# end-header", then n float64 I,
/// n float64 Q and n uint8 labels (0 when unknown), little endian.
void write_trace(const std::filesystem::path& path, const TelegraphTrace& trace);
TelegraphTrace read_trace(const std::filesystem::path& path);

void write_eigenmodes(const std::filesystem::path& path, const LatticeParams& params);

void write_adr_report(const std::filesystem::path& path, const AdrReport& report);
/// Threshold and channel stored in an ADR report (for plot overlays).
struct AdrSummary {
  bool monostable{true};
  Channel channel{Channel::phase};
  double threshold{0.0};
  double adr{0.0};
};
AdrSummary read_adr_summary(const std::filesystem::path& path);

void write_trajectory(const std::filesystem::path& path, const Trajectory& trajectory,
                      int output_site);

void write_pulse_result(const std::filesystem::path& path, const PulseResult& result,
                        double freq, double xi, Pulse pulse, const std::string& hash);

/// Artifact kind from the first header line ("cqed-map", "cqed-diff", ...).
std::string artifact_kind(const std::filesystem::path& path);

struct Manifest {
  std::string config_hash;
  std::uint64_t seed{0};
  std::vector<std::string> command;
  std::vector<std::filesystem::path> artifacts;
};

/// Writes manifest.json into `dir` listing every artifact with its SHA-256.
std::filesystem::path write_manifest(const std::filesystem::path& dir, const Manifest& manifest);

}  // namespace cqed::io
