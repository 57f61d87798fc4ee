// plot.hpp: standalone SVG rendering of stored artifacts: frequency x power
// heatmaps with a colorbar, and telegraph time traces with a threshold line.
// Rendering only; no physics is computed here.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cqed::plot {

enum class Colormap {
  sequential,  ///< dark (low) to bright (high)
  diverging,   ///< blue - white - red, white at 0, symmetric limits
};

struct HeatmapData {
  std::vector<double> x;       ///< column coordinates (e.g. GHz)
  std::vector<double> y;       ///< row coordinates (e.g. drive amplitude)
  std::vector<double> values;  ///< x-major: values[ix * y.size() + iy]
  std::string title;
  std::string x_label;
  std::string y_label;
  std::string value_label;
  bool log_y{false};
  Colormap colormap{Colormap::sequential};
};

struct LineData {
  std::vector<double> x;
  std::vector<double> y;
  std::optional<double> threshold{};
  std::string title;
  std::string x_label;
  std::string y_label;
};

/// One <rect class="cell"> per grid value; NaN cells are drawn grey.
std::string heatmap_svg(const HeatmapData& data);

/// Polyline of the samples (min/max per pixel column when there are more
/// samples than pixels) plus an optional dashed horizontal threshold.
std::string line_svg(const LineData& data);

/// RGB of a value in [0, 1] (sequential) or [-1, 1] (diverging), as "#rrggbb".
std::string color_of(double normalized, Colormap map);

struct RenderOptions {
  std::optional<double> threshold{};  ///< trace overlay
  std::optional<std::filesystem::path> adr_report{};  ///< threshold/channel source for traces
  std::string channel{"phase"};       ///< trace channel when no report is given
  double max_duration{0.0};           ///< > 0: only the first seconds of a trace
};

/// Reads an artifact (map, difference map, or trace) and writes an SVG.
/// Throws io::FormatError for malformed input.
void render_artifact(const std::filesystem::path& input, const std::filesystem::path& output,
                     const RenderOptions& options = {});

}  // namespace cqed::plot
