#include "cqed/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cqed/io.hpp"

namespace cqed::plot {

namespace {

constexpr double kWidth = 820, kHeight = 520;
constexpr double kLeft = 90, kRight = 130, kTop = 40, kBottom = 64;
constexpr double kPlotW = kWidth - kLeft - kRight;
constexpr double kPlotH = kHeight - kTop - kBottom;

std::string num(double x, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

std::string px(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

struct Rgb {
  double r, g, b;
};

Rgb lerp(const Rgb& a, const Rgb& b, double t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

Rgb ramp(const Rgb* stops, int n, double t) {
  t = std::clamp(t, 0.0, 1.0) * (n - 1);
  const int k = std::min(static_cast<int>(t), n - 2);
  return lerp(stops[k], stops[k + 1], t - k);
}

std::string hex(const Rgb& c) {
  char buf[8];
  auto ch = [](double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255)); };
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", ch(c.r), ch(c.g), ch(c.b));
  return buf;
}

void open_svg(std::ostringstream& out, const std::string& title) {
  out << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << kWidth << R"(" height=")" << kHeight
      << R"(" viewBox="0 0 )" << kWidth << ' ' << kHeight << R"(" font-family="sans-serif" font-size="12">)"
      << "\n";
  out << R"(<rect x="0" y="0" width=")" << kWidth << R"(" height=")" << kHeight << R"(" fill="white"/>)" << "\n";
  out << R"(<text x=")" << px(kLeft + kPlotW / 2) << R"(" y="24" text-anchor="middle" font-size="15">)"
      << escape(title) << "</text>\n";
}

void axis_labels(std::ostringstream& out, const std::string& xl, const std::string& yl) {
  out << R"(<text x=")" << px(kLeft + kPlotW / 2) << R"(" y=")" << px(kHeight - 16)
      << R"(" text-anchor="middle">)" << escape(xl) << "</text>\n";
  out << R"(<text transform="translate(22 )" << px(kTop + kPlotH / 2)
      << R"x() rotate(-90)" text-anchor="middle">)x" << escape(yl) << "</text>\n";
  out << R"(<rect x=")" << kLeft << R"(" y=")" << kTop << R"(" width=")" << kPlotW << R"(" height=")" << kPlotH
      << R"(" fill="none" stroke="black"/>)" << "\n";
}

void tick_x(std::ostringstream& out, double x, const std::string& label) {
  out << R"(<line x1=")" << px(x) << R"(" y1=")" << px(kTop + kPlotH) << R"(" x2=")" << px(x) << R"(" y2=")"
      << px(kTop + kPlotH + 5) << R"(" stroke="black"/>)";
  out << R"(<text x=")" << px(x) << R"(" y=")" << px(kTop + kPlotH + 19) << R"(" text-anchor="middle">)"
      << label << "</text>\n";
}

void tick_y(std::ostringstream& out, double y, const std::string& label) {
  out << R"(<line x1=")" << px(kLeft - 5) << R"(" y1=")" << px(y) << R"(" x2=")" << px(kLeft) << R"(" y2=")"
      << px(y) << R"(" stroke="black"/>)";
  out << R"(<text x=")" << px(kLeft - 8) << R"(" y=")" << px(y + 4) << R"(" text-anchor="end">)" << label
      << "</text>\n";
}

std::vector<std::size_t> tick_indices(std::size_t n, std::size_t max_ticks) {
  std::vector<std::size_t> out;
  if (n == 0) return out;
  const std::size_t step = std::max<std::size_t>(1, (n + max_ticks - 1) / max_ticks);
  for (std::size_t i = 0; i < n; i += step) out.push_back(i);
  if (out.back() != n - 1 && n > 1) out.push_back(n - 1);
  return out;
}

}  // namespace

std::string color_of(double v, Colormap map) {
  static const Rgb viridis[] = {{0.267, 0.005, 0.329}, {0.229, 0.322, 0.546}, {0.128, 0.567, 0.551},
                                {0.369, 0.789, 0.383}, {0.993, 0.906, 0.144}};
  static const Rgb diverging[] = {{0.129, 0.400, 0.675}, {1.0, 1.0, 1.0}, {0.698, 0.094, 0.169}};
  if (map == Colormap::sequential) return hex(ramp(viridis, 5, v));
  return hex(ramp(diverging, 3, 0.5 * (v + 1.0)));
}

std::string heatmap_svg(const HeatmapData& d) {
  const std::size_t nx = d.x.size(), ny = d.y.size();
  if (nx == 0 || ny == 0 || d.values.size() != nx * ny) throw io::FormatError("heatmap: inconsistent grid");
  double lo = INFINITY, hi = -INFINITY;
  for (double v : d.values)
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  if (d.colormap == Colormap::diverging) {
    const double m = std::max(std::abs(lo), std::abs(hi));
    hi = m > 0.0 ? m : 1.0;
    lo = -hi;
  } else if (hi == lo) {
    hi = lo + 1.0;
  }
  auto normalized = [&](double v) {
    return d.colormap == Colormap::diverging ? v / hi : (v - lo) / (hi - lo);
  };

  std::ostringstream out;
  open_svg(out, d.title);
  const double cw = kPlotW / static_cast<double>(nx), ch = kPlotH / static_cast<double>(ny);
  for (std::size_t ix = 0; ix < nx; ++ix)
    for (std::size_t iy = 0; iy < ny; ++iy) {
      const double v = d.values[ix * ny + iy];
      const std::string fill = std::isfinite(v) ? color_of(normalized(v), d.colormap) : "#bdbdbd";
      out << R"(<rect class="cell" x=")" << px(kLeft + ix * cw) << R"(" y=")"
          << px(kTop + kPlotH - (iy + 1) * ch) << R"(" width=")" << px(cw + 0.01) << R"(" height=")"
          << px(ch + 0.01) << R"(" fill=")" << fill << R"("><title>)" << num(d.x[ix], 7) << ", "
          << num(d.y[iy]) << ": " << num(v) << "</title></rect>\n";
    }
  for (auto ix : tick_indices(nx, 8)) tick_x(out, kLeft + (ix + 0.5) * cw, num(d.x[ix], 5));
  for (auto iy : tick_indices(ny, 10)) tick_y(out, kTop + kPlotH - (iy + 0.5) * ch, num(d.y[iy], 3));
  axis_labels(out, d.x_label, d.y_label);

  // Colorbar.
  const double bx = kLeft + kPlotW + 24, bw = 18;
  const int steps = 64;
  for (int k = 0; k < steps; ++k) {
    const double t = (k + 0.5) / steps;
    const double v = lo + (hi - lo) * t;
    out << R"(<rect class="colorbar" x=")" << px(bx) << R"(" y=")" << px(kTop + kPlotH * (1.0 - (k + 1.0) / steps))
        << R"(" width=")" << bw << R"(" height=")" << px(kPlotH / steps + 0.5) << R"(" fill=")"
        << color_of(normalized(v), d.colormap) << R"("/>)" << "\n";
  }
  for (double t : {0.0, 0.5, 1.0})
    out << R"(<text x=")" << px(bx + bw + 4) << R"(" y=")" << px(kTop + kPlotH * (1.0 - t) + 4) << R"(">)"
        << num(lo + (hi - lo) * t) << "</text>\n";
  out << R"(<text transform="translate()" << px(bx + bw + 62) << ' ' << px(kTop + kPlotH / 2)
      << R"x() rotate(90)" text-anchor="middle">)x" << escape(d.value_label) << "</text>\n";
  out << "</svg>\n";
  return out.str();
}

std::string line_svg(const LineData& d) {
  const std::size_t n = d.x.size();
  if (n == 0 || d.y.size() != n) throw io::FormatError("line plot: inconsistent samples");
  const auto [xmn, xmx] = std::minmax_element(d.x.begin(), d.x.end());
  const auto [ymn, ymx] = std::minmax_element(d.y.begin(), d.y.end());
  double x0 = *xmn, x1 = *xmx, y0 = *ymn, y1 = *ymx;
  if (d.threshold) {
    y0 = std::min(y0, *d.threshold);
    y1 = std::max(y1, *d.threshold);
  }
  if (x1 == x0) x1 = x0 + 1.0;
  const double pad = y1 > y0 ? 0.05 * (y1 - y0) : 1.0;
  y0 -= pad;
  y1 += pad;
  auto sx = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * kPlotW; };
  auto sy = [&](double y) { return kTop + kPlotH - (y - y0) / (y1 - y0) * kPlotH; };

  std::ostringstream out;
  open_svg(out, d.title);
  out << R"(<polyline class="trace" fill="none" stroke="#1f4e9c" stroke-width="0.8" points=")";
  const auto columns = static_cast<std::size_t>(2 * kPlotW);
  if (n <= 2 * columns) {
    for (std::size_t k = 0; k < n; ++k) out << px(sx(d.x[k])) << ',' << px(sy(d.y[k])) << ' ';
  } else {
    // Keep the extremes of every pixel column, in sample order, so steps stay sharp.
    for (std::size_t c = 0; c < columns; ++c) {
      const std::size_t a = c * n / columns, b = (c + 1) * n / columns;
      std::size_t imin = a, imax = a;
      for (std::size_t k = a; k < b; ++k) {
        if (d.y[k] < d.y[imin]) imin = k;
        if (d.y[k] > d.y[imax]) imax = k;
      }
      for (std::size_t k : {std::min(imin, imax), std::max(imin, imax)})
        out << px(sx(d.x[k])) << ',' << px(sy(d.y[k])) << ' ';
    }
  }
  out << "\"/>\n";
  if (d.threshold)
    out << R"(<line class="threshold" x1=")" << px(kLeft) << R"(" y1=")" << px(sy(*d.threshold)) << R"(" x2=")"
        << px(kLeft + kPlotW) << R"(" y2=")" << px(sy(*d.threshold))
        << R"(" stroke="#d62728" stroke-width="1.5" stroke-dasharray="6 4"/>)" << "\n";
  for (int k = 0; k <= 5; ++k) {
    tick_x(out, kLeft + k * kPlotW / 5, num(x0 + (x1 - x0) * k / 5));
    tick_y(out, kTop + kPlotH - k * kPlotH / 5, num(y0 + (y1 - y0) * k / 5, 3));
  }
  axis_labels(out, d.x_label, d.y_label);
  out << "</svg>\n";
  return out.str();
}

void render_artifact(const std::filesystem::path& input, const std::filesystem::path& output,
                     const RenderOptions& options) {
  const std::string kind = io::artifact_kind(input);
  std::string svg;
  if (kind == "cqed-map" || kind == "cqed-diff") {
    HeatmapData h;
    std::vector<double> freqs;
    if (kind == "cqed-map") {
      const auto g = io::read_map(input);
      freqs = g.freqs;
      h.y = g.powers;
      for (const auto& c : g.cells) h.values.push_back(c.transmission_db);
      h.title = std::string("transmission, ") + to_string(g.protocol);
      h.value_label = "transmission [dB]";
    } else {
      const auto d = io::read_difference(input);
      freqs = d.freqs;
      h.y = d.powers;
      h.values = d.values;
      h.colormap = Colormap::diverging;
      h.title = "transmission difference";
      h.value_label = "difference [dB]";
    }
    for (double f : freqs) h.x.push_back(f / kTwoPi / 1e9);
    h.x_label = "drive frequency [GHz]";
    h.y_label = "drive amplitude |eps| [rad/s]";
    svg = heatmap_svg(h);
  } else if (kind == "cqed-trace") {
    const auto t = io::read_trace(input);
    std::optional<double> threshold = options.threshold;
    Channel channel = options.channel == "amplitude" ? Channel::amplitude : Channel::phase;
    if (options.adr_report) {
      const auto s = io::read_adr_summary(*options.adr_report);
      if (!s.monostable) {
        channel = s.channel;
        if (!threshold) threshold = s.threshold;
      }
    }
    LineData l;
    l.y = channel_samples(t, channel);
    std::size_t n = l.y.size();
    if (options.max_duration > 0.0)
      n = std::min(n, static_cast<std::size_t>(std::ceil(options.max_duration / t.dt)));
    l.y.resize(n);
    l.x.resize(n);
    for (std::size_t k = 0; k < n; ++k) l.x[k] = static_cast<double>(k) * t.dt * 1e3;
    l.threshold = threshold;
    l.title = "telegraph trace";
    l.x_label = "time [ms]";
    l.y_label = channel == Channel::phase ? "homodyne phase [rad]" : "homodyne amplitude";
    svg = line_svg(l);
  } else {
    throw io::FormatError(input.string() + ": no plot for artifact kind " + kind);
  }
  if (output.has_parent_path()) std::filesystem::create_directories(output.parent_path());
  std::ofstream out(output);
  if (!out) throw io::FormatError("cannot write " + output.string());
  out << svg;
}

}  // namespace cqed::plot
