#include "cqed/io.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <sstream>

namespace cqed::io {

namespace fs = std::filesystem;

std::vector<double> AxesSpec::freqs() const { return lin_spaced(freq_lo, freq_hi, n_freqs); }

std::vector<double> AxesSpec::powers() const {
  return log_powers ? log_spaced(power_lo, power_hi, n_powers) : lin_spaced(power_lo, power_hi, n_powers);
}

RunConfig default_run_config() {
  RunConfig c;
  c.lattice = paper_default_params();
  c.axes.freq_lo = kTwoPi * 7.36e9;
  c.axes.freq_hi = kTwoPi * 7.50e9;
  c.axes.n_freqs = 71;
  c.axes.power_lo = 2e6;
  c.axes.power_hi = 2e9;
  c.axes.n_powers = 7;
  c.sweep = SweepOptions::defaults_for(c.lattice);
  c.sweep.integrator.rel_tol = 1e-5;
  c.sweep.integrator.abs_tol = 1e-8;
  c.telegraph.trace.rates = {50.0, 200.0};
  c.telegraph.trace.set_snr(c.telegraph.snr);
  return c;
}

// ---------------------------------------------------------------- numbers

namespace {

std::string fmt(double x) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc{}) throw std::logic_error("number formatting failed");
  return {buf.data(), end};
}

std::string fmt(long long x) { return std::to_string(x); }

double parse_real(const std::string& s, const std::string& what) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && *b == ' ') ++b;
  if (b < e && *b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, v);
  while (ptr < e && *ptr == ' ') ++ptr;
  if (ec != std::errc{} || ptr != e) throw ConfigError(what + ": not a number: '" + s + "'");
  return v;
}

long long parse_int(const std::string& s, const std::string& what) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ConfigError(what + ": not an integer: '" + s + "'");
  return v;
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(' ') == std::string::npos) continue;
    out.push_back(parse_real(item, what));
  }
  return out;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out;
}

// ---------------------------------------------------------------- schema

enum class Kind { angular, real, integer, text, angular_list, real_list };

struct Key {
  std::string section;
  std::string name;
  Kind kind;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class Get>
Key real_key(std::string sec, std::string name, Kind kind, Get ref) {
  return {sec, name, kind,
          [ref, n = sec + "." + name](RunConfig& c, const std::string& v) { ref(c) = parse_real(v, n); },
          [ref](const RunConfig& c) { return fmt(ref(const_cast<RunConfig&>(c))); }};
}

template <class Get>
Key int_key(std::string sec, std::string name, Get ref) {
  return {sec, name, Kind::integer,
          [ref, n = sec + "." + name](RunConfig& c, const std::string& v) {
            using T = std::remove_reference_t<decltype(ref(c))>;
            ref(c) = static_cast<T>(parse_int(v, n));
          },
          [ref](const RunConfig& c) {
            return fmt(static_cast<long long>(ref(const_cast<RunConfig&>(c))));
          }};
}

Key text_key(std::string sec, std::string name, std::function<void(RunConfig&, const std::string&)> set,
             std::function<std::string(const RunConfig&)> get) {
  return {std::move(sec), std::move(name), Kind::text, std::move(set), std::move(get)};
}

template <class E>
E enum_from(const std::string& s, std::initializer_list<E> all, const std::string& what) {
  for (E e : all)
    if (s == to_string(e)) return e;
  throw ConfigError(what + ": unknown value '" + s + "'");
}

const char* method_name(IntegratorConfig::Method m) {
  return m == IntegratorConfig::Method::dopri45 ? "dopri45" : "rk4_fixed";
}

const char* mode_name(TransmissionMode m) { return m == TransmissionMode::coherent ? "coherent" : "magnitude"; }

const std::vector<Key>& schema() {
  static const std::vector<Key> keys = [] {
    std::vector<Key> k;
    // [lattice]
    k.push_back(int_key("lattice", "n_sites", [](RunConfig& c) -> int& { return c.lattice.n_sites; }));
    k.push_back(real_key("lattice", "omega_r", Kind::angular, [](RunConfig& c) -> double& { return c.lattice.omega_r; }));
    k.push_back(real_key("lattice", "omega_q", Kind::angular, [](RunConfig& c) -> double& { return c.lattice.omega_q; }));
    k.push_back(real_key("lattice", "u_kerr", Kind::angular, [](RunConfig& c) -> double& { return c.lattice.u_kerr; }));
    k.push_back(real_key("lattice", "g_coupling", Kind::angular, [](RunConfig& c) -> double& { return c.lattice.g_coupling; }));
    k.push_back(real_key("lattice", "t_hop", Kind::angular, [](RunConfig& c) -> double& { return c.lattice.t_hop; }));
    k.push_back(real_key("lattice", "kappa", Kind::angular, [](RunConfig& c) -> double& { return c.lattice.kappa; }));
    k.push_back(real_key("lattice", "gamma_q", Kind::angular, [](RunConfig& c) -> double& { return c.lattice.gamma_q; }));
    k.push_back(int_key("lattice", "drive_site", [](RunConfig& c) -> int& { return c.lattice.drive_site; }));
    k.push_back(int_key("lattice", "output_site", [](RunConfig& c) -> int& { return c.lattice.output_site; }));
    k.push_back({"lattice", "omega_q_site", Kind::angular_list,
                 [](RunConfig& c, const std::string& v) { c.lattice.omega_q_site = parse_list(v, "lattice.omega_q_site"); },
                 [](const RunConfig& c) { return fmt_list(c.lattice.omega_q_site); }});
    // [drive]
    k.push_back(real_key("drive", "freq_lo", Kind::angular, [](RunConfig& c) -> double& { return c.axes.freq_lo; }));
    k.push_back(real_key("drive", "freq_hi", Kind::angular, [](RunConfig& c) -> double& { return c.axes.freq_hi; }));
    k.push_back(int_key("drive", "n_freqs", [](RunConfig& c) -> int& { return c.axes.n_freqs; }));
    k.push_back(real_key("drive", "power_lo", Kind::angular, [](RunConfig& c) -> double& { return c.axes.power_lo; }));
    k.push_back(real_key("drive", "power_hi", Kind::angular, [](RunConfig& c) -> double& { return c.axes.power_hi; }));
    k.push_back(int_key("drive", "n_powers", [](RunConfig& c) -> int& { return c.axes.n_powers; }));
    k.push_back(text_key(
        "drive", "power_spacing",
        [](RunConfig& c, const std::string& v) {
          if (v != "log" && v != "linear") throw ConfigError("drive.power_spacing: expected log or linear");
          c.axes.log_powers = v == "log";
        },
        [](const RunConfig& c) { return std::string(c.axes.log_powers ? "log" : "linear"); }));
    k.push_back(text_key(
        "drive", "protocol", [](RunConfig& c, const std::string& v) { c.protocol = protocol_from_string(v); },
        [](const RunConfig& c) { return std::string(to_string(c.protocol)); }));
    // [sweep]
    k.push_back(text_key(
        "sweep", "method",
        [](RunConfig& c, const std::string& v) {
          if (v == "dopri45") c.sweep.integrator.method = IntegratorConfig::Method::dopri45;
          else if (v == "rk4_fixed") c.sweep.integrator.method = IntegratorConfig::Method::rk4_fixed;
          else throw ConfigError("sweep.method: expected dopri45 or rk4_fixed");
        },
        [](const RunConfig& c) { return std::string(method_name(c.sweep.integrator.method)); }));
    k.push_back(real_key("sweep", "dt_max", Kind::real, [](RunConfig& c) -> double& { return c.sweep.integrator.dt_max; }));
    k.push_back(real_key("sweep", "rel_tol", Kind::real, [](RunConfig& c) -> double& { return c.sweep.integrator.rel_tol; }));
    k.push_back(real_key("sweep", "abs_tol", Kind::real, [](RunConfig& c) -> double& { return c.sweep.integrator.abs_tol; }));
    k.push_back(real_key("sweep", "t_transient", Kind::real, [](RunConfig& c) -> double& { return c.sweep.integrator.t_transient; }));
    k.push_back(real_key("sweep", "t_average", Kind::real, [](RunConfig& c) -> double& { return c.sweep.integrator.t_average; }));
    k.push_back(real_key("sweep", "divergence_bound", Kind::real, [](RunConfig& c) -> double& { return c.sweep.integrator.divergence_bound; }));
    k.push_back(int_key("sweep", "average_samples", [](RunConfig& c) -> int& { return c.sweep.integrator.average_samples; }));
    k.push_back(real_key("sweep", "fixed_point_threshold", Kind::real, [](RunConfig& c) -> double& { return c.sweep.integrator.fixed_point_threshold; }));
    k.push_back(real_key("sweep", "max_phase_per_step", Kind::real, [](RunConfig& c) -> double& { return c.sweep.integrator.max_phase_per_step; }));
    k.push_back(text_key(
        "sweep", "transmission_mode",
        [](RunConfig& c, const std::string& v) {
          if (v == "coherent") c.sweep.transmission_mode = TransmissionMode::coherent;
          else if (v == "magnitude") c.sweep.transmission_mode = TransmissionMode::magnitude;
          else throw ConfigError("sweep.transmission_mode: expected coherent or magnitude");
        },
        [](const RunConfig& c) { return std::string(mode_name(c.sweep.transmission_mode)); }));
    k.push_back(text_key(
        "sweep", "g2_formula",
        [](RunConfig& c, const std::string& v) {
          c.sweep.g2_formula = enum_from(v, {G2Formula::magnitude_moments, G2Formula::fourth_moment}, "sweep.g2_formula");
        },
        [](const RunConfig& c) { return std::string(to_string(c.sweep.g2_formula)); }));
    k.push_back(real_key("sweep", "excited_seed_factor", Kind::real, [](RunConfig& c) -> double& { return c.sweep.excited_seed_factor; }));
    k.push_back(int_key("sweep", "seed", [](RunConfig& c) -> std::uint64_t& { return c.sweep.seed; }));
    k.push_back(real_key("sweep", "pulse_ramp_time", Kind::real, [](RunConfig& c) -> double& { return c.sweep.pulse_ramp_time; }));
    k.push_back(real_key("sweep", "pulse_overshoot", Kind::real, [](RunConfig& c) -> double& { return c.sweep.pulse_overshoot; }));
    k.push_back(real_key("sweep", "hysteresis_threshold_db", Kind::real, [](RunConfig& c) -> double& { return c.sweep.hysteresis_threshold_db; }));
    // [analysis]
    k.push_back(real_key("analysis", "gamma_12", Kind::real, [](RunConfig& c) -> double& { return c.telegraph.trace.rates.gamma_12; }));
    k.push_back(real_key("analysis", "gamma_21", Kind::real, [](RunConfig& c) -> double& { return c.telegraph.trace.rates.gamma_21; }));
    k.push_back(real_key("analysis", "duration", Kind::real, [](RunConfig& c) -> double& { return c.telegraph.trace.duration; }));
    k.push_back(real_key("analysis", "dt", Kind::real, [](RunConfig& c) -> double& { return c.telegraph.trace.dt; }));
    k.push_back(real_key("analysis", "snr", Kind::real, [](RunConfig& c) -> double& { return c.telegraph.snr; }));
    k.push_back(real_key("analysis", "level1_amplitude", Kind::real, [](RunConfig& c) -> double& { return c.telegraph.trace.level1.amplitude; }));
    k.push_back(real_key("analysis", "level1_phase", Kind::real, [](RunConfig& c) -> double& { return c.telegraph.trace.level1.phase; }));
    k.push_back(real_key("analysis", "level2_amplitude", Kind::real, [](RunConfig& c) -> double& { return c.telegraph.trace.level2.amplitude; }));
    k.push_back(real_key("analysis", "level2_phase", Kind::real, [](RunConfig& c) -> double& { return c.telegraph.trace.level2.phase; }));
    k.push_back(real_key("analysis", "digitizer_rate", Kind::real, [](RunConfig& c) -> double& { return c.telegraph.trace.digitizer_rate; }));
    k.push_back(real_key("analysis", "filter_cutoff", Kind::real, [](RunConfig& c) -> double& { return c.telegraph.trace.filter_cutoff; }));
    k.push_back(int_key("analysis", "n_traces", [](RunConfig& c) -> int& { return c.telegraph.n_traces; }));
    k.push_back(int_key("analysis", "trace_seed", [](RunConfig& c) -> std::uint64_t& { return c.telegraph.trace.seed; }));
    k.push_back(text_key(
        "analysis", "channel",
        [](RunConfig& c, const std::string& v) {
          if (v == "auto") c.adr.channel.reset();
          else c.adr.channel = enum_from(v, {Channel::amplitude, Channel::phase}, "analysis.channel");
        },
        [](const RunConfig& c) { return std::string(c.adr.channel ? to_string(*c.adr.channel) : "auto"); }));
    k.push_back(text_key(
        "analysis", "fit",
        [](RunConfig& c, const std::string& v) {
          c.adr.fit = enum_from(v, {FitMode::censored_mle, FitMode::histogram_lsq}, "analysis.fit");
        },
        [](const RunConfig& c) { return std::string(to_string(c.adr.fit)); }));
    k.push_back({"analysis", "candidate_rates", Kind::real_list,
                 [](RunConfig& c, const std::string& v) { c.adr.candidate_rates = parse_list(v, "analysis.candidate_rates"); },
                 [](const RunConfig& c) { return fmt_list(c.adr.candidate_rates); }});
    k.push_back(real_key("analysis", "min_persistence", Kind::real, [](RunConfig& c) -> double& { return c.adr.dwell.min_persistence; }));
    k.push_back(int_key("analysis", "histogram_bins", [](RunConfig& c) -> int& { return c.adr.bimodality.bins; }));
    k.push_back(int_key("analysis", "smoothing_window", [](RunConfig& c) -> int& { return c.adr.bimodality.smoothing_window; }));
    k.push_back(real_key("analysis", "prominence_fraction", Kind::real, [](RunConfig& c) -> double& { return c.adr.bimodality.prominence_fraction; }));
    k.push_back(real_key("analysis", "valley_fraction", Kind::real, [](RunConfig& c) -> double& { return c.adr.bimodality.valley_fraction; }));
    k.push_back(real_key("analysis", "min_mode_fraction", Kind::real, [](RunConfig& c) -> double& { return c.adr.bimodality.min_mode_fraction; }));
    k.push_back(real_key("analysis", "dwell_bin_min_count", Kind::real, [](RunConfig& c) -> double& { return c.adr.bins.min_count; }));
    return k;
  }();
  return keys;
}

const Key* find_key(const std::string& section, const std::string& name, bool& hz) {
  hz = false;
  for (const auto& k : schema()) {
    if (k.section != section) continue;
    if (k.name == name) return &k;
    if ((k.kind == Kind::angular || k.kind == Kind::angular_list) && name == k.name + "_hz") {
      hz = true;
      return &k;
    }
  }
  return nullptr;
}

std::string scale_hz(const std::string& value, Kind kind, const std::string& what) {
  if (kind == Kind::angular) return fmt(kTwoPi * parse_real(value, what));
  auto v = parse_list(value, what);
  for (auto& x : v) x *= kTwoPi;
  return fmt_list(v);
}

}  // namespace

void validate(const RunConfig& c) {
  validate(c.lattice);
  validate(c.sweep.integrator);
  const auto& a = c.axes;
  if (a.n_freqs < 1 || a.n_powers < 1) throw ConfigError("drive: n_freqs and n_powers must be >= 1");
  if (!std::isfinite(a.freq_lo) || !std::isfinite(a.freq_hi) || a.freq_hi < a.freq_lo)
    throw ConfigError("drive: need finite freq_lo <= freq_hi");
  if (!(a.power_lo >= 0.0) || !(a.power_hi > a.power_lo || (a.n_powers == 1 && a.power_hi >= a.power_lo)))
    throw ConfigError("drive: need 0 <= power_lo < power_hi");
  if (a.log_powers && !(a.power_lo > 0.0)) throw ConfigError("drive: log power axis needs power_lo > 0");
  if (!(c.sweep.excited_seed_factor > 0.0)) throw ConfigError("sweep.excited_seed_factor must be > 0");
  if (!(c.sweep.pulse_ramp_time >= 0.0) || !(c.sweep.pulse_overshoot >= 1.0))
    throw ConfigError("sweep: pulse_ramp_time >= 0 and pulse_overshoot >= 1 required");
  if (!(c.sweep.hysteresis_threshold_db > 0.0)) throw ConfigError("sweep.hysteresis_threshold_db must be > 0");
  validate(c.telegraph.trace.rates);
  if (c.telegraph.n_traces < 1) throw ConfigError("analysis.n_traces must be >= 1");
  if (!(c.telegraph.snr > 0.0)) throw ConfigError("analysis.snr must be > 0");
  const auto& t = c.telegraph.trace;
  if (!(t.duration > 0.0) || !(t.dt > 0.0) || t.dt > t.duration)
    throw ConfigError("analysis: need 0 < dt <= duration");
  if (!(t.digitizer_rate > 0.0) || !(t.filter_cutoff > 0.0))
    throw ConfigError("analysis: digitizer_rate and filter_cutoff must be > 0");
  if (c.adr.bimodality.bins < 3 || c.adr.bimodality.smoothing_window < 1)
    throw ConfigError("analysis: histogram_bins >= 3 and smoothing_window >= 1 required");
}

RunConfig parse_config(const std::string& text, const std::vector<std::string>& overrides) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    const auto dot = o.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
      throw ConfigError("override '" + o + "': expected section.key=value");
    const std::string section = o.substr(0, dot);
    std::string name = o.substr(dot + 1, eq - dot - 1);
    const std::string value = o.substr(eq + 1);
    if (tree.find(section) == tree.not_found()) tree.push_back({section, pt::ptree()});
    auto& body = tree.find(section)->second;
    const std::string base = name.size() > 3 && name.ends_with("_hz") ? name.substr(0, name.size() - 3) : name;
    body.erase(base);
    body.erase(base + "_hz");
    body.push_back({name, pt::ptree(value)});
  }
  static const std::vector<std::string> order{"lattice", "drive", "sweep", "analysis"};
  for (const auto& [section, body] : tree) {
    if (std::find(order.begin(), order.end(), section) == order.end())
      throw ConfigError("unknown config section [" + section + "]");
    if (body.empty() && !body.data().empty())
      throw ConfigError("config key '" + section + "' outside a section");
  }

  RunConfig c = default_run_config();
  for (const auto& section : order) {
    if (section == "sweep") {
      // Integrator windows default to multiples of 1/kappa of the lattice just read.
      const auto keep = c.sweep;
      c.sweep = SweepOptions::defaults_for(c.lattice);
      c.sweep.integrator.rel_tol = keep.integrator.rel_tol;
      c.sweep.integrator.abs_tol = keep.integrator.abs_tol;
    }
    auto it = tree.find(section);
    if (it == tree.not_found()) continue;
    std::map<const Key*, std::string> seen;
    for (const auto& [name, node] : it->second) {
      bool hz = false;
      const Key* key = find_key(section, name, hz);
      if (!key) throw ConfigError("unknown config key " + section + "." + name);
      if (seen.count(key))
        throw ConfigError("config key " + section + "." + key->name + " given twice (" + seen[key] + ", " + name + ")");
      seen[key] = name;
      const std::string what = section + "." + name;
      std::string value = node.data();
      if (hz) value = scale_hz(value, key->kind, what);
      key->set(c, value);
    }
  }
  c.telegraph.trace.set_snr(c.telegraph.snr);
  validate(c);
  return c;
}

RunConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), overrides);
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream out;
  out << "# cqed run configuration, format-version " << kFormatVersion << "\n";
  out << "# frequencies and rates in rad/s; append _hz to a key to give cycles/s\n";
  std::string section;
  for (const auto& k : schema()) {
    if (k.section != section) {
      out << (section.empty() ? "" : "\n") << "[" << k.section << "]\n";
      section = k.section;
    }
    out << k.name << " = " << k.get(c) << "\n";
  }
  return out.str();
}

// ---------------------------------------------------------------- digests

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return out.str();
}

std::string file_sha256(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return out.str();
}

std::string config_hash(const RunConfig& c) { return sha256_hex(serialize_config(c)); }

// ---------------------------------------------------------------- artifacts

namespace {

std::ofstream open_out(const fs::path& path, bool binary = false) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw FormatError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  return in;
}

void header(std::ostream& out, const std::string& kind) {
  out << "# " << kind << " format-version " << kFormatVersion << "\n";
}

// Header lines are "# key value..."; returns key -> rest of line.
struct Header {
  std::string kind;
  std::map<std::string, std::string> fields;
  std::string columns;
};

Header read_header(std::istream& in, const fs::path& path, const std::string& expected_kind) {
  Header h;
  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": empty file");
  std::istringstream first(line);
  std::string hash, word, version_key;
  int version = 0;
  first >> hash >> h.kind >> version_key >> version;
  if (hash != "#" || version_key != "format-version")
    throw FormatError(path.string() + ": missing format-version header");
  if (!expected_kind.empty() && h.kind != expected_kind)
    throw FormatError(path.string() + ": expected " + expected_kind + ", found " + h.kind);
  if (version != kFormatVersion)
    throw FormatError(path.string() + ": unsupported format-version " + std::to_string(version));
  while (in.peek() == '#') {
    std::getline(in, line);
    if (line == "# end-header") break;
    const auto sp = line.find(' ', 2);
    const std::string key = line.substr(2, sp == std::string::npos ? std::string::npos : sp - 2);
    h.fields[key] = sp == std::string::npos ? "" : line.substr(sp + 1);
  }
  return h;
}

const std::string& field(const Header& h, const std::string& key, const fs::path& path) {
  auto it = h.fields.find(key);
  if (it == h.fields.end()) throw FormatError(path.string() + ": header lacks '" + key + "'");
  return it->second;
}

double field_real(const Header& h, const std::string& key, const fs::path& path) {
  try {
    return parse_real(field(h, key, path), key);
  } catch (const ConfigError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<double> field_list(const Header& h, const std::string& key, const fs::path& path) {
  try {
    std::string s = field(h, key, path);
    std::replace(s.begin(), s.end(), ' ', ',');
    return parse_list(s, key);
  } catch (const ConfigError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + fmt(v[i]);
  return out;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string w;
  while (ss >> w) out.push_back(w);
  return out;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : "nan"; }

}  // namespace

std::string artifact_kind(const fs::path& path) {
  auto in = open_in(path);
  return read_header(in, path, "").kind;
}

void write_map(const fs::path& path, const SweepGrid& g, const std::string& hash) {
  auto out = open_out(path);
  header(out, "cqed-map");
  out << "# protocol " << to_string(g.protocol) << "\n";
  out << "# config_sha256 " << hash << "\n";
  out << "# reference_gain " << fmt(g.reference_gain) << "\n";
  out << "# freqs " << join(g.freqs) << "\n";
  out << "# powers " << join(g.powers) << "\n";
  out << "# columns freq_index power_index freq_hz epsilon transmission_db classification g2 "
         "alpha_re alpha_im alpha_abs_mean diverged\n";
  for (std::size_t f = 0; f < g.freqs.size(); ++f)
    for (std::size_t p = 0; p < g.powers.size(); ++p) {
      const auto& c = g.at(f, p);
      out << f << ' ' << p << ' ' << fmt(g.freqs[f] / kTwoPi) << ' ' << fmt(g.powers[p]) << ' '
          << fmt(c.transmission_db) << ' ' << to_string(c.classification) << ' ' << fmt_opt(c.g2) << ' '
          << fmt(c.alpha_out_mean.real()) << ' ' << fmt(c.alpha_out_mean.imag()) << ' '
          << fmt(c.alpha_abs_mean) << ' ' << (c.diverged ? 1 : 0) << '\n';
    }
  if (!out) throw FormatError("write failed: " + path.string());
}

SweepGrid read_map(const fs::path& path) {
  auto in = open_in(path);
  const Header h = read_header(in, path, "cqed-map");
  SweepGrid g;
  try {
    g.protocol = protocol_from_string(field(h, "protocol", path));
  } catch (const ConfigError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  g.reference_gain = field_real(h, "reference_gain", path);
  g.freqs = field_list(h, "freqs", path);
  g.powers = field_list(h, "powers", path);
  g.cells.resize(g.freqs.size() * g.powers.size());
  std::vector<bool> filled(g.cells.size(), false);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto w = split_ws(line);
    if (w.size() != 11) throw FormatError(path.string() + ": malformed row '" + line + "'");
    try {
      const auto f = static_cast<std::size_t>(parse_int(w[0], "freq_index"));
      const auto p = static_cast<std::size_t>(parse_int(w[1], "power_index"));
      if (f >= g.freqs.size() || p >= g.powers.size()) throw FormatError(path.string() + ": index out of range");
      auto& c = g.at(f, p);
      c.transmission_db = parse_real(w[4], "transmission_db");
      if (w[5] == "fixed_point") c.classification = Classification::fixed_point;
      else if (w[5] == "non_stationary") c.classification = Classification::non_stationary;
      else throw FormatError(path.string() + ": unknown classification " + w[5]);
      if (w[6] != "nan") c.g2 = parse_real(w[6], "g2");
      c.alpha_out_mean = {parse_real(w[7], "alpha_re"), parse_real(w[8], "alpha_im")};
      c.alpha_abs_mean = parse_real(w[9], "alpha_abs_mean");
      c.diverged = w[10] == "1";
      filled[g.index(f, p)] = true;
    } catch (const ConfigError& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
  }
  if (std::find(filled.begin(), filled.end(), false) != filled.end())
    throw FormatError(path.string() + ": missing cells");
  return g;
}

void write_difference(const fs::path& path, const HysteresisMap& m, const std::string& hash) {
  auto out = open_out(path);
  header(out, "cqed-diff");
  out << "# protocols " << to_string(m.grid_up.protocol) << ' ' << to_string(m.grid_down.protocol) << "\n";
  out << "# config_sha256 " << hash << "\n";
  out << "# threshold_db " << fmt(m.threshold_db) << "\n";
  out << "# freqs " << join(m.grid_up.freqs) << "\n";
  out << "# powers " << join(m.grid_up.powers) << "\n";
  out << "# columns freq_index power_index freq_hz epsilon difference_db class_a class_b\n";
  const auto& g = m.grid_up;
  for (std::size_t f = 0; f < g.freqs.size(); ++f)
    for (std::size_t p = 0; p < g.powers.size(); ++p) {
      const auto i = g.index(f, p);
      out << f << ' ' << p << ' ' << fmt(g.freqs[f] / kTwoPi) << ' ' << fmt(g.powers[p]) << ' '
          << fmt(m.difference[i]) << ' ' << to_string(m.grid_up.cells[i].classification) << ' '
          << to_string(m.grid_down.cells[i].classification) << '\n';
    }
}

DifferenceMap read_difference(const fs::path& path) {
  auto in = open_in(path);
  const Header h = read_header(in, path, "cqed-diff");
  DifferenceMap d;
  d.threshold_db = field_real(h, "threshold_db", path);
  d.freqs = field_list(h, "freqs", path);
  d.powers = field_list(h, "powers", path);
  d.values.assign(d.freqs.size() * d.powers.size(), std::nan(""));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto w = split_ws(line);
    if (w.size() != 7) throw FormatError(path.string() + ": malformed row '" + line + "'");
    try {
      const auto f = static_cast<std::size_t>(parse_int(w[0], "freq_index"));
      const auto p = static_cast<std::size_t>(parse_int(w[1], "power_index"));
      if (f >= d.freqs.size() || p >= d.powers.size()) throw FormatError(path.string() + ": index out of range");
      d.values[f * d.powers.size() + p] = parse_real(w[4], "difference_db");
      ++rows;
    } catch (const ConfigError& e) {
      throw FormatError(path.string() + ": " + e.what());
    }
  }
  if (rows != d.values.size()) throw FormatError(path.string() + ": missing cells");
  return d;
}

void write_trace(const fs::path& path, const TelegraphTrace& t) {
  validate(t);
  static_assert(std::endian::native == std::endian::little, "trace files are little endian");
  auto out = open_out(path, true);
  header(out, "cqed-trace");
  out << "# samples " << t.size() << "\n";
  out << "# dt " << fmt(t.dt) << "\n";
  out << "# duration " << fmt(t.duration) << "\n";
  if (t.generator) {
    const auto& g = *t.generator;
    out << "# gamma_12 " << fmt(g.rates.gamma_12) << "\n# gamma_21 " << fmt(g.rates.gamma_21) << "\n";
    out << "# gaussian_sigma " << fmt(g.gaussian_sigma) << "\n# filter_cutoff " << fmt(g.filter_cutoff) << "\n";
    out << "# digitizer_rate " << fmt(g.digitizer_rate) << "\n# seed " << g.seed << "\n";
  }
  out << "# end-header\n";
  const auto n = static_cast<std::streamsize>(t.size());
  out.write(reinterpret_cast<const char*>(t.i_samples.data()), n * 8);
  out.write(reinterpret_cast<const char*>(t.q_samples.data()), n * 8);
  std::vector<std::uint8_t> labels = t.truth_labels;
  labels.resize(t.size(), 0);
  out.write(reinterpret_cast<const char*>(labels.data()), n);
  if (!out) throw FormatError("write failed: " + path.string());
}

TelegraphTrace read_trace(const fs::path& path) {
  auto in = open_in(path);
  const Header h = read_header(in, path, "cqed-trace");
  TelegraphTrace t;
  const double samples = field_real(h, "samples", path);
  t.dt = field_real(h, "dt", path);
  t.duration = field_real(h, "duration", path);
  if (!(samples >= 1.0) || !(t.dt > 0.0)) throw FormatError(path.string() + ": bad trace header");
  const auto n = static_cast<std::size_t>(samples);
  t.i_samples.resize(n);
  t.q_samples.resize(n);
  t.truth_labels.resize(n);
  in.read(reinterpret_cast<char*>(t.i_samples.data()), static_cast<std::streamsize>(n * 8));
  in.read(reinterpret_cast<char*>(t.q_samples.data()), static_cast<std::streamsize>(n * 8));
  in.read(reinterpret_cast<char*>(t.truth_labels.data()), static_cast<std::streamsize>(n));
  if (!in) throw FormatError(path.string() + ": truncated trace data");
  if (std::all_of(t.truth_labels.begin(), t.truth_labels.end(), [](auto l) { return l == 0; }))
    t.truth_labels.clear();
  if (h.fields.count("filter_cutoff")) {
    TelegraphConfig g;
    g.rates = {field_real(h, "gamma_12", path), field_real(h, "gamma_21", path)};
    g.gaussian_sigma = field_real(h, "gaussian_sigma", path);
    g.filter_cutoff = field_real(h, "filter_cutoff", path);
    g.digitizer_rate = field_real(h, "digitizer_rate", path);
    g.dt = t.dt;
    g.duration = t.duration;
    g.seed = static_cast<std::uint64_t>(field_real(h, "seed", path));
    t.generator = g;
  }
  return t;
}

void write_eigenmodes(const fs::path& path, const LatticeParams& params) {
  const auto set = chain_eigenmodes(params);
  auto out = open_out(path);
  header(out, "cqed-eigenmodes");
  out << "# n_sites " << params.n_sites << "\n";
  out << "# columns mode freq_hz closed_form_hz\n";
  const int n = params.n_sites;
  for (int k = 0; k < n; ++k)
    // Ascending order pairs index k with mu = n - k in the closed form.
    out << k + 1 << ' ' << fmt(set.frequencies(k) / kTwoPi) << ' '
        << fmt(uniform_chain_frequency(params, n - k) / kTwoPi) << '\n';
}

void write_adr_report(const fs::path& path, const AdrReport& r) {
  auto out = open_out(path);
  header(out, "cqed-adr");
  out << "# monostable " << (r.monostable ? 1 : 0) << "\n";
  out << "# tau_m " << fmt(r.tau_m) << "\n";
  for (const auto& ch : r.channels) {
    out << "# " << to_string(ch.channel) << "_bimodal " << (ch.bimodality ? 1 : 0) << "\n";
    if (ch.bimodality)
      out << "# " << to_string(ch.channel) << "_threshold " << fmt(ch.bimodality->threshold) << "\n# "
          << to_string(ch.channel) << "_counts_at_threshold " << fmt(ch.bimodality->counts_at_threshold) << "\n";
  }
  if (r.estimate) {
    const auto& e = *r.estimate;
    out << "# channel " << to_string(r.chosen) << "\n";
    out << "# gamma_12 " << fmt(e.rates.gamma_12) << "\n# gamma_21 " << fmt(e.rates.gamma_21) << "\n";
    out << "# adr " << fmt(e.adr) << "\n";
    out << "# censoring_12 " << to_string(e.censoring_12) << "\n# censoring_21 " << to_string(e.censoring_21) << "\n";
    out << "# complete_dwells_1 " << r.complete_dwells_1 << "\n# complete_dwells_2 " << r.complete_dwells_2 << "\n";
  }
  out << "# columns state bin_lo bin_hi count\n";
  auto rows = [&](int state, const DwellHistogram& h) {
    for (std::size_t k = 0; k < h.counts.size(); ++k)
      out << state << ' ' << fmt(h.bin_edges[k]) << ' ' << fmt(h.bin_edges[k + 1]) << ' ' << fmt(h.counts[k]) << '\n';
  };
  rows(1, r.histogram_1);
  rows(2, r.histogram_2);
}

AdrSummary read_adr_summary(const fs::path& path) {
  auto in = open_in(path);
  const Header h = read_header(in, path, "cqed-adr");
  AdrSummary s;
  s.monostable = field(h, "monostable", path) == "1";
  if (!s.monostable) {
    const auto& ch = field(h, "channel", path);
    if (ch != "amplitude" && ch != "phase") throw FormatError(path.string() + ": bad channel " + ch);
    s.channel = ch == "amplitude" ? Channel::amplitude : Channel::phase;
    s.threshold = field_real(h, ch + "_threshold", path);
    s.adr = field_real(h, "adr", path);
  }
  return s;
}

void write_trajectory(const fs::path& path, const Trajectory& tr, int output_site) {
  auto out = open_out(path);
  header(out, "cqed-trajectory");
  out << "# output_site " << output_site << "\n";
  out << "# columns time alpha_re alpha_im alpha_abs\n";
  const auto j = static_cast<std::size_t>(output_site - 1);
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const cplx a = tr.states[k].alpha.at(j);
    out << fmt(tr.times[k]) << ' ' << fmt(a.real()) << ' ' << fmt(a.imag()) << ' ' << fmt(std::abs(a)) << '\n';
  }
}

void write_pulse_result(const fs::path& path, const PulseResult& r, double freq, double xi, Pulse pulse,
                        const std::string& hash) {
  auto out = open_out(path);
  header(out, "cqed-pulse");
  out << "# config_sha256 " << hash << "\n";
  out << "# pulse " << (pulse == Pulse::up ? "up" : "down") << "\n";
  out << "# freq_hz " << fmt(freq / kTwoPi) << "\n# xi " << fmt(xi) << "\n";
  out << "# classification " << to_string(r.state.classification) << "\n";
  out << "# alpha_re " << fmt(r.state.alpha_out_mean.real()) << "\n# alpha_im " << fmt(r.state.alpha_out_mean.imag()) << "\n";
  out << "# alpha_abs_mean " << fmt(r.state.alpha_abs_mean) << "\n# g2 " << fmt_opt(r.g2) << "\n";
  out << "# columns sample alpha_abs\n";
  for (std::size_t k = 0; k < r.state.tail_abs.size(); ++k) out << k << ' ' << fmt(r.state.tail_abs[k]) << '\n';
}

fs::path write_manifest(const fs::path& dir, const Manifest& m) {
  nlohmann::ordered_json j;
  j["format_version"] = kFormatVersion;
  j["config_sha256"] = m.config_hash;
  j["seed"] = m.seed;
  j["command"] = m.command;
  auto arts = nlohmann::ordered_json::array();
  for (const auto& p : m.artifacts) {
    nlohmann::ordered_json a;
    a["path"] = fs::relative(p, dir).generic_string();
    a["sha256"] = file_sha256(p);
    arts.push_back(a);
  }
  j["artifacts"] = arts;
  const fs::path path = dir / "manifest.json";
  auto out = open_out(path);
  out << j.dump(2) << "\n";
  return path;
}

}  // namespace cqed::io
