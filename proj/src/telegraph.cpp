#include "cqed/telegraph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace cqed {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kDefaultCutoff = 1.9e6;

struct Iq {
  double i;
  double q;
};

Iq to_iq(const IqPoint& p) { return {p.amplitude * std::sin(p.phase), p.amplitude * std::cos(p.phase)}; }

double level_distance(const TelegraphConfig& c) {
  const Iq a = to_iq(c.level1);
  const Iq b = to_iq(c.level2);
  return std::hypot(a.i - b.i, a.q - b.q);
}

double tau_of_cutoff(double cutoff) { return 1.0 / (2.0 * std::numbers::pi * cutoff); }

}  // namespace

const RatePair& validate(const RatePair& r) {
  if (!std::isfinite(r.gamma_12) || !std::isfinite(r.gamma_21))
    throw ConfigError("switching rates must be finite");
  if (r.gamma_12 < 0.0 || r.gamma_21 < 0.0) throw ConfigError("switching rates must be >= 0");
  if (r.gamma_12 == 0.0 && r.gamma_21 == 0.0)
    throw ConfigError("switching rates: at least one must be > 0");
  return r;
}

namespace {

void check_nonnegative(const RatePair& r) {
  if (!(r.gamma_12 >= 0.0) || !(r.gamma_21 >= 0.0) || !std::isfinite(r.gamma_12) || !std::isfinite(r.gamma_21))
    throw ConfigError("switching rates must be finite and >= 0");
}

}  // namespace

Eigen::Matrix4cd rate_liouvillian(double e_21, const RatePair& rates) {
  check_nonnegative(rates);
  if (!std::isfinite(e_21)) throw ConfigError("E_21 must be finite");
  const double g12 = rates.gamma_12;
  const double g21 = rates.gamma_21;
  const double half = 0.5 * (g12 + g21);
  const std::complex<double> i(0.0, 1.0);
  Eigen::Matrix4cd l = Eigen::Matrix4cd::Zero();
  l(0, 0) = -g12;
  l(0, 1) = g21;
  l(1, 0) = g12;
  l(1, 1) = -g21;
  l(2, 2) = i * e_21 - half;
  l(3, 3) = -i * e_21 - half;
  return l;
}

double adr_from_rates(const RatePair& rates) {
  check_nonnegative(rates);
  return rates.sum();
}

double TelegraphConfig::snr() const { return level_distance(*this) / gaussian_sigma; }

void TelegraphConfig::set_snr(double snr) {
  if (!(snr > 0.0)) throw ConfigError("snr must be > 0");
  gaussian_sigma = level_distance(*this) / snr;
}

double TelegraphConfig::filter_time_constant() const { return tau_of_cutoff(filter_cutoff); }

double TelegraphConfig::output_sigma() const {
  const double b = std::exp(-1.0 / (digitizer_rate * filter_time_constant()));
  return gaussian_sigma * std::sqrt((1.0 - b) / (1.0 + b));
}

void validate(const TelegraphTrace& trace) {
  if (!(trace.dt > 0.0)) throw std::invalid_argument("trace dt must be > 0");
  if (trace.i_samples.size() != trace.q_samples.size())
    throw std::invalid_argument("trace I and Q lengths differ");
  if (!trace.truth_labels.empty() && trace.truth_labels.size() != trace.i_samples.size())
    throw std::invalid_argument("trace truth labels length differs");
}

TelegraphTrace simulate_telegraph(const TelegraphConfig& c) {
  check_nonnegative(c.rates);
  if (c.initial_state == 0) validate(c.rates);
  if (!(c.duration > 0.0) || !(c.dt > 0.0) || c.dt > c.duration)
    throw ConfigError("telegraph: need 0 < dt <= duration");
  if (!(c.gaussian_sigma >= 0.0) || !(c.digitizer_rate > 0.0) || !(c.filter_cutoff > 0.0))
    throw ConfigError("telegraph: noise parameters must be positive");
  if (c.initial_state < 0 || c.initial_state > 2) throw ConfigError("telegraph: initial_state must be 0, 1 or 2");

  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  auto draw_dwell = [&](int state) {
    const double rate = state == 1 ? c.rates.gamma_12 : c.rates.gamma_21;
    if (rate <= 0.0) return kInf;
    return -std::log1p(-uni(rng)) / rate;
  };

  int state = c.initial_state;
  if (state == 0) state = uni(rng) < c.rates.gamma_21 / c.rates.sum() ? 1 : 2;

  const auto n = static_cast<std::size_t>(std::llround(c.duration / c.dt));
  TelegraphTrace trace;
  trace.dt = c.dt;
  trace.duration = static_cast<double>(n) * c.dt;
  trace.generator = c;
  trace.i_samples.resize(n);
  trace.q_samples.resize(n);
  trace.truth_labels.resize(n);

  const Iq lv[2] = {to_iq(c.level1), to_iq(c.level2)};
  const double tau = c.filter_time_constant();
  const double a = std::exp(-c.dt / tau);
  const double sigma = c.output_sigma();
  const double kick = sigma * std::sqrt(1.0 - a * a);

  Iq y = lv[state - 1];
  Iq noise{sigma * normal(rng), sigma * normal(rng)};
  double t = 0.0;
  double next_switch = draw_dwell(state);

  for (std::size_t k = 0; k < n; ++k) {
    trace.i_samples[k] = y.i + noise.i;
    trace.q_samples[k] = y.q + noise.q;
    trace.truth_labels[k] = static_cast<std::uint8_t>(state);

    // Advance the filter exactly across every switch inside (t, t + dt].
    const double t_end = static_cast<double>(k + 1) * c.dt;
    while (next_switch <= t_end) {
      const Iq& l = lv[state - 1];
      const double decay = std::exp(-(next_switch - t) / tau);
      y = {l.i + (y.i - l.i) * decay, l.q + (y.q - l.q) * decay};
      t = next_switch;
      state = 3 - state;
      next_switch = t + draw_dwell(state);
    }
    const Iq& l = lv[state - 1];
    const double decay = t_end - t == c.dt ? a : std::exp(-(t_end - t) / tau);
    y = {l.i + (y.i - l.i) * decay, l.q + (y.q - l.q) * decay};
    t = t_end;
    noise = {a * noise.i + kick * normal(rng), a * noise.q + kick * normal(rng)};
  }
  return trace;
}

std::vector<TelegraphTrace> simulate_bundle(const TelegraphConfig& config, int count) {
  if (count < 1) throw ConfigError("trace count must be >= 1");
  std::vector<TelegraphTrace> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    TelegraphConfig c = config;
    c.seed = config.seed + static_cast<std::uint64_t>(k);
    out.push_back(simulate_telegraph(c));
  }
  return out;
}

IqPoint homodyne_from_iq(double i, double q) {
  const double a = std::hypot(i, q);
  if (a == 0.0) return {0.0, 0.0};
  double theta = std::atan2(i, q);
  if (theta == -std::numbers::pi) theta = std::numbers::pi;
  return {a, theta};
}

const char* to_string(Channel c) { return c == Channel::amplitude ? "amplitude" : "phase"; }

std::size_t Histogram::bin_of(double x) const {
  const auto n = counts.size();
  if (n == 0) throw std::logic_error("empty histogram");
  if (!(hi > lo)) return 0;
  const double pos = (x - lo) / bin_width();
  if (!(pos > 0.0)) return 0;
  return std::min(n - 1, static_cast<std::size_t>(pos));
}

Histogram make_histogram(std::span<const double> samples, int bins) {
  if (bins < 1) throw std::invalid_argument("histogram needs >= 1 bin");
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(bins), 0.0);
  if (samples.empty()) return h;
  const auto [mn, mx] = std::minmax_element(samples.begin(), samples.end());
  h.lo = *mn;
  h.hi = *mx;
  for (double x : samples) h.counts[h.bin_of(x)] += 1.0;
  return h;
}

namespace {

std::vector<double> moving_average(const std::vector<double>& x, int window) {
  const int n = static_cast<int>(x.size());
  const int half = std::max(window, 1) / 2;
  std::vector<double> out(x.size());
  for (int k = 0; k < n; ++k) {
    const int lo = std::max(0, k - half);
    const int hi = std::min(n - 1, k + half);
    double s = 0.0;
    for (int j = lo; j <= hi; ++j) s += x[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(k)] = s / (hi - lo + 1);
  }
  return out;
}

struct Peak {
  std::size_t pos;
  double prominence;
};

// Local maxima (plateaus reduced to their middle) with topographic prominence.
std::vector<Peak> find_peaks(const std::vector<double>& y) {
  std::vector<Peak> peaks;
  const std::size_t n = y.size();
  std::size_t k = 0;
  while (k < n) {
    std::size_t end = k;
    while (end + 1 < n && y[end + 1] == y[k]) ++end;
    const bool left_lower = k == 0 || y[k - 1] < y[k];
    const bool right_lower = end + 1 == n || y[end + 1] < y[k];
    if (left_lower && right_lower && !(k == 0 && end + 1 == n)) {
      const std::size_t p = (k + end) / 2;
      double left_min = y[p];
      for (std::size_t j = p; j-- > 0;) {
        if (y[j] > y[p]) break;
        left_min = std::min(left_min, y[j]);
      }
      double right_min = y[p];
      for (std::size_t j = p + 1; j < n; ++j) {
        if (y[j] > y[p]) break;
        right_min = std::min(right_min, y[j]);
      }
      peaks.push_back({p, y[p] - std::max(left_min, right_min)});
    }
    k = end + 1;
  }
  return peaks;
}

}  // namespace

std::optional<Bimodality> detect_bimodality(std::span<const double> samples,
                                            const BimodalityOptions& o) {
  if (samples.size() < 2) return std::nullopt;
  const Histogram h = make_histogram(samples, o.bins);
  if (!(h.hi > h.lo)) return std::nullopt;
  const auto smooth = moving_average(h.counts, o.smoothing_window);
  std::vector<double> logc(smooth.size());
  std::transform(smooth.begin(), smooth.end(), logc.begin(), [](double c) { return std::log1p(c); });
  const double top = *std::max_element(logc.begin(), logc.end());

  std::vector<Peak> dominant;
  for (const auto& p : find_peaks(logc))
    if (p.prominence >= o.prominence_fraction * top) dominant.push_back(p);
  if (dominant.size() != 2) return std::nullopt;

  const std::size_t p1 = dominant[0].pos;
  const std::size_t p2 = dominant[1].pos;
  const auto valley_it = std::min_element(smooth.begin() + static_cast<std::ptrdiff_t>(p1),
                                          smooth.begin() + static_cast<std::ptrdiff_t>(p2) + 1);
  if (*valley_it > o.valley_fraction * std::min(smooth[p1], smooth[p2])) return std::nullopt;

  const auto valley = static_cast<std::size_t>(valley_it - smooth.begin());
  double below = 0.0;
  for (std::size_t k = 0; k < valley; ++k) below += h.counts[k];
  const double total = static_cast<double>(samples.size());
  const double above = total - below - h.counts[valley];
  if (below < o.min_mode_fraction * total || above < o.min_mode_fraction * total) return std::nullopt;

  Bimodality b;
  b.peak_low = h.center(p1);
  b.peak_high = h.center(p2);
  b.threshold = 0.5 * (b.peak_low + b.peak_high);
  b.counts_at_threshold = smooth[h.bin_of(b.threshold)];
  return b;
}

std::vector<double> channel_samples(const TelegraphTrace& trace, Channel channel) {
  validate(trace);
  std::vector<double> out(trace.size());
  if (channel == Channel::amplitude) {
    for (std::size_t k = 0; k < out.size(); ++k)
      out[k] = std::sqrt(trace.i_samples[k] * trace.i_samples[k] + trace.q_samples[k] * trace.q_samples[k]);
  } else {
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = homodyne_from_iq(trace.i_samples[k], trace.q_samples[k]).phase;
  }
  return out;
}

namespace {

DwellLists dwell_runs(std::span<const double> x, double dt, double threshold, bool above_is_state2,
                      std::size_t persist) {
  DwellLists out;
  const std::size_t n = x.size();
  if (n == 0) return out;
  auto label = [&](std::size_t k) { return (x[k] > threshold) == above_is_state2 ? 2 : 1; };

  auto emit = [&](int state, std::size_t start, std::size_t end) {
    Dwell d{static_cast<double>(end - start) * dt, state, end == n, start == 0};
    (state == 1 ? out.state1 : out.state2).push_back(d);
  };

  // The opening state is the first one that persists; earlier flicker is noise.
  int current = label(0);
  for (std::size_t k = 0, run = 0; k < n; ++k) {
    run = k > 0 && label(k) == label(k - 1) ? run + 1 : 1;
    if (run >= persist) {
      current = label(k);
      break;
    }
  }
  std::size_t start = 0;
  std::size_t k = 1;
  while (k < n) {
    const int l = label(k);
    if (l == current) {
      ++k;
      continue;
    }
    std::size_t run = 1;
    while (run < persist && k + run < n && label(k + run) == l) ++run;
    if (run >= persist) {
      emit(current, start, k);
      current = l;
      start = k;
      k += run;
    } else {
      k += run;
    }
  }
  emit(current, start, n);
  return out;
}

}  // namespace

DwellLists classify_and_dwell(const TelegraphTrace& trace, double threshold, Channel channel,
                              const DwellOptions& options) {
  const auto x = channel_samples(trace, channel);
  if (x.empty()) throw std::invalid_argument("empty trace");
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  if (!(threshold >= *mn && threshold <= *mx))
    throw std::invalid_argument("threshold outside data range");
  double persistence = options.min_persistence;
  if (persistence < 0.0)
    persistence = 3.0 * (trace.generator ? trace.generator->filter_time_constant()
                                         : tau_of_cutoff(kDefaultCutoff));
  const auto persist = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(persistence / trace.dt)));
  return dwell_runs(x, trace.dt, threshold, options.above_is_state2, persist);
}

DwellHistogram bin_dwells(std::span<const double> durations, const BinScheme& scheme) {
  if (!(scheme.ratio > 1.0)) throw std::invalid_argument("bin ratio must be > 1");
  DwellHistogram out;
  if (durations.empty()) return out;
  for (double d : durations)
    if (!(d > 0.0) || !std::isfinite(d)) throw std::invalid_argument("dwell durations must be positive");
  const auto [mn, mx] = std::minmax_element(durations.begin(), durations.end());
  const double base = scheme.base > 0.0 ? scheme.base : *mn;
  if (*mn < base) throw std::invalid_argument("dwell shorter than the first bin edge");

  std::vector<double> edges{base};
  while (edges.back() <= *mx) edges.push_back(edges.back() * scheme.ratio);
  std::vector<double> raw(edges.size() - 1, 0.0);
  for (double d : durations) {
    auto it = std::upper_bound(edges.begin(), edges.end(), d);
    raw[static_cast<std::size_t>(it - edges.begin()) - 1] += 1.0;
  }

  out.bin_edges.push_back(edges.front());
  double acc = 0.0;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    acc += raw[k];
    if (acc >= scheme.min_count) {
      out.bin_edges.push_back(edges[k + 1]);
      out.counts.push_back(acc);
      acc = 0.0;
    }
  }
  if (acc > 0.0) {
    // The remainder holds the longest dwell, so it extends to the last raw edge.
    if (out.counts.empty()) {
      out.bin_edges.push_back(edges.back());
      out.counts.push_back(acc);
    } else {
      out.bin_edges.back() = edges.back();
      out.counts.back() += acc;
    }
  }
  return out;
}

const char* to_string(FitMode m) { return m == FitMode::censored_mle ? "censored_mle" : "histogram_lsq"; }

double fit_switching_time(std::span<const Dwell> dwells) {
  double total = 0.0;
  std::size_t switches = 0;
  for (const auto& d : dwells) {
    total += d.duration;
    if (!d.censored) ++switches;
  }
  if (switches == 0) throw InsufficientData("no observed switches");
  return total / static_cast<double>(switches);
}

double fit_switching_time(const DwellHistogram& hist) {
  std::vector<double> lo, w, y, c;
  double total = 0.0;
  for (double n : hist.counts) total += n;
  for (std::size_t k = 0; k < hist.counts.size(); ++k) {
    if (hist.counts[k] <= 0.0) continue;
    const double width = hist.bin_edges[k + 1] - hist.bin_edges[k];
    lo.push_back(hist.bin_edges[k]);
    w.push_back(width);
    c.push_back(hist.counts[k]);
    y.push_back(std::log(hist.counts[k] / (total * width)));
  }
  if (c.size() < 2) throw InsufficientData("histogram fit needs >= 2 occupied bins");

  std::vector<double> x(c.size());
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = lo[k] + 0.5 * w[k];
  double tau = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      sw += c[k];
      sx += c[k] * x[k];
      sy += c[k] * y[k];
      sxx += c[k] * x[k] * x[k];
      sxy += c[k] * x[k] * y[k];
    }
    const double den = sw * sxx - sx * sx;
    if (!(den > 0.0)) throw InsufficientData("degenerate histogram fit");
    const double slope = (sw * sxy - sx * sy) / den;
    if (!(slope < 0.0)) throw InsufficientData("histogram fit: non-decaying dwell distribution");
    const double next = -1.0 / slope;
    const bool converged = tau > 0.0 && std::abs(next - tau) <= 1e-12 * next;
    tau = next;
    if (converged) break;
    // Point where the exponential equals its bin average.
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double r = w[k] / tau;
      x[k] = lo[k] - tau * std::log(-std::expm1(-r) / r);
    }
  }
  return tau;
}

const char* to_string(Censoring c) { return c == Censoring::measured ? "measured" : "floor_at_1_over_tau_m"; }

AdrReport estimate_adr(std::span<const TelegraphTrace> traces, const AdrOptions& options) {
  if (traces.empty()) throw std::invalid_argument("no traces");
  AdrReport report;
  for (const auto& tr : traces) {
    validate(tr);
    report.tau_m = std::max(report.tau_m, tr.duration);
  }

  std::vector<std::vector<double>> per_trace[2];
  std::vector<double> pooled[2];
  std::vector<double> pooled_amp;
  for (Channel ch : {Channel::amplitude, Channel::phase}) {
    const auto idx = static_cast<std::size_t>(ch);
    for (const auto& tr : traces) {
      per_trace[idx].push_back(channel_samples(tr, ch));
      pooled[idx].insert(pooled[idx].end(), per_trace[idx].back().begin(), per_trace[idx].back().end());
    }
    ChannelReport cr;
    cr.channel = ch;
    cr.histogram = make_histogram(pooled[idx], options.bimodality.bins);
    cr.bimodality = detect_bimodality(pooled[idx], options.bimodality);
    report.channels.push_back(cr);
  }

  const ChannelReport* chosen = nullptr;
  for (const auto& cr : report.channels) {
    if (options.channel && cr.channel != *options.channel) continue;
    if (!cr.bimodality) continue;
    if (!chosen || cr.bimodality->counts_at_threshold < chosen->bimodality->counts_at_threshold)
      chosen = &cr;
  }
  if (!chosen) {
    report.monostable = true;
    return report;
  }
  report.chosen = chosen->channel;
  const double threshold = chosen->bimodality->threshold;
  const auto idx = static_cast<std::size_t>(chosen->channel);

  // State 1 (low power) is the side with the larger mean homodyne amplitude.
  const auto& amp = pooled[static_cast<std::size_t>(Channel::amplitude)];
  double sum_above = 0, sum_below = 0, n_above = 0, n_below = 0;
  for (std::size_t k = 0; k < amp.size(); ++k) {
    if (pooled[idx][k] > threshold) {
      sum_above += amp[k];
      n_above += 1;
    } else {
      sum_below += amp[k];
      n_below += 1;
    }
  }
  const bool above_is_state2 = sum_above / std::max(n_above, 1.0) < sum_below / std::max(n_below, 1.0);

  std::vector<Dwell> dwells[2];
  for (std::size_t t = 0; t < traces.size(); ++t) {
    double persistence = options.dwell.min_persistence;
    if (persistence < 0.0)
      persistence = 3.0 * (traces[t].generator ? traces[t].generator->filter_time_constant()
                                               : tau_of_cutoff(kDefaultCutoff));
    const auto persist =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(persistence / traces[t].dt)));
    auto lists = dwell_runs(per_trace[idx][t], traces[t].dt, threshold, above_is_state2, persist);
    dwells[0].insert(dwells[0].end(), lists.state1.begin(), lists.state1.end());
    dwells[1].insert(dwells[1].end(), lists.state2.begin(), lists.state2.end());
  }

  const double floor_rate = 1.0 / report.tau_m;
  double smallest_candidate = floor_rate;
  {
    double best = kInf;
    for (double r : options.candidate_rates)
      if (r > floor_rate && r < best) best = r;
    if (std::isfinite(best)) smallest_candidate = best;
  }

  AdrEstimate est;
  double rates[2];
  Censoring flags[2];
  std::size_t complete[2];
  DwellHistogram hists[2];
  for (int s = 0; s < 2; ++s) {
    double total = 0.0;
    std::size_t switches = 0;
    std::vector<double> complete_durations;
    for (const auto& d : dwells[s]) {
      total += d.duration;
      switches += !d.censored;
      if (!d.censored && !d.truncated) complete_durations.push_back(d.duration);
    }
    complete[s] = complete_durations.size();
    hists[s] = bin_dwells(complete_durations, options.bins);
    double rate = total > 0.0 ? static_cast<double>(switches) / total : 0.0;
    if (options.fit == FitMode::histogram_lsq) {
      try {
        rate = 1.0 / fit_switching_time(hists[s]);
      } catch (const InsufficientData&) {
      }
    }
    flags[s] = Censoring::measured;
    if (!(rate >= floor_rate)) {
      rate = smallest_candidate;
      flags[s] = Censoring::floor_at_1_over_tau_m;
    }
    rates[s] = rate;
  }
  est.rates = {rates[0], rates[1]};
  est.adr = est.rates.sum();
  est.censoring_12 = flags[0];
  est.censoring_21 = flags[1];
  report.estimate = est;
  report.complete_dwells_1 = complete[0];
  report.complete_dwells_2 = complete[1];
  report.histogram_1 = std::move(hists[0]);
  report.histogram_2 = std::move(hists[1]);
  return report;
}

}  // namespace cqed
