// telegraph.hpp: two-state switching model, its 4x4 Liouvillian, synthetic
// homodyne telegraph traces, and the threshold/dwell-time pipeline that
// recovers switching rates and the asymptotic decay rate (ADR) from traces.
//
// State 1 is the low-power (transmitting) state, state 2 the high-power
// state. gamma_12 is the 1 -> 2 rate, gamma_21 the 2 -> 1 rate.

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cqed/model.hpp"

namespace cqed {

struct RatePair {
  double gamma_12{0.0};
  double gamma_21{0.0};

  double sum() const { return gamma_12 + gamma_21; }
  bool operator==(const RatePair&) const = default;
};

/// Throws ConfigError unless both rates are >= 0 and not both zero.
const RatePair& validate(const RatePair& rates);

/// Liouvillian of rho' = -i[H, rho] + g12 D[|2><1|] rho + g21 D[|1><2|] rho with
/// H = e_21 |2><2|, acting on (rho_11, rho_22, rho_12, rho_21). Rates must be
/// finite and >= 0; zero rates are allowed here.
Eigen::Matrix4cd rate_liouvillian(double e_21, const RatePair& rates);

/// Asymptotic decay rate gamma_12 + gamma_21.
double adr_from_rates(const RatePair& rates);

struct IqPoint {
  double amplitude{0.0};
  double phase{0.0};  ///< theta = atan2(I, Q)
};

struct TelegraphConfig {
  RatePair rates{};
  double duration{0.3};            ///< tau_m [s]
  double dt{2e-7};                 ///< sample interval after down-sampling [s]
  IqPoint level1{1.0, 0.6};        ///< low-power state (A, theta)
  IqPoint level2{0.7, -0.4};       ///< high-power state (A, theta)
  /// Per-quadrature std of white noise referred to the digitizer rate, before
  /// the low-pass filter.
  double gaussian_sigma{0.05};
  double digitizer_rate{50e6};     ///< [samples/s]
  double filter_cutoff{1.9e6};     ///< single-pole low-pass cutoff [Hz]
  int initial_state{0};            ///< 1, 2, or 0 = draw from the stationary distribution
  std::uint64_t seed{1};

  /// Distance of the two (I, Q) level means divided by gaussian_sigma.
  double snr() const;
  void set_snr(double snr);
  double filter_time_constant() const;
  /// Stationary std of the filtered noise at the output.
  double output_sigma() const;
};

struct TelegraphTrace {
  double dt{0.0};
  double duration{0.0};
  std::vector<double> i_samples;
  std::vector<double> q_samples;
  std::vector<std::uint8_t> truth_labels;  ///< 1 or 2; empty for measured data
  std::optional<TelegraphConfig> generator{};

  std::size_t size() const { return i_samples.size(); }
};

/// Throws std::invalid_argument on inconsistent lengths or dt <= 0.
void validate(const TelegraphTrace& trace);

/// Continuous-time two-state Markov chain sampled every dt, filtered by a
/// single-pole low-pass (exact for piecewise-constant input) plus filtered
/// white noise. Deterministic given config.seed. Zero rates make a state
/// absorbing; both rates may be zero only with an explicit initial_state.
TelegraphTrace simulate_telegraph(const TelegraphConfig& config);

/// A = sqrt(I^2 + Q^2); theta = atan2(I, Q) in (-pi, pi]; theta = 0 when A = 0.
IqPoint homodyne_from_iq(double i, double q);

enum class Channel { amplitude, phase };
const char* to_string(Channel c);

struct BimodalityOptions {
  int bins{200};
  int smoothing_window{5};
  double prominence_fraction{0.1};  ///< of the maximum, on log(1 + counts)
  double valley_fraction{0.5};      ///< valley <= fraction x lower peak (counts)
  double min_mode_fraction{1e-3};   ///< each side of the valley holds at least this share
};

struct Histogram {
  double lo{0.0};
  double hi{0.0};
  std::vector<double> counts;

  double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  double center(std::size_t k) const { return lo + (static_cast<double>(k) + 0.5) * bin_width(); }
  std::size_t bin_of(double x) const;
};

Histogram make_histogram(std::span<const double> samples, int bins);

struct Bimodality {
  double threshold{0.0};
  double peak_low{0.0};
  double peak_high{0.0};
  double counts_at_threshold{0.0};
};

/// Mean of the two dominant histogram peak locations when the samples are
/// bimodal, nullopt otherwise (including constant or too-short input).
std::optional<Bimodality> detect_bimodality(std::span<const double> samples,
                                            const BimodalityOptions& options = {});

struct Dwell {
  double duration{0.0};
  int state{1};
  bool censored{false};   ///< runs into the end of the trace: no observed switch
  bool truncated{false};  ///< starts with the trace; its length is unknown, its end is a switch
};

struct DwellLists {
  std::vector<Dwell> state1;
  std::vector<Dwell> state2;
};

struct DwellOptions {
  /// A state change is accepted only if the new state persists this long.
  /// Negative: 3 filter time constants of the trace's generator (1.9 MHz
  /// default when unknown).
  double min_persistence{-1.0};
  /// Samples with channel value above the threshold belong to state 2 when
  /// true, to state 1 otherwise.
  bool above_is_state2{false};
};

/// Channel samples of a trace (amplitude or phase).
std::vector<double> channel_samples(const TelegraphTrace& trace, Channel channel);

/// Thresholds a trace, de-bounces, and splits it into maximal runs.
/// Throws std::invalid_argument if the threshold lies outside the sample range.
DwellLists classify_and_dwell(const TelegraphTrace& trace, double threshold, Channel channel,
                              const DwellOptions& options = {});

struct DwellHistogram {
  std::vector<double> bin_edges;
  std::vector<double> counts;
};

struct BinScheme {
  double base{0.0};  ///< first edge; <= 0 means the shortest dwell
  double ratio{2.0};
  double min_count{5.0};
};

/// Geometric bins, then left-to-right merging of adjacent bins until every
/// occupied bin holds at least min_count dwells (a short remainder joins the
/// last merged bin).
DwellHistogram bin_dwells(std::span<const double> durations, const BinScheme& scheme = {});

enum class FitMode { censored_mle, histogram_lsq };
const char* to_string(FitMode m);

/// Thrown when a fit has too little data.
class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Censored MLE: total dwell time (censored included) / number of observed
/// switches. A truncated leading dwell ends in a switch and, the dwell law
/// being memoryless, counts as an event.
double fit_switching_time(std::span<const Dwell> dwells);
/// Weighted least squares of log density against the in-bin mean-density
/// time; needs >= 2 occupied bins.
double fit_switching_time(const DwellHistogram& hist);

enum class Censoring { measured, floor_at_1_over_tau_m };
const char* to_string(Censoring c);

struct AdrEstimate {
  RatePair rates{};
  double adr{0.0};
  Censoring censoring_12{Censoring::measured};
  Censoring censoring_21{Censoring::measured};
};

struct AdrOptions {
  std::optional<Channel> channel{};  ///< nullopt: fewest-counts-at-threshold rule
  BimodalityOptions bimodality{};
  DwellOptions dwell{};
  BinScheme bins{};
  FitMode fit{FitMode::censored_mle};
  /// Rates extracted elsewhere (e.g. neighbouring drive points) from which a
  /// censored direction takes the smallest value above 1/tau_m. When none
  /// qualifies the rate is set to 1/tau_m.
  std::vector<double> candidate_rates{};
};

struct ChannelReport {
  Channel channel{Channel::phase};
  std::optional<Bimodality> bimodality{};
  Histogram histogram{};
};

struct AdrReport {
  bool monostable{false};
  std::optional<AdrEstimate> estimate{};
  Channel chosen{Channel::phase};
  std::vector<ChannelReport> channels{};
  std::size_t complete_dwells_1{0};
  std::size_t complete_dwells_2{0};
  DwellHistogram histogram_1{};
  DwellHistogram histogram_2{};
  double tau_m{0.0};
};

/// Full pipeline over a bundle of traces taken at the same drive point:
/// amplitude/phase histograms, bimodality, channel choice, thresholding,
/// dwell pooling, binning, exponential fit, censoring rule.
AdrReport estimate_adr(std::span<const TelegraphTrace> traces, const AdrOptions& options = {});

/// Generates `count` traces with seeds config.seed, config.seed + 1, ...
std::vector<TelegraphTrace> simulate_bundle(const TelegraphConfig& config, int count);

}  // namespace cqed
