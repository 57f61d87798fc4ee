#include "cqed/mft.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cqed {

IntegratorConfig IntegratorConfig::defaults_for(const LatticeParams& params) {
  IntegratorConfig c;
  c.t_transient = 200.0 / params.kappa;
  c.t_average = 200.0 / params.kappa;
  c.dt_max = 1.0 / params.kappa;
  return c;
}

const IntegratorConfig& validate(const IntegratorConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(what);
  };
  require(c.dt_max > 0.0 && std::isfinite(c.dt_max), "dt_max must be > 0");
  require(c.rel_tol > 0.0 && c.abs_tol > 0.0, "integrator tolerances must be > 0");
  require(c.t_transient > 0.0 && c.t_average > 0.0, "t_transient and t_average must be > 0");
  require(c.divergence_bound > 0.0, "divergence_bound must be > 0");
  require(c.average_samples >= 10, "average_samples must be >= 10");
  require(c.fixed_point_threshold > 0.0, "fixed_point_threshold must be > 0");
  return c;
}

const char* to_string(Classification c) {
  return c == Classification::fixed_point ? "fixed_point" : "non_stationary";
}

// ---------------------------------------------------------------------------

MeanFieldSystem::MeanFieldSystem(const LatticeParams& params, const DriveSpec& drive)
    : params_(params),
      drive_(drive),
      n_(params.n_sites),
      drive0_(params.drive_site - 1),
      cav_detuning_(params.omega_r - drive.omega_p),
      qubit_detuning_(static_cast<std::size_t>(params.n_sites)) {
  for (int j = 0; j < n_; ++j)
    qubit_detuning_[static_cast<std::size_t>(j)] = params.qubit_frequency(j) - drive.omega_p;
}

void MeanFieldSystem::rhs(double time, const double* y, double* dy) const {
  const double half_kappa = 0.5 * params_.kappa;
  const double half_gamma = 0.5 * params_.gamma_q;
  const double g = params_.g_coupling;
  const double t = params_.t_hop;
  const double u = params_.u_kerr;
  const double dc = cav_detuning_;
  const cplx eps = drive_.amplitude(time);

  const double* a = y;
  const double* b = y + 2 * n_;
  double* da = dy;
  double* db = dy + 2 * n_;

  for (int j = 0; j < n_; ++j) {
    const int k = 2 * j;
    double sr = 0.0, si = 0.0;
    if (j > 0) {
      sr += a[k - 2];
      si += a[k - 1];
    }
    if (j + 1 < n_) {
      sr += a[k + 2];
      si += a[k + 3];
    }
    // bracket = (dc - i kappa/2) a + g b + t s + eps delta; d/dt = -i * bracket
    double zr = dc * a[k] + g * b[k] + t * sr;
    double zi = dc * a[k + 1] + g * b[k + 1] + t * si;
    if (j == drive0_) {
      zr += eps.real();
      zi += eps.imag();
    }
    da[k] = zi - half_kappa * a[k];
    da[k + 1] = -zr - half_kappa * a[k + 1];

    const double br = b[k], bi = b[k + 1];
    const double shift = qubit_detuning_[static_cast<std::size_t>(j)] + u * (br * br + bi * bi);
    const double wr = shift * br + g * a[k];
    const double wi = shift * bi + g * a[k + 1];
    db[k] = wi - half_gamma * br;
    db[k + 1] = -wr - half_gamma * bi;
  }
}

double MeanFieldSystem::linear_frequency_scale() const {
  const double g = std::abs(params_.g_coupling);
  double scale = std::abs(cav_detuning_) + 2.0 * std::abs(params_.t_hop) + g;
  for (double d : qubit_detuning_) scale = std::max(scale, std::abs(d) + g);
  return std::max({scale, params_.kappa, params_.gamma_q});
}

double MeanFieldSystem::frequency_scale(const double* y) const {
  double beta2 = 0.0;
  for (int j = 0; j < n_; ++j) {
    const double* b = y + 2 * n_ + 2 * j;
    beta2 = std::max(beta2, b[0] * b[0] + b[1] * b[1]);
  }
  double cav = std::abs(cav_detuning_) + 2.0 * std::abs(params_.t_hop) + std::abs(params_.g_coupling);
  double qub = std::abs(params_.g_coupling) + std::abs(params_.u_kerr) * beta2;
  for (double d : qubit_detuning_) qub = std::max(qub, std::abs(d) + std::abs(params_.g_coupling) +
                                                           std::abs(params_.u_kerr) * beta2);
  return std::max({cav, qub, params_.kappa, params_.gamma_q});
}

std::vector<double> pack_state(const MeanFieldState& s) {
  const std::size_t n = s.alpha.size();
  std::vector<double> y(4 * n);
  for (std::size_t j = 0; j < n; ++j) {
    y[2 * j] = s.alpha[j].real();
    y[2 * j + 1] = s.alpha[j].imag();
    y[2 * n + 2 * j] = s.beta[j].real();
    y[2 * n + 2 * j + 1] = s.beta[j].imag();
  }
  return y;
}

MeanFieldState unpack_state(std::span<const double> y, int n_sites) {
  MeanFieldState s(n_sites);
  const std::size_t n = static_cast<std::size_t>(n_sites);
  for (std::size_t j = 0; j < n; ++j) {
    s.alpha[j] = {y[2 * j], y[2 * j + 1]};
    s.beta[j] = {y[2 * n + 2 * j], y[2 * n + 2 * j + 1]};
  }
  return s;
}

namespace {

void check_state(const LatticeParams& params, const MeanFieldState& s) {
  if (s.n_sites() != params.n_sites || s.beta.size() != s.alpha.size())
    throw std::invalid_argument("state length does not match n_sites");
  if (!s.all_finite()) throw NumericError("non-finite input amplitudes");
}

// Squared magnitude of the largest complex entry, or +inf if any is non-finite.
double max_abs2(const std::vector<double>& y) {
  double m = 0.0;
  for (std::size_t i = 0; i < y.size(); i += 2) {
    const double v = y[i] * y[i] + y[i + 1] * y[i + 1];
    if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
    m = std::max(m, v);
  }
  return m;
}

class Stepper {
 public:
  Stepper(const MeanFieldSystem& sys, const IntegratorConfig& cfg)
      : sys_(sys), cfg_(cfg), dim_(sys.dimension()) {
    for (auto* v : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &ytmp_, &ynew_, &y0_, &f0_})
      v->resize(dim_);
  }

  long run(std::vector<double>& y, double t0, double t_end, double t_sample, double sample_dt,
           const SampleObserver& observer) {
    double t = t0;
    sys_.rhs(t, y.data(), k1_.data());
    double next_sample = t_sample;
    auto emit = [&](double ta, double tb, const std::vector<double>& ya, const std::vector<double>& fa,
                    const std::vector<double>& yb, const std::vector<double>& fb) {
      if (!observer || sample_dt <= 0.0) return;
      const double h = tb - ta;
      while (next_sample <= tb * (1.0 + 1e-14) && next_sample <= t_end * (1.0 + 1e-14)) {
        if (next_sample >= ta) {
          const double th = h > 0.0 ? (next_sample - ta) / h : 1.0;
          const double th2 = th * th, th3 = th2 * th;
          const double h00 = 2 * th3 - 3 * th2 + 1, h10 = th3 - 2 * th2 + th;
          const double h01 = -2 * th3 + 3 * th2, h11 = th3 - th2;
          for (std::size_t i = 0; i < dim_; ++i)
            ytmp_[i] = h00 * ya[i] + h10 * h * fa[i] + h01 * yb[i] + h11 * h * fb[i];
          observer(next_sample, ytmp_);
        }
        ++samples_emitted_;
        next_sample = t_sample + static_cast<double>(samples_emitted_) * sample_dt;
      }
    };
    // Samples at or before t0.
    if (observer && sample_dt > 0.0) {
      while (next_sample <= t0) {
        if (next_sample == t0) observer(t0, y);
        ++samples_emitted_;
        next_sample = t_sample + static_cast<double>(samples_emitted_) * sample_dt;
      }
    }

    long accepted = 0;
    if (t_end <= t0) return 0;
    const double bound2 = cfg_.divergence_bound * cfg_.divergence_bound;

    if (cfg_.method == IntegratorConfig::Method::rk4_fixed) {
      const double h_nom = cfg_.dt_max;
      const long n_steps = static_cast<long>(std::ceil((t_end - t0) / h_nom - 1e-9));
      for (long s = 0; s < n_steps; ++s) {
        const double ta = t0 + static_cast<double>(s) * h_nom;
        const double tb = (s + 1 == n_steps) ? t_end : t0 + static_cast<double>(s + 1) * h_nom;
        const double h = tb - ta;
        y0_ = y;
        f0_ = k1_;
        for (std::size_t i = 0; i < dim_; ++i) ytmp_[i] = y[i] + 0.5 * h * k1_[i];
        sys_.rhs(ta + 0.5 * h, ytmp_.data(), k2_.data());
        for (std::size_t i = 0; i < dim_; ++i) ytmp_[i] = y[i] + 0.5 * h * k2_[i];
        sys_.rhs(ta + 0.5 * h, ytmp_.data(), k3_.data());
        for (std::size_t i = 0; i < dim_; ++i) ytmp_[i] = y[i] + h * k3_[i];
        sys_.rhs(tb, ytmp_.data(), k4_.data());
        for (std::size_t i = 0; i < dim_; ++i)
          y[i] += h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
        if (max_abs2(y) > bound2) throw diverged(tb);
        sys_.rhs(tb, y.data(), k1_.data());
        emit(ta, tb, y0_, f0_, y, k1_);
        ++accepted;
      }
      return accepted;
    }

    // Dormand-Prince 5(4) with PI step-size control.
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                     a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                     a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                     a75 = -2187.0 / 6784, a76 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                     e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    constexpr double safe = 0.9, beta = 0.04, expo1 = 0.2 - beta * 0.75;
    constexpr double fac_min = 0.2, fac_max = 10.0;

    double h_cap = cfg_.dt_max;
    if (cfg_.max_phase_per_step > 0.0)
      h_cap = std::min(h_cap, cfg_.max_phase_per_step / sys_.linear_frequency_scale());
    double h = std::min(h_cap, 0.05 / sys_.frequency_scale(y.data()));
    double fac_old = 1e-4;
    const double h_min = 1e-14 * std::max(std::abs(t_end), std::abs(t0)) + 1e-300;

    while (t < t_end) {
      // The Kerr shift U|beta|^2 joins the phase cap once the qubits fill up.
      if (cfg_.max_phase_per_step > 0.0)
        h = std::min(h, cfg_.max_phase_per_step / sys_.frequency_scale(y.data()));
      bool last = false;
      if (t + h >= t_end) {
        h = t_end - t;
        last = true;
      }
      const double* yp = y.data();
      for (std::size_t i = 0; i < dim_; ++i) ytmp_[i] = yp[i] + h * a21 * k1_[i];
      sys_.rhs(t + c2 * h, ytmp_.data(), k2_.data());
      for (std::size_t i = 0; i < dim_; ++i) ytmp_[i] = yp[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
      sys_.rhs(t + c3 * h, ytmp_.data(), k3_.data());
      for (std::size_t i = 0; i < dim_; ++i)
        ytmp_[i] = yp[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
      sys_.rhs(t + c4 * h, ytmp_.data(), k4_.data());
      for (std::size_t i = 0; i < dim_; ++i)
        ytmp_[i] = yp[i] + h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
      sys_.rhs(t + c5 * h, ytmp_.data(), k5_.data());
      for (std::size_t i = 0; i < dim_; ++i)
        ytmp_[i] = yp[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] + a64 * k4_[i] +
                                a65 * k5_[i]);
      sys_.rhs(t + h, ytmp_.data(), k6_.data());
      for (std::size_t i = 0; i < dim_; ++i)
        ynew_[i] = yp[i] + h * (a71 * k1_[i] + a73 * k3_[i] + a74 * k4_[i] + a75 * k5_[i] +
                                a76 * k6_[i]);
      sys_.rhs(t + h, ynew_.data(), k7_.data());

      double err = 0.0;
      for (std::size_t i = 0; i < dim_; ++i) {
        const double sk = cfg_.abs_tol + cfg_.rel_tol * std::abs(yp[i]);
        const double e = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] + e6 * k6_[i] +
                              e7 * k7_[i]) / sk;
        err += e * e;
      }
      err = std::sqrt(err / static_cast<double>(dim_));

      if (!std::isfinite(err)) {
        h *= 0.1;
        if (h < h_min) throw diverged(t);
        continue;
      }
      const double fac11 = std::pow(err, expo1);
      if (err <= 1.0) {
        double fac = fac11 / std::pow(fac_old, beta);
        fac = std::clamp(fac / safe, 1.0 / fac_max, 1.0 / fac_min);
        fac_old = std::max(err, 1e-4);
        const double t_new = last ? t_end : t + h;
        if (max_abs2(ynew_) > bound2) throw diverged(t_new);
        y0_.swap(y);
        y.swap(ynew_);
        f0_.swap(k1_);
        k1_.swap(k7_);
        emit(t, t_new, y0_, f0_, y, k1_);
        t = t_new;
        ++accepted;
        h = std::min(h / fac, h_cap);
      } else {
        h /= std::min(1.0 / fac_min, fac11 / safe);
        if (h < h_min) throw diverged(t);
      }
    }
    return accepted;
  }

 private:
  DivergenceError diverged(double t) const {
    return DivergenceError("mean-field integration diverged at t = " + std::to_string(t) + " s", t);
  }

  const MeanFieldSystem& sys_;
  const IntegratorConfig& cfg_;
  std::size_t dim_;
  long samples_emitted_{0};
  std::vector<double> k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_, ynew_, y0_, f0_;
};

}  // namespace

MeanFieldState mft_rhs(const MeanFieldState& state, const LatticeParams& params,
                       const DriveSpec& drive, double time) {
  check_state(params, state);
  MeanFieldSystem sys(params, drive);
  const auto y = pack_state(state);
  std::vector<double> dy(y.size());
  sys.rhs(time, y.data(), dy.data());
  return unpack_state(dy, params.n_sites);
}

long integrate_packed(const MeanFieldSystem& system, std::vector<double>& packed, double t0,
                      double t_end, const IntegratorConfig& config, double t_first_sample,
                      double sample_dt, const SampleObserver& observer) {
  if (packed.size() != system.dimension())
    throw std::invalid_argument("packed state has wrong dimension");
  Stepper stepper(system, config);
  return stepper.run(packed, t0, t_end, t_first_sample, sample_dt, observer);
}

Trajectory integrate(const MeanFieldState& state0, const LatticeParams& params,
                     const DriveSpec& drive, const IntegratorConfig& config, double t_end,
                     double sample_dt) {
  if (!(t_end > 0.0)) throw std::invalid_argument("t_end must be > 0");
  if (!(sample_dt > 0.0)) throw std::invalid_argument("sample_dt must be > 0");
  check_state(params, state0);
  MeanFieldSystem sys(params, drive);
  auto y = pack_state(state0);
  Trajectory traj;
  integrate_packed(sys, y, 0.0, t_end, config, 0.0, sample_dt,
                   [&](double t, std::span<const double> p) {
                     traj.times.push_back(t);
                     traj.states.push_back(unpack_state(p, params.n_sites));
                   });
  return traj;
}

MeanFieldState linear_steady_state(const LatticeParams& params, const DriveSpec& drive) {
  validate(params);
  if (params.u_kerr != 0.0) throw ConfigError("linear_steady_state requires u_kerr = 0");
  const int n = params.n_sites;
  const cplx i{0.0, 1.0};
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(2 * n);
  for (int j = 0; j < n; ++j) {
    m(j, j) = (params.omega_r - drive.omega_p) - i * (0.5 * params.kappa);
    m(j, n + j) = params.g_coupling;
    if (j > 0) m(j, j - 1) = params.t_hop;
    if (j + 1 < n) m(j, j + 1) = params.t_hop;
    m(n + j, n + j) = (params.qubit_frequency(j) - drive.omega_p) - i * (0.5 * params.gamma_q);
    m(n + j, j) = params.g_coupling;
  }
  rhs(params.drive_site - 1) = -drive.epsilon * drive.envelope.stop;
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(m);
  if (!lu.isInvertible()) throw NumericError("singular linear steady-state system");
  const Eigen::VectorXcd x = lu.solve(rhs);
  MeanFieldState s(n);
  for (int j = 0; j < n; ++j) {
    s.alpha[static_cast<std::size_t>(j)] = x(j);
    s.beta[static_cast<std::size_t>(j)] = x(n + j);
  }
  return s;
}

Classification classify_attractor(std::span<const double> tail, double threshold) {
  if (tail.size() < 10) throw std::invalid_argument("averaging window shorter than 10 samples");
  const double n = static_cast<double>(tail.size());
  const double mean = std::accumulate(tail.begin(), tail.end(), 0.0) / n;
  double var = 0.0;
  for (double x : tail) var += (x - mean) * (x - mean);
  var /= n;
  const double sd = std::sqrt(var);
  // Exact-zero tails (no drive) count as a fixed point.
  return sd <= threshold * mean || sd == 0.0 ? Classification::fixed_point
                                             : Classification::non_stationary;
}

SteadyStateResult find_steady_state(const LatticeParams& params, const DriveSpec& drive,
                                    const MeanFieldState& init, const IntegratorConfig& config) {
  validate(params);
  validate(drive);
  validate(config);
  check_state(params, init);

  MeanFieldSystem sys(params, drive);
  auto y = pack_state(init);
  const double t_lead = drive.envelope.kind == Envelope::Kind::constant ? 0.0 : drive.envelope.duration;
  const double t_start = t_lead + config.t_transient;
  const double t_end = t_start + config.t_average;
  const double sample_dt = config.t_average / config.average_samples;
  const std::size_t out = 2 * static_cast<std::size_t>(params.output_site - 1);

  SteadyStateResult r;
  r.tail_abs.reserve(static_cast<std::size_t>(config.average_samples));
  cplx alpha_sum{};
  integrate_packed(sys, y, 0.0, t_end, config, t_start + sample_dt, sample_dt,
                   [&](double, std::span<const double> p) {
                     const cplx a{p[out], p[out + 1]};
                     alpha_sum += a;
                     r.tail_abs.push_back(std::abs(a));
                   });
  if (r.tail_abs.size() < 10) throw NumericError("averaging window produced too few samples");

  const double n = static_cast<double>(r.tail_abs.size());
  r.alpha_out_mean = alpha_sum / n;
  r.alpha_abs_mean = std::accumulate(r.tail_abs.begin(), r.tail_abs.end(), 0.0) / n;
  double var = 0.0;
  for (double x : r.tail_abs) var += (x - r.alpha_abs_mean) * (x - r.alpha_abs_mean);
  r.alpha_abs_variance = var / n;
  r.alpha_abs2_mean = r.alpha_abs_mean * r.alpha_abs_mean + r.alpha_abs_variance;
  // A tail below the absolute tolerance is the decaying vacuum.
  const double peak = *std::max_element(r.tail_abs.begin(), r.tail_abs.end());
  r.classification = peak <= config.abs_tol ? Classification::fixed_point
                                            : classify_attractor(r.tail_abs, config.fixed_point_threshold);
  r.final_state = unpack_state(y, params.n_sites);
  return r;
}

}  // namespace cqed
