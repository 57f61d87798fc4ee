#include "cqed/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cqed {

bool MeanFieldState::all_finite() const {
  auto finite = [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); };
  return std::all_of(alpha.begin(), alpha.end(), finite) &&
         std::all_of(beta.begin(), beta.end(), finite);
}

double MeanFieldState::max_abs() const {
  double m = 0.0;
  for (const auto& z : alpha) m = std::max(m, std::abs(z));
  for (const auto& z : beta) m = std::max(m, std::abs(z));
  return m;
}

LatticeParams paper_default_params() {
  LatticeParams p;
  p.n_sites = 72;
  p.omega_r = kTwoPi * 7.5e9;
  p.omega_q = kTwoPi * 8.4e9;
  p.u_kerr = -kTwoPi * 180e6;
  p.g_coupling = kTwoPi * 265e6;
  p.t_hop = kTwoPi * 144e6;
  p.kappa = kTwoPi * 1.6e6;
  p.gamma_q = 1.0 / 1e-6;
  p.drive_site = 1;
  p.output_site = 72;
  return p;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

}  // namespace

const LatticeParams& validate(const LatticeParams& p) {
  require(p.n_sites >= 1, "n_sites must be >= 1");
  auto in_range = [&](int site, const char* name) {
    require(site >= 1 && site <= p.n_sites, std::string(name) + " " + std::to_string(site) +
                                                ": site out of range [1, " +
                                                std::to_string(p.n_sites) + "]");
  };
  in_range(p.drive_site, "drive_site");
  in_range(p.output_site, "output_site");
  require(p.drive_site == 1, "drive acts on site 1 only (drive_site must be 1)");
  for (double v : {p.omega_r, p.omega_q, p.u_kerr, p.g_coupling, p.t_hop, p.kappa, p.gamma_q})
    require(std::isfinite(v), "all frequencies and rates must be finite");
  require(p.kappa > 0.0, "lossless chain: kappa must be > 0");
  require(p.gamma_q >= 0.0, "gamma_q must be >= 0");
  if (!p.omega_q_site.empty()) {
    require(static_cast<int>(p.omega_q_site.size()) == p.n_sites,
            "omega_q_site must have n_sites entries");
    for (double v : p.omega_q_site) require(std::isfinite(v), "omega_q_site entries must be finite");
  }
  return p;
}

const DriveSpec& validate(const DriveSpec& d) {
  require(std::isfinite(d.omega_p), "drive frequency must be finite");
  require(std::isfinite(d.epsilon.real()) && std::isfinite(d.epsilon.imag()),
          "drive amplitude must be finite");
  const auto& e = d.envelope;
  require(std::isfinite(e.start) && std::isfinite(e.stop) && std::isfinite(e.duration),
          "envelope parameters must be finite");
  require(e.duration >= 0.0, "envelope duration must be >= 0");
  require(e.start >= 0.0 && e.stop >= 0.0, "envelope scale factors must be >= 0");
  return d;
}

}  // namespace cqed
