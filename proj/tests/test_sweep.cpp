#include <doctest.h>

#include <cmath>

#include "cqed/sweep.hpp"
#include "oracles.hpp"

using namespace cqed;

namespace {

LatticeParams chain(int n, double u) {
  LatticeParams p;
  p.n_sites = n;
  p.omega_r = 0.0;
  p.omega_q = 3.0;
  p.t_hop = 1.0;
  p.g_coupling = 0.6;
  p.kappa = 0.2;
  p.gamma_q = 0.3;
  p.u_kerr = u;
  p.output_site = n;
  return p;
}

SweepOptions options(const LatticeParams& p) {
  auto o = SweepOptions::defaults_for(p);
  o.integrator.t_transient = 400.0;
  o.integrator.t_average = 100.0;
  o.integrator.average_samples = 400;
  o.integrator.rel_tol = 1e-9;
  o.integrator.abs_tol = 1e-12;
  return o;
}

}  // namespace

TEST_SUITE("sweep") {
  TEST_CASE("axes") {
    const auto l = log_spaced(1.0, 1000.0, 4);
    CHECK(l.front() == 1.0);
    CHECK(l.back() == 1000.0);
    CHECK(l[1] == doctest::Approx(10.0));
    CHECK(log_spaced(2.0, 5.0, 1) == std::vector<double>{2.0});
    CHECK_THROWS(log_spaced(0.0, 1.0, 3));
    const auto s = lin_spaced(-1.0, 1.0, 5);
    CHECK(s[2] == doctest::Approx(0.0));
    CHECK(s.back() == 1.0);
  }

  TEST_CASE("protocol names round trip") {
    for (auto p : {Protocol::fresh_start, Protocol::sweep_up, Protocol::sweep_down, Protocol::seed_vacuum,
                   Protocol::seed_excited})
      CHECK(protocol_from_string(to_string(p)) == p);
    CHECK_THROWS_AS(protocol_from_string("sideways"), ConfigError);
  }

  TEST_CASE("linear map equals the oracle cell by cell") {
    const auto p = chain(4, 0.0);
    const auto o = options(p);
    const auto freqs = lin_spaced(-2.0, 2.0, 7);
    const auto powers = log_spaced(0.01, 1.0, 3);
    const auto g = frequency_power_map(p, freqs, powers, Protocol::fresh_start, o);
    double ref = 0.0;
    for (double w : freqs) ref = std::max(ref, std::abs(oracle::linear_chain(p, w, powers[0]).alpha[3]) / powers[0]);
    CHECK(g.reference_gain == doctest::Approx(ref).epsilon(1e-6));
    for (std::size_t f = 0; f < freqs.size(); ++f)
      for (std::size_t k = 0; k < powers.size(); ++k) {
        const cplx want = oracle::linear_chain(p, freqs[f], powers[k]).alpha[3];
        const auto& c = g.at(f, k);
        CHECK(c.classification == Classification::fixed_point);
        CHECK(std::abs(c.alpha_out_mean - want) <= 1e-6 * std::abs(want));
        CHECK(c.transmission_db == doctest::Approx(20.0 * std::log10(std::abs(want) / (ref * powers[k]))).epsilon(1e-6));
        CHECK(std::abs(*c.g2 - 1.0) < 1e-9);
      }
  }

  TEST_CASE("linear chain has no hysteresis and no seed dependence") {
    const auto p = chain(3, 0.0);
    const auto o = options(p);
    const auto freqs = lin_spaced(-1.5, 1.5, 3);
    const auto powers = log_spaced(0.05, 5.0, 3);
    const auto h = hysteresis_map(p, freqs, powers, o);
    for (double d : h.difference) CHECK(std::abs(d) < 1e-5);
    CHECK(h.hysteretic_cells().empty());
    const auto s = two_seed_map(p, freqs, powers, o);
    for (double d : s.difference) CHECK(std::abs(d) < 1e-5);
  }

  TEST_CASE("serial and parallel maps are identical") {
    const auto p = chain(3, -0.5);
    const auto o = options(p);
    const auto freqs = lin_spaced(-1.0, 1.0, 4);
    const auto powers = log_spaced(0.05, 2.0, 3);
    for (auto protocol : {Protocol::fresh_start, Protocol::seed_excited}) {
      const auto a = frequency_power_map(p, freqs, powers, protocol, o);
      const auto b = serial::frequency_power_map(p, freqs, powers, protocol, o);
      CHECK(a == b);
    }
    const auto ha = hysteresis_map(p, freqs, powers, o);
    const auto hb = serial::hysteresis_map(p, freqs, powers, o);
    CHECK(ha.grid_up == hb.grid_up);
    CHECK(ha.grid_down == hb.grid_down);
    CHECK(ha.difference == hb.difference);
  }

  TEST_CASE("excited seed") {
    const auto p = chain(4, -0.5);
    const DriveSpec d{0.3, 0.5, {}};
    const auto a = excited_seed(p, d, 10.0, 7, 3);
    const auto b = excited_seed(p, d, 10.0, 7, 3);
    const auto c = excited_seed(p, d, 10.0, 7, 4);
    CHECK(a == b);
    CHECK_FALSE(a == c);
    auto lin = p;
    lin.u_kerr = 0.0;
    double peak = 0.0;
    for (const auto& x : linear_steady_state(lin, d).alpha) peak = std::max(peak, std::abs(x));
    for (const auto& x : a.alpha) CHECK(std::abs(x) == doctest::Approx(10.0 * peak));
    for (const auto& x : a.beta) CHECK(x == cplx(0.0));
  }

  TEST_CASE("axis preconditions") {
    const auto p = chain(2, -0.5);
    const auto o = options(p);
    CHECK_THROWS_AS(frequency_power_map(p, {0.0}, {}, Protocol::fresh_start, o), std::invalid_argument);
    CHECK_THROWS_AS(hysteresis_map(p, {0.0}, {}, o), std::invalid_argument);
    CHECK_THROWS_AS(hysteresis_map(p, {0.0}, {1.0, 0.5}, o), std::invalid_argument);
    CHECK_THROWS_AS(frequency_power_map(p, {0.0}, {1.0}, Protocol::sweep_up, o), std::invalid_argument);
    CHECK_THROWS_AS(power_sweep(p, 0.0, {0.1, 0.2}, Direction::down, o), std::invalid_argument);
  }

  TEST_CASE("a down sweep ending at zero drive ends in vacuum") {
    const auto p = chain(3, -0.5);
    const auto line = power_sweep(p, 0.2, {1.0, 0.5, 0.0}, Direction::down, options(p));
    CHECK(line.size() == 3);
    CHECK(std::abs(line[2].alpha_out_mean) < 1e-12);
    CHECK(line[2].classification == Classification::fixed_point);
    CHECK_FALSE(line[2].g2.has_value());
  }

  TEST_CASE("pulses") {
    const auto p = chain(3, 0.0);
    auto o = options(p);
    o.pulse_ramp_time = 50.0;
    const auto up = pulse_initialized_point(p, 0.4, 0.3, Pulse::up, o);
    const auto down = pulse_initialized_point(p, 0.4, 0.3, Pulse::down, o);
    CHECK(std::abs(up.state.alpha_out_mean - down.state.alpha_out_mean) < 1e-9 * std::abs(up.state.alpha_out_mean));
    CHECK(*up.g2 == doctest::Approx(1.0).epsilon(1e-9));

    const auto zero = pulse_initialized_point(p, 0.4, 0.0, Pulse::up, o);
    CHECK(zero.state.final_state.max_abs() == 0.0);
    CHECK_FALSE(zero.g2.has_value());
  }

  TEST_CASE("transmission normalization uses the lowest-power row") {
    SweepGrid g;
    g.freqs = {1.0, 2.0};
    g.powers = {10.0, 1.0};
    g.cells.resize(4);
    g.at(0, 1).alpha_out_mean = 0.5;
    g.at(1, 1).alpha_out_mean = 2.0;
    g.at(0, 0).alpha_out_mean = 2.0;
    g.at(1, 0).alpha_out_mean = 0.0;
    normalize_transmission(g, TransmissionMode::coherent);
    CHECK(g.reference_gain == 2.0);
    CHECK(g.at(1, 1).transmission_db == doctest::Approx(0.0));
    CHECK(g.at(0, 1).transmission_db == doctest::Approx(20.0 * std::log10(0.25)));
    CHECK(g.at(0, 0).transmission_db == doctest::Approx(20.0 * std::log10(0.1)));
    CHECK(g.at(1, 0).transmission_db == kTransmissionFloorDb);
  }
}
