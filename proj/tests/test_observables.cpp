#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cqed/observables.hpp"
#include "oracles.hpp"

using namespace cqed;

TEST_SUITE("observables") {
  TEST_CASE("transmission in dB") {
    CHECK(amplitude_db(0.0, 1.0) == kTransmissionFloorDb);
    CHECK(amplitude_db(3.0, 3.0) == 0.0);
    CHECK(amplitude_db(0.1, 1.0) == doctest::Approx(-20.0));
    CHECK(amplitude_db(1e-30, 1.0) == kTransmissionFloorDb);
    CHECK_THROWS_AS(amplitude_db(1.0, 0.0), std::invalid_argument);

    SteadyStateResult r;
    r.classification = Classification::non_stationary;
    r.alpha_out_mean = cplx(0.01, 0.0);
    r.alpha_abs_mean = 1.0;
    CHECK(transmission(r, 1.0) == doctest::Approx(-40.0));
    CHECK(transmission(r, 1.0, TransmissionMode::magnitude) == doctest::Approx(0.0));
    r.classification = Classification::fixed_point;
    CHECK(transmission(r, 1.0, TransmissionMode::magnitude) == doctest::Approx(-40.0));
  }

  TEST_CASE("g2 hand values") {
    std::vector<double> constant(50, 0.7);
    CHECK(*g2_zero(constant) == 1.0);
    CHECK(*g2_zero(constant, G2Formula::fourth_moment) == 1.0);

    std::vector<double> alternating;
    for (int k = 0; k < 100; ++k) alternating.push_back(k % 2 ? 2.0 : 0.0);
    // <|a|^2> = c^2/2, <|a|>^2 = c^2/4.
    CHECK(*g2_zero(alternating) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(*g2_zero(alternating, G2Formula::fourth_moment) == doctest::Approx(2.0).epsilon(1e-14));

    std::vector<double> three{1.0, 2.0, 3.0};
    // <x^2> = 14/3, <x>^2 = 4.
    CHECK(*g2_zero(three) == doctest::Approx(14.0 / 12.0).epsilon(1e-14));
    // <x^4> = 98/3, <x^2>^2 = 196/9.
    CHECK(*g2_zero(three, G2Formula::fourth_moment) == doctest::Approx(1.5).epsilon(1e-14));

    std::vector<double> zeros(20, 0.0);
    CHECK_FALSE(g2_zero(zeros).has_value());
    CHECK_FALSE(g2_zero({}).has_value());
  }

  TEST_CASE("eigenmodes of tiny chains") {
    LatticeParams p;
    p.n_sites = 1;
    p.omega_r = 3.0;
    p.t_hop = 0.5;
    auto s = chain_eigenmodes(p);
    CHECK(s.frequencies.size() == 1);
    CHECK(s.frequencies(0) == 3.0);
    CHECK(s.weights(0, 0) == 1.0);

    p.n_sites = 2;
    s = chain_eigenmodes(p);
    CHECK(s.frequencies(0) == doctest::Approx(2.5));
    CHECK(s.frequencies(1) == doctest::Approx(3.5));
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(s.weights(0, 0) == doctest::Approx(r));
    CHECK(s.weights(1, 0) == doctest::Approx(-r));
    CHECK(s.weights(0, 1) == doctest::Approx(r));
    CHECK(s.weights(1, 1) == doctest::Approx(r));

    const auto peaks = predict_emission_peaks(p);
    CHECK(peaks == std::vector<double>{s.frequencies(0), s.frequencies(1)});
  }

  TEST_CASE("eigenmodes follow the cosine dispersion") {
    auto p = paper_default_params();
    for (int n = 1; n <= 72; ++n) {
      p.n_sites = n;
      p.output_site = n;
      const auto s = chain_eigenmodes(p);
      for (int k = 0; k < n; ++k) {
        const double closed = uniform_chain_frequency(p, n - k);
        CHECK(std::abs(s.frequencies(k) - closed) <= 1e-10 * closed);
      }
      const Eigen::MatrixXd gram = s.weights.transpose() * s.weights;
      CHECK((gram - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);
    }
    p.n_sites = 72;
    const auto peaks = predict_emission_peaks(p);
    CHECK(peaks.size() == 72);
    for (double w : peaks) {
      CHECK(w > p.omega_r - 2.0 * p.t_hop);
      CHECK(w < p.omega_r + 2.0 * p.t_hop);
    }
    CHECK((peaks.back() - peaks.front()) / kTwoPi == doctest::Approx(576e6).epsilon(2e-3));
  }

  TEST_CASE("U-sign map examples") {
    const auto p = paper_default_params();
    DriveSpec d{p.omega_r, cplx(1.0, 2.0), {}};
    auto [q, e] = map_u_sign(p, d);
    CHECK(e.omega_p == p.omega_r);
    CHECK(q.omega_q == doctest::Approx(p.omega_r - kTwoPi * 0.9e9).epsilon(1e-14));
    CHECK(q.g_coupling == -p.g_coupling);
    CHECK(q.t_hop == -p.t_hop);
    CHECK(q.u_kerr == p.u_kerr);
    CHECK(e.epsilon == cplx(-1.0, 2.0));

    d.omega_p = p.omega_r + 1e8;
    auto [q2, e2] = map_u_sign(p, d);
    auto [q3, e3] = map_u_sign(q2, e2);
    CHECK(q3.omega_q == doctest::Approx(p.omega_q).epsilon(1e-15));
    CHECK(e3.omega_p == doctest::Approx(d.omega_p).epsilon(1e-15));
    CHECK(e3.epsilon == d.epsilon);
    CHECK(q3.g_coupling == p.g_coupling);
  }

  TEST_CASE("U-sign map conjugates the right-hand side") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> nd;
    auto p = oracle::random_chain(rng, 4, -0.7);
    p.omega_q_site = {p.omega_q, p.omega_q + 0.1, p.omega_q - 0.2, p.omega_q + 0.3};
    DriveSpec d{p.omega_r + 0.3, cplx(0.4, -0.6), {}};
    auto [q, e] = map_u_sign(p, d);
    q.u_kerr = -p.u_kerr;
    MeanFieldState s(4), sc(4);
    for (int j = 0; j < 4; ++j) {
      s.alpha[j] = {nd(rng), nd(rng)};
      s.beta[j] = {nd(rng), nd(rng)};
      sc.alpha[j] = std::conj(s.alpha[j]);
      sc.beta[j] = std::conj(s.beta[j]);
    }
    const auto a = mft_rhs(s, p, d, 0.0);
    const auto b = mft_rhs(sc, q, e, 0.0);
    for (int j = 0; j < 4; ++j) {
      CHECK(std::abs(b.alpha[j] - std::conj(a.alpha[j])) < 1e-12);
      CHECK(std::abs(b.beta[j] - std::conj(a.beta[j])) < 1e-12);
    }
  }

  TEST_CASE("resonant drive transmits more than off-resonant drive") {
    LatticeParams p;
    p.n_sites = 6;
    p.omega_r = 0.0;
    p.omega_q = 40.0;
    p.t_hop = 1.0;
    p.g_coupling = 0.0;
    p.kappa = 0.02;
    p.gamma_q = 0.02;
    p.output_site = 6;
    const auto modes = chain_eigenmodes(p);
    const double on = modes.frequencies(2);
    const double off = 0.5 * (modes.frequencies(2) + modes.frequencies(3));
    const double a_on = std::abs(linear_steady_state(p, DriveSpec{on, 1.0, {}}).alpha[5]);
    const double a_off = std::abs(linear_steady_state(p, DriveSpec{off, 1.0, {}}).alpha[5]);
    CHECK(a_on > 10.0 * a_off);
  }
}
