#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hypolab/ratebound.hpp"
#include "hypolab/sde.hpp"
#include "hypolab/stats.hpp"

using namespace hypolab;

namespace {

SdeConfig base_config(double alpha, double beta, std::int64_t n_paths,
                      double dt, double horizon) {
  SdeConfig cfg;
  cfg.params = ModelParams(1, alpha, beta);
  cfg.pot = make_harmonic_potential(1);
  cfg.dt = dt;
  cfg.n_paths = n_paths;
  cfg.horizon = horizon;
  cfg.seed = 20240817;
  return cfg;
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

}  // namespace

TEST_CASE("stats helpers") {
  // inverse normal CDF round-trips through the error function
  for (double x : {-3.0, -0.7, 0.0, 1.3, 4.2}) {
    const double p = 0.5 * std::erfc(-x / std::sqrt(2.0));
    CHECK(normal_icdf(p) == doctest::Approx(x).epsilon(1e-9));
  }
  CHECK_THROWS_AS(normal_icdf(0.0), std::invalid_argument);

  CHECK(path_seed(1, 2) != path_seed(1, 3));
  CHECK(path_seed(1, 2) != path_seed(2, 2));

  // decay-rate fit on a clean exponential
  std::vector<double> t, v;
  for (int i = 0; i <= 400; ++i) {
    t.push_back(0.1 * i);
    v.push_back(5.0 * std::exp(-0.7 * 0.1 * i));
  }
  const LogLinearFit fit = fit_decay_rate(t, v, 1e-10);
  CHECK(fit.valid);
  CHECK(fit.rate == doctest::Approx(0.7).epsilon(1e-10));

  // KS: identical vs shifted Gaussians
  Rng rng(5);
  std::vector<double> a, b, c;
  for (int i = 0; i < 20000; ++i) {
    a.push_back(rng.normal());
    b.push_back(rng.normal());
    c.push_back(rng.normal() + 0.08);
  }
  CHECK_FALSE(ks_two_sample(a, b, 0.001).reject);
  CHECK(ks_two_sample(a, c, 0.001).reject);
}

TEST_CASE("determinism: same seed, same trace, independent of threads") {
  SdeConfig cfg = base_config(1.0, 1.0, 500, 0.01, 1.0);
  cfg.initial = InitialLaw::equilibrium();
  const auto times = linspace(0, 1.0, 6);
  cfg.threads = 1;
  const auto t1 = simulate(cfg, {named_observable("x")}, times);
  cfg.threads = 2;
  const auto t2 = simulate(cfg, {named_observable("x")}, times);
  const auto t3 = simulate(cfg, {named_observable("x")}, times);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(t1[0].means[i] == t2[0].means[i]);  // bit identical
    CHECK(t2[0].means[i] == t3[0].means[i]);
  }
  SdeConfig other = cfg;
  other.seed += 1;
  const auto t4 = simulate(other, {named_observable("x")}, times);
  CHECK(t4[0].means[3] != t1[0].means[3]);
}

TEST_CASE("constants are preserved exactly") {
  SdeConfig cfg = base_config(1.0, 1.0, 300, 0.01, 1.0);
  cfg.initial = InitialLaw::equilibrium();
  const auto tr = simulate(cfg, {named_observable("1")}, linspace(0, 1, 5));
  for (std::size_t i = 0; i < tr[0].means.size(); ++i) {
    CHECK(tr[0].means[i] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(tr[0].std_errors[i] == doctest::Approx(0.0).epsilon(1e-15));
  }
}

TEST_CASE("equilibrium start is stationary for x^2") {
  SdeConfig cfg = base_config(1.0, 1.0, 20000, 0.01, 2.0);
  cfg.initial = InitialLaw::equilibrium();
  const auto tr = simulate(cfg, {named_observable("x2")}, linspace(0, 2, 11));
  CHECK(tr[0].target == doctest::Approx(1.0).epsilon(1e-10));
  for (std::size_t i = 0; i < tr[0].means.size(); ++i)
    CHECK(std::abs(tr[0].means[i] - 1.0) <= 3.0 * tr[0].std_errors[i] + 1e-3);
}

TEST_CASE("point-start mean follows the damped oscillation") {
  // alpha = beta = 1: m_x'' + m_x' + m_x = 0, m_x(0) = 2, m_x'(0) = 0
  SdeConfig cfg = base_config(1.0, 1.0, 20000, 0.002, 6.0);
  cfg.initial = InitialLaw::point((Eigen::VectorXd(1) << 2.0).finished(),
                                  (Eigen::VectorXd(1) << 0.0).finished());
  const auto tr = simulate(cfg, {named_observable("x")}, linspace(0, 6, 13));
  const double gamma = std::sqrt(3.0) / 2.0;
  for (std::size_t i = 0; i < tr[0].times.size(); ++i) {
    const double t = tr[0].times[i];
    const double exact = std::exp(-0.5 * t) *
                         (2.0 * std::cos(gamma * t) +
                          (1.0 / gamma) * std::sin(gamma * t));
    CHECK(std::abs(tr[0].means[i] - exact) <=
          3.0 * tr[0].std_errors[i] + 2e-3);
  }
}

TEST_CASE("overdamped mean matches the OU closed form") {
  SdeConfig cfg = base_config(1.0, 1.0, 20000, 0.005, 3.0);
  cfg.initial = InitialLaw::point((Eigen::VectorXd(1) << 2.0).finished(),
                                  Eigen::VectorXd::Zero(1));
  const auto tr =
      simulate_overdamped(cfg, {named_observable("x")}, linspace(0, 3, 7));
  for (std::size_t i = 0; i < tr[0].times.size(); ++i) {
    const double exact = 2.0 * std::exp(-tr[0].times[i]);
    CHECK(std::abs(tr[0].means[i] - exact) <=
          3.0 * tr[0].std_errors[i] + 4e-3);
  }
  // equilibrium start stays stationary
  SdeConfig eq = base_config(1.0, 1.0, 10000, 0.005, 1.0);
  eq.initial = InitialLaw::equilibrium();
  const auto st =
      simulate_overdamped(eq, {named_observable("x2")}, linspace(0, 1, 5));
  for (std::size_t i = 0; i < st[0].means.size(); ++i)
    CHECK(std::abs(st[0].means[i] - 1.0) <= 3.0 * st[0].std_errors[i] + 2e-3);
}

TEST_CASE("euler-maruyama guard and cross-check") {
  SdeConfig cfg = base_config(100.0, 1.0, 100, 0.01, 0.1);
  cfg.scheme = SdeScheme::EulerMaruyama;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

  SdeConfig em = base_config(1.0, 1.0, 20000, 0.002, 2.0);
  em.scheme = SdeScheme::EulerMaruyama;
  em.initial = InitialLaw::equilibrium();
  SdeConfig ba = em;
  ba.scheme = SdeScheme::Baoab;
  const auto te = simulate(em, {named_observable("x2")}, {2.0});
  const auto tb = simulate(ba, {named_observable("x2")}, {2.0});
  CHECK(std::abs(te[0].means[0] - tb[0].means[0]) <=
        3.0 * (te[0].std_errors[0] + tb[0].std_errors[0]) + 6e-3);
}

TEST_CASE("weak convergence: halving dt moves equilibrium means within noise") {
  SdeConfig c1 = base_config(1.0, 1.0, 20000, 0.02, 2.0);
  c1.initial = InitialLaw::equilibrium();
  SdeConfig c2 = c1;
  c2.dt = 0.01;
  const auto t1 = simulate(c1, {named_observable("x2")}, {2.0});
  const auto t2 = simulate(c2, {named_observable("x2")}, {2.0});
  CHECK(std::abs(t1[0].means[0] - t2[0].means[0]) <=
        3.0 * (t1[0].std_errors[0] + t2[0].std_errors[0]));
}

TEST_CASE("equilibrium law is invariant (two-sample KS, n = 1e5)") {
  SdeConfig cfg = base_config(1.0, 2.0, 100000, 0.01, 2.0);
  cfg.initial = InitialLaw::equilibrium();
  const Eigen::MatrixXd states = terminal_states(cfg);
  REQUIRE(states.rows() == 100000);
  REQUIRE(states.cols() == 2);

  // fresh equilibrium samples from the exact law
  Rng rng(777);
  std::vector<double> fx, fw, sx, sw;
  const double sig_w = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < states.rows(); ++i) {
    fx.push_back(rng.normal());
    fw.push_back(sig_w * rng.normal());
    sx.push_back(states(i, 0));
    sw.push_back(states(i, 1));
  }
  CHECK_FALSE(ks_two_sample(sx, fx, 0.001).reject);
  CHECK_FALSE(ks_two_sample(sw, fw, 0.001).reject);

  // no cross-path correlation in the terminal positions
  double num = 0, den = 0, mean = 0;
  for (double v : sx) mean += v;
  mean /= sx.size();
  for (std::size_t i = 0; i + 1 < sx.size(); ++i)
    num += (sx[i] - mean) * (sx[i + 1] - mean);
  for (double v : sx) den += (v - mean) * (v - mean);
  CHECK(std::abs(num / den) <= 4.0 / std::sqrt((double)sx.size()));
}

TEST_CASE("quartic equilibrium sampling feeds a stationary run") {
  SdeConfig cfg = base_config(1.0, 1.0, 20000, 0.005, 1.0);
  cfg.pot = make_even_power_potential(4, 1);
  cfg.initial = InitialLaw::equilibrium();
  const auto tr = simulate(cfg, {named_observable("x2")}, linspace(0, 1, 5));
  // E[x^2] under e^{-x^4}: Gamma(3/4)/Gamma(1/4)
  CHECK(tr[0].target == doctest::Approx(0.3379894932).epsilon(1e-6));
  for (std::size_t i = 0; i < tr[0].means.size(); ++i)
    CHECK(std::abs(tr[0].means[i] - tr[0].target) <=
          4.0 * tr[0].std_errors[i] + 2e-3);
}

TEST_CASE("custom potential requires a point start for equilibrium") {
  SdeConfig cfg = base_config(1.0, 1.0, 10, 0.01, 0.1);
  cfg.pot.id = "custom";
  cfg.initial = InitialLaw::equilibrium();
  CHECK_THROWS_AS(simulate(cfg, {named_observable("x")}, {0.1}),
                  std::invalid_argument);
}

TEST_CASE("alpha sweep reproduces the rate phenomenology") {
  SdeConfig cfg = base_config(1.0, 1.0, 4000, 0.01, 12.0);
  cfg.initial = InitialLaw::point((Eigen::VectorXd(1) << 2.0).finished(),
                                  (Eigen::VectorXd(1) << 0.0).finished());
  auto nu2_of = [](double a) {
    return build_ledger(1.0, 1.0, 1.6, a, 1.0).nu2;
  };
  const std::vector<double> alphas{0.1, 1.0, 10.0};
  const std::vector<double> horizons{50.0, 12.0, 50.0};
  const auto rows = alpha_sweep(cfg, alphas, nu2_of, horizons);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].rate_langevin > rows[0].rate_langevin);
  CHECK(rows[1].rate_langevin > rows[2].rate_langevin);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].nu2 == nu2_of(alphas[i]));  // same formula, bit-identical
    CHECK(rows[i].rate_langevin >= rows[i].nu2 * 0.9);
    CHECK(rows[i].rate_overdamped > 0.0);
  }
  // overdamped rates scale like 1/(alpha beta)
  CHECK(rows[2].rate_overdamped ==
        doctest::Approx(1.0 / 10.0).epsilon(0.25));
}

TEST_CASE("d = 2 and d = 3 kinetics") {
  SdeConfig cfg;
  cfg.params = ModelParams(3, 1.0, 2.0);
  cfg.pot = make_harmonic_potential(3);
  cfg.dt = 0.01;
  cfg.n_paths = 10000;
  cfg.horizon = 1.0;
  cfg.seed = 31337;
  cfg.initial = InitialLaw::equilibrium();
  const auto tr =
      simulate(cfg, {named_observable("x2"), named_observable("w2")},
               linspace(0, 1, 3));
  for (std::size_t i = 0; i < tr[0].means.size(); ++i) {
    CHECK(std::abs(tr[0].means[i] - 1.0) <= 3 * tr[0].std_errors[i] + 4e-3);
    CHECK(std::abs(tr[1].means[i] - 0.5) <= 3 * tr[1].std_errors[i] + 4e-3);
  }

  SdeConfig p2;
  p2.params = ModelParams(2, 1.0, 1.0);
  p2.pot = make_harmonic_potential(2);
  p2.dt = 0.01;
  p2.n_paths = 100;
  p2.horizon = 0.5;
  p2.seed = 1;
  Eigen::VectorXd x0(2), w0(2);
  x0 << 2.0, -1.0;
  w0 << 0.0, 0.0;
  p2.initial = InitialLaw::point(x0, w0);
  const auto t0 = simulate(p2, {named_observable("x")}, {0.0});
  CHECK(t0[0].means[0] == doctest::Approx(2.0));
}

TEST_CASE("sample-time snapping and validation") {
  SdeConfig cfg = base_config(1.0, 1.0, 10, 0.01, 1.0);
  cfg.initial = InitialLaw::equilibrium();
  CHECK_THROWS_AS(simulate(cfg, {named_observable("x")}, {}),
                  std::invalid_argument);
  CHECK_THROWS_AS(simulate(cfg, {named_observable("x")}, {2.0}),
                  std::invalid_argument);
  const auto tr = simulate(cfg, {named_observable("x")}, {0.0049, 0.5});
  CHECK(tr[0].times[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(tr[0].times[1] == doctest::Approx(0.5).epsilon(1e-12));
}
