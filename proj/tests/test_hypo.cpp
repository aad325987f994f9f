#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>
#include <cmath>
#include <random>

#include "hypolab/hypo.hpp"

using namespace hypolab;

namespace {
OperatorSet harmonic_ops(double alpha, double beta, int n, int d = 1) {
  return assemble(ModelParams(d, alpha, beta), make_harmonic_potential(d), n,
                  n);
}
OperatorSet quartic_ops(double alpha, double beta, int n) {
  return assemble(ModelParams(1, alpha, beta),
                  make_even_power_potential(4, 1), n, n);
}

/// closed form of the discrete c2 for the harmonic potential at beta = 1:
/// sqrt(max_k (3k^2 - 2k)/(k+1)^2) over k = 1..Nx-1
double harmonic_c2(int nx) {
  double best = 0.0;
  for (int k = 1; k < nx; ++k)
    best = std::max(best, (3.0 * k * k - 2.0 * k) / ((k + 1.0) * (k + 1.0)));
  return std::sqrt(best);
}
}  // namespace

TEST_CASE("H1: algebraic relation P A P = 0") {
  for (double alpha : {0.5, 2.0})
    for (double beta : {1.0, 3.0}) {
      const H1Result r = check_H1(harmonic_ops(alpha, beta, 16));
      CHECK(r.residual <= 1e-13);
      CHECK(r.holds);
    }
  CHECK(check_H1(quartic_ops(1.0, 1.0, 12)).holds);

  // P_S A P_S vanishes by the same degree argument
  const OperatorSet ops = quartic_ops(1.0, 1.0, 10);
  const Eigen::MatrixXd Ad = Eigen::MatrixXd(ops.A);
  const Eigen::MatrixXd PS = ops.PS_diag.asDiagonal();
  CHECK((PS * Ad * PS).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("H2: microscopic coercivity equals alpha") {
  CHECK(check_H2(harmonic_ops(2.0, 1.0, 12)).lambda_m_numeric ==
        doctest::Approx(2.0).epsilon(1e-15));
  CHECK(check_H2(harmonic_ops(0.5, 2.0, 12)).lambda_m_numeric ==
        doctest::Approx(0.5).epsilon(1e-15));
  CHECK(check_H2(quartic_ops(1.7, 0.5, 10)).lambda_m_numeric ==
        doctest::Approx(1.7).epsilon(1e-15));
  // d = 2 tensor path
  CHECK(check_H2(harmonic_ops(1.2, 1.0, 5, 2)).lambda_m_numeric ==
        doctest::Approx(1.2).epsilon(1e-15));

  // S vanishes on range(P_S)
  const OperatorSet ops = harmonic_ops(1.0, 1.0, 8);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(ops.dim());
  for (int ix = 0; ix < ops.basis.Mx(); ++ix)
    f[ops.basis.flat(ix, 0)] = 1.0 + ix;
  CHECK((ops.S * f).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("Poincare estimate: harmonic is exactly 1") {
  for (int nx : {4, 8, 16})
    CHECK(estimate_poincare(assemble(ModelParams(1, 1.0, 1.0),
                                     make_harmonic_potential(1), nx, 4))
              .lambda_numeric == doctest::Approx(1.0).epsilon(1e-10));
  // independent of beta
  CHECK(estimate_poincare(harmonic_ops(1.0, 4.0, 8)).lambda_numeric ==
        doctest::Approx(1.0).epsilon(1e-10));
  // d = 2 product measure keeps the gap
  CHECK(estimate_poincare(harmonic_ops(1.0, 1.0, 6, 2)).lambda_numeric ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("Poincare estimate: quartic converges from above") {
  const double l16 = estimate_poincare(quartic_ops(1.0, 1.0, 16)).lambda_numeric;
  const double l24 = estimate_poincare(quartic_ops(1.0, 1.0, 24)).lambda_numeric;
  const double l32 = estimate_poincare(quartic_ops(1.0, 1.0, 32)).lambda_numeric;
  CHECK(std::abs(l24 - l32) <= 1e-4);            // refinement agreement
  CHECK(l16 >= l24 - 1e-12);                     // nested Rayleigh quotients
  CHECK(l24 >= l32 - 1e-12);
  // two independent oracles agree on the limit (Galerkin + Schroedinger FD)
  CHECK(l32 == doctest::Approx(2.7371850420).epsilon(2e-7));
}

TEST_CASE("H3: macroscopic coercivity") {
  HypoConstants consts;
  consts.lambda_M = 1.0;
  const H3Result r1 = check_H3(harmonic_ops(1.0, 1.0, 16), consts);
  CHECK(r1.lambda_M_numeric == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(r1.holds);
  CHECK(r1.identity_residual <= 1e-9);

  consts.lambda_M = 0.25;
  const H3Result r4 = check_H3(harmonic_ops(1.0, 4.0, 16), consts);
  CHECK(r4.lambda_M_numeric == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(r4.holds);

  // exact scale covariance in beta
  const double a = check_H3(harmonic_ops(1.0, 1.0, 12), consts).lambda_M_numeric;
  const double b = check_H3(harmonic_ops(1.0, 2.0, 12), consts).lambda_M_numeric;
  CHECK(b == doctest::Approx(0.5 * a).epsilon(1e-12));

  // f constant: both sides vanish
  const OperatorSet ops = harmonic_ops(1.0, 1.0, 8);
  CHECK((ops.AP * Eigen::VectorXd::Unit(ops.dim(), 0)).norm() <= 1e-15);
}

TEST_CASE("H4: intertwining constant and auxiliary norms") {
  const OperatorSet ops3 = harmonic_ops(3.0, 1.0, 12);
  const H4Result r3 = check_H4(ops3);
  CHECK(r3.c1_numeric == doctest::Approx(1.5).epsilon(1e-12));
  // PAS = c3 PA with c3 = -alpha (S has eigenvalue -alpha on w-degree one)
  CHECK(r3.c3_fitted == doctest::Approx(-3.0).epsilon(1e-12));
  const Eigen::MatrixXd PA =
      Eigen::MatrixXd(ops3.P_diag.asDiagonal() * ops3.A);
  CHECK(r3.intertwine_residual <= 1e-10 * PA.cwiseAbs().maxCoeff());

  const H4Result rq = check_H4(quartic_ops(2.0, 1.0, 12));
  CHECK(rq.c3_fitted == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(rq.c1_numeric == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rq.c2_numeric > 0.0);
  CHECK(std::isfinite(rq.c2_numeric));
}

TEST_CASE("H4: discrete c2 matches the ladder closed form (harmonic)") {
  for (int nx : {8, 16, 24, 32}) {
    const H4Result r = check_H4(harmonic_ops(1.0, 1.0, nx));
    CHECK(r.c2_numeric == doctest::Approx(harmonic_c2(nx)).epsilon(1e-9));
  }
  // refinement trajectory: increasing toward sqrt(3), ~3% drift 16 -> 24
  const double c16 = check_H4(harmonic_ops(1.0, 1.0, 16)).c2_numeric;
  const double c24 = check_H4(harmonic_ops(1.0, 1.0, 24)).c2_numeric;
  const double c32 = check_H4(harmonic_ops(1.0, 1.0, 32)).c2_numeric;
  CHECK(c16 < c24);
  CHECK(c24 < c32);
  CHECK(c24 / c16 - 1.0 == doctest::Approx(0.0305).epsilon(0.2));
  CHECK(std::abs(c32 - std::sqrt(3.0)) <= 0.08);
}

TEST_CASE("H4: sample-wise auxiliary inequalities") {
  std::mt19937_64 eng(99);
  std::normal_distribution<double> nd;
  for (const OperatorSet& ops :
       {harmonic_ops(1.0, 1.0, 12), quartic_ops(1.0, 1.0, 12)}) {
    const H4Result r = check_H4(ops);
    const double c1 = r.c1_numeric, c2 = r.c2_numeric;
    for (int trial = 0; trial < 5000; ++trial) {
      Eigen::VectorXd f(ops.dim());
      for (int i = 0; i < f.size(); ++i) f[i] = nd(eng);
      Eigen::VectorXd imp = f;
      for (int k = 0; k < ops.dim(); ++k)
        if (ops.P_diag[k] != 0.0) imp[k] = 0.0;  // (I - P) f
      const double imp_norm = imp.norm();
      CHECK(apply_B(ops, ops.S * f).norm() <= c1 * imp_norm * (1 + 1e-10));
      CHECK(apply_B(ops, ops.A * imp).norm() <= c2 * imp_norm * (1 + 1e-10));
    }
  }
}

TEST_CASE("certify collects analytic values and flags nothing") {
  const Potential pot = make_harmonic_potential(1);
  const OperatorSet ops = harmonic_ops(2.0, 0.5, 16);
  const HypoConstants hc = certify(ops, pot);
  CHECK(hc.lambda_m == doctest::Approx(2.0));
  CHECK(hc.lambda_m_tag == "analytic");
  CHECK(hc.poincare_lambda == doctest::Approx(1.0));
  CHECK(hc.lambda_M == doctest::Approx(2.0));  // Lambda/beta = 1/0.5
  CHECK(hc.c1 == doctest::Approx(1.0));
  CHECK(hc.c5 == doctest::Approx(hc.c1 + hc.c2));
  CHECK_FALSE(hc.truncation_warning);

  const Potential q = make_even_power_potential(4, 1);
  const OperatorSet opsq = quartic_ops(1.0, 1.0, 20);
  const HypoConstants hq = certify(opsq, q);
  CHECK(hq.poincare_tag == "numeric");
  CHECK(hq.poincare_lambda == doctest::Approx(2.73718).epsilon(1e-4));
}

TEST_CASE("hypo JSON report") {
  const OperatorSet ops = harmonic_ops(1.0, 1.0, 12);
  const std::string text = hypo_report_json(ops, make_harmonic_potential(1));
  const nlohmann::json j = nlohmann::json::parse(text);
  REQUIRE(j["conditions"].size() == 4);
  for (const auto& c : j["conditions"]) CHECK(c["holds"].get<bool>());
  CHECK(j["truncation"]["nx"] == 12);
}
