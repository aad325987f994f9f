#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "hypolab/operators.hpp"

using namespace hypolab;

namespace {

double max_abs(const Eigen::SparseMatrix<double>& m) {
  double v = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
      v = std::max(v, std::abs(it.value()));
  return v;
}

OperatorSet harmonic_ops(double alpha, double beta, int n, int d = 1) {
  return assemble(ModelParams(d, alpha, beta), make_harmonic_potential(d), n,
                  n);
}
OperatorSet quartic_ops(double alpha, double beta, int n) {
  return assemble(ModelParams(1, alpha, beta),
                  make_even_power_potential(4, 1), n, n);
}

}  // namespace

TEST_CASE("S is the diagonal OU matrix") {
  const OperatorSet ops = harmonic_ops(2.0, 1.0, 4);
  const Eigen::VectorXd d = Eigen::VectorXd(ops.S.diagonal());
  for (int k = 0; k < ops.dim(); ++k) {
    const BasisIndex b = ops.basis.unflatten(k);
    CHECK(d[k] == doctest::Approx(-2.0 * b.w_degree[0]).epsilon(1e-15));
  }
  // off-diagonal entries are absent
  CHECK(ops.S.nonZeros() <= ops.dim());
}

TEST_CASE("constant row and column of L vanish") {
  for (const OperatorSet& ops :
       {harmonic_ops(1.0, 1.0, 12), quartic_ops(0.7, 2.0, 10)}) {
    const double scale = max_abs(ops.L);
    Eigen::VectorXd e0 = Eigen::VectorXd::Unit(ops.dim(), 0);
    CHECK((ops.L * e0).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    CHECK((ops.L.transpose() * e0).cwiseAbs().maxCoeff() <= 1e-12 * scale);
  }
}

TEST_CASE("degree-one coupling entry of A") {
  const OperatorSet ops = harmonic_ops(1.0, 1.0, 4);
  // A (x * 1) = -w: matrix entry at row (0,1), column (1,0)
  const Eigen::MatrixXd Ad = Eigen::MatrixXd(ops.A);
  const int r = ops.basis.flat(0, 1), c = ops.basis.flat(1, 0);
  CHECK(Ad(r, c) == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(Ad(c, r) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("antisymmetry of A and symmetry structure, up to N = 32") {
  for (int n : {8, 16, 32}) {
    const OperatorSet ops = harmonic_ops(1.3, 0.7, n);
    const Eigen::SparseMatrix<double> skew =
        Eigen::SparseMatrix<double>(ops.A + Eigen::SparseMatrix<double>(
                                                 ops.A.transpose()));
    CHECK(max_abs(skew) <= 1e-10 * max_abs(ops.A));
  }
  for (int n : {8, 16, 24, 32}) {
    const OperatorSet ops = quartic_ops(2.0, 1.5, n);
    const Eigen::SparseMatrix<double> skew =
        Eigen::SparseMatrix<double>(ops.A + Eigen::SparseMatrix<double>(
                                                 ops.A.transpose()));
    CHECK(max_abs(skew) <= 1e-10 * max_abs(ops.A));
  }
  // the p = 6 member of the shipped family
  const OperatorSet p6 = assemble(ModelParams(1, 1.0, 1.0),
                                  make_even_power_potential(6, 1), 16, 16);
  const Eigen::SparseMatrix<double> skew6 = Eigen::SparseMatrix<double>(
      p6.A + Eigen::SparseMatrix<double>(p6.A.transpose()));
  CHECK(max_abs(skew6) <= 1e-10 * max_abs(p6.A));
  Eigen::VectorXd e06 = Eigen::VectorXd::Unit(p6.dim(), 0);
  CHECK((p6.L * e06).cwiseAbs().maxCoeff() <= 1e-12 * max_abs(p6.L));
}

TEST_CASE("block structure: A shifts w-degree by one, S preserves it") {
  const OperatorSet ops = quartic_ops(1.0, 1.0, 10);
  for (int k = 0; k < ops.A.outerSize(); ++k) {
    const int wc = ops.basis.unflatten(k).w_degree[0];
    for (Eigen::SparseMatrix<double>::InnerIterator it(ops.A, k); it; ++it) {
      const int wr = ops.basis.unflatten(it.row()).w_degree[0];
      CHECK(std::abs(wr - wc) == 1);
    }
  }
}

TEST_CASE("apply_AP on canonical vectors") {
  const OperatorSet ops = harmonic_ops(1.0, 1.0, 8);
  Eigen::VectorXd one = Eigen::VectorXd::Unit(ops.dim(), 0);
  CHECK(apply_AP(ops, one).cwiseAbs().maxCoeff() <= 1e-14);

  // f = coefficients of x  ->  AP f = coefficients of -w
  const Eigen::VectorXd fx = observable_coefficients(ops, "x");
  Eigen::VectorXd expect = Eigen::VectorXd::Zero(ops.dim());
  expect[ops.basis.flat(0, 1)] = -1.0;
  CHECK((apply_AP(ops, fx) - expect).cwiseAbs().maxCoeff() <= 1e-13);

  // pure velocity + constant input: P kills it
  Eigen::VectorXd fv = observable_coefficients(ops, "w");
  fv[0] += 3.0;
  CHECK(apply_AP(ops, fv).cwiseAbs().maxCoeff() <= 1e-14);

  // support: only w-degree one
  std::mt19937_64 eng(3);
  std::normal_distribution<double> nd;
  Eigen::VectorXd f(ops.dim());
  for (int i = 0; i < f.size(); ++i) f[i] = nd(eng);
  const Eigen::VectorXd g = apply_AP(ops, f);
  for (int k = 0; k < ops.dim(); ++k)
    if (ops.basis.unflatten(k).w_degree[0] != 1)
      CHECK(std::abs(g[k]) <= 1e-14);
}

TEST_CASE("apply_A2P matches the displayed formula") {
  const OperatorSet ops = harmonic_ops(1.0, 1.0, 8);
  // f = x: A^2 P x = -(1/beta) Phi' = -x
  const Eigen::VectorXd fx = observable_coefficients(ops, "x");
  CHECK((apply_A2P(ops, fx) + fx).cwiseAbs().maxCoeff() <= 1e-13);

  CHECK(apply_A2P(ops, Eigen::VectorXd::Unit(ops.dim(), 0))
            .cwiseAbs()
            .maxCoeff() <= 1e-14);

  // f = x^2: A^2 P f = 2 w^2 - 2 x^2 = 2 sqrt2 (h2 psi0 - psi2 h0)
  const Eigen::VectorXd f2 = observable_coefficients(ops, "x2");
  Eigen::VectorXd expect = Eigen::VectorXd::Zero(ops.dim());
  expect[ops.basis.flat(0, 2)] = 2.0 * std::sqrt(2.0);
  expect[ops.basis.flat(2, 0)] = -2.0 * std::sqrt(2.0);
  CHECK((apply_A2P(ops, f2) - expect).cwiseAbs().maxCoeff() <= 1e-12);

  // support: w-degrees 0 and 2
  std::mt19937_64 eng(5);
  std::normal_distribution<double> nd;
  Eigen::VectorXd f(ops.dim());
  for (int i = 0; i < f.size(); ++i) f[i] = nd(eng);
  const Eigen::VectorXd g = apply_A2P(ops, f);
  for (int k = 0; k < ops.dim(); ++k) {
    const int wd = ops.basis.unflatten(k).w_degree[0];
    if (wd != 0 && wd != 2) CHECK(std::abs(g[k]) <= 1e-13);
  }
}

TEST_CASE("G is the weighted Laplacian on the macroscopic subspace") {
  const OperatorSet ops = harmonic_ops(1.0, 1.0, 12);
  const Eigen::MatrixXd G = build_G(ops);
  CHECK((G - G.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-G);
  for (int k = 0; k < 11; ++k)
    CHECK(es.eigenvalues()[k] == doctest::Approx(k + 1.0).epsilon(1e-10));
  // the constant is annihilated before G ever sees it
  CHECK(apply_A2P(ops, Eigen::VectorXd::Unit(ops.dim(), 0)).norm() <= 1e-14);
}

TEST_CASE("B: norm bound, kernel, factored application") {
  for (const OperatorSet& ops :
       {harmonic_ops(1.0, 1.0, 8), quartic_ops(1.0, 1.0, 8)}) {
    const Eigen::MatrixXd B = build_B(ops);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(B);
    CHECK(svd.singularValues()(0) <= 0.5 + 1e-12);

    std::mt19937_64 eng(7);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::VectorXd f = Eigen::VectorXd::Zero(ops.dim());
      for (int m : ops.macro) f[m] = nd(eng);
      CHECK((B * f).cwiseAbs().maxCoeff() <= 1e-13);  // B kills range(P)
    }
    CHECK((B * Eigen::VectorXd::Zero(ops.dim())).norm() == 0.0);

    Eigen::VectorXd f(ops.dim());
    for (int i = 0; i < f.size(); ++i) f[i] = nd(eng);
    CHECK((apply_B(ops, f) - B * f).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("dissipativity of L on random vectors") {
  std::mt19937_64 eng(13);
  std::normal_distribution<double> nd;
  for (const OperatorSet& ops :
       {harmonic_ops(0.8, 1.0, 16), quartic_ops(1.2, 0.5, 12)}) {
    for (int trial = 0; trial < 1000; ++trial) {
      Eigen::VectorXd f(ops.dim());
      for (int i = 0; i < f.size(); ++i) f[i] = nd(eng);
      CHECK(f.dot(ops.L * f) <= 1e-10 * f.squaredNorm());
    }
  }
}

TEST_CASE("sub-matrix consistency under truncation refinement") {
  auto common_block_agree = [](const OperatorSet& small,
                               const OperatorSet& big) {
    const Eigen::MatrixXd As = Eigen::MatrixXd(small.A);
    const Eigen::MatrixXd Ab = Eigen::MatrixXd(big.A);
    const double scale = As.cwiseAbs().maxCoeff();
    double worst = 0.0;
    for (int ix = 0; ix < small.basis.Mx(); ++ix)
      for (int iw = 0; iw < small.basis.Mw(); ++iw)
        for (int jx = 0; jx < small.basis.Mx(); ++jx)
          for (int jw = 0; jw < small.basis.Mw(); ++jw) {
            const double vs = As(small.basis.flat(ix, iw),
                                  small.basis.flat(jx, jw));
            const double vb =
                Ab(big.basis.flat(ix, iw), big.basis.flat(jx, jw));
            worst = std::max(worst, std::abs(vs - vb));
          }
    return worst <= 1e-12 * scale;
  };
  CHECK(common_block_agree(harmonic_ops(1.0, 1.0, 8),
                           harmonic_ops(1.0, 1.0, 12)));
  CHECK(common_block_agree(quartic_ops(1.0, 1.0, 8),
                           quartic_ops(1.0, 1.0, 12)));
}

TEST_CASE("assembly rejections") {
  CHECK_THROWS_AS(assemble(ModelParams(1, 1.0, 1.0),
                           make_harmonic_potential(1), 64, 64, 1000),
                  std::invalid_argument);
  CHECK_THROWS_AS(assemble(ModelParams(2, 1.0, 1.0),
                           make_even_power_potential(4, 2), 8, 8),
                  std::invalid_argument);
  CHECK_THROWS_AS(assemble(ModelParams(2, 1.0, 1.0),
                           make_harmonic_potential(1), 8, 8),
                  std::invalid_argument);
  CHECK_THROWS_AS(assemble(ModelParams(1, 1.0, 1.0),
                           make_harmonic_potential(1), 1, 8),
                  std::invalid_argument);
}

TEST_CASE("d = 2 harmonic tensor assembly") {
  const OperatorSet ops = harmonic_ops(1.5, 2.0, 6, 2);
  // S diagonal with -alpha * |w-degree|
  const Eigen::VectorXd sd = Eigen::VectorXd(ops.S.diagonal());
  for (int k = 0; k < ops.dim(); ++k) {
    const BasisIndex b = ops.basis.unflatten(k);
    CHECK(sd[k] == doctest::Approx(-1.5 * (b.w_degree[0] + b.w_degree[1]))
                       .epsilon(1e-14));
  }
  const Eigen::SparseMatrix<double> skew = Eigen::SparseMatrix<double>(
      ops.A + Eigen::SparseMatrix<double>(ops.A.transpose()));
  CHECK(max_abs(skew) <= 1e-10 * max_abs(ops.A));
  Eigen::VectorXd e0 = Eigen::VectorXd::Unit(ops.dim(), 0);
  CHECK((ops.L * e0).cwiseAbs().maxCoeff() <= 1e-13);
  CHECK((ops.L.transpose() * e0).cwiseAbs().maxCoeff() <= 1e-13);
}

TEST_CASE("observable coefficients and point evaluation") {
  const OperatorSet ops = harmonic_ops(1.0, 1.0, 8);
  Eigen::VectorXd x(1), w(1);
  x[0] = 2.0;
  w[0] = 0.0;
  CHECK(evaluate_at(ops, observable_coefficients(ops, "x"), x, w) ==
        doctest::Approx(2.0).epsilon(1e-13));
  x[0] = 1.5;
  w[0] = -0.5;
  CHECK(evaluate_at(ops, observable_coefficients(ops, "x2"), x, w) ==
        doctest::Approx(2.25).epsilon(1e-13));
  CHECK(evaluate_at(ops, observable_coefficients(ops, "xw"), x, w) ==
        doctest::Approx(-0.75).epsilon(1e-13));
  CHECK(evaluate_at(ops, observable_coefficients(ops, "x+w"), x, w) ==
        doctest::Approx(1.0).epsilon(1e-13));

  const OperatorSet opsq = quartic_ops(1.0, 1.0, 10);
  x[0] = 0.8;
  w[0] = 0.3;
  CHECK(evaluate_at(opsq, observable_coefficients(opsq, "x"), x, w) ==
        doctest::Approx(0.8).epsilon(1e-12));
  CHECK(evaluate_at(opsq, observable_coefficients(opsq, "x2"), x, w) ==
        doctest::Approx(0.64).epsilon(1e-12));
  CHECK_THROWS_AS(observable_coefficients(opsq, "cube"),
                  std::invalid_argument);
}

TEST_CASE("operator dumps in coordinate format") {
  const OperatorSet ops = harmonic_ops(1.0, 1.0, 4);
  const auto path =
      std::filesystem::temp_directory_path() / "hypolab_dump_test.txt";
  dump_operator(ops.A, path.string());
  std::ifstream is(path);
  int rows = 0, r, c;
  double v;
  while (is >> r >> c >> v) ++rows;
  CHECK(rows == (int)ops.A.nonZeros());
  std::filesystem::remove(path);
}
