#include "hypolab/quadrature.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace hypolab {

namespace {

/// Golub-Welsch: Gauss nodes/weights from monic recurrence coefficients.
void golub_welsch(const Eigen::VectorXd& a, const Eigen::VectorXd& b, int n,
                  Eigen::VectorXd& nodes, Eigen::VectorXd& weights) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    J(i, i) = a[i];
    if (i > 0) J(i, i - 1) = J(i - 1, i) = std::sqrt(b[i]);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("golub_welsch: eigensolver failed");
  nodes = es.eigenvalues();
  weights = b[0] * es.eigenvectors().row(0).array().square();
}

/// Stieltjes procedure: recurrence coefficients of the measure given by
/// discrete nodes/weights, for polynomials of degree 0..n.
void stieltjes_recurrence(const Eigen::VectorXd& x, const Eigen::VectorXd& w,
                          int n, Eigen::VectorXd& a, Eigen::VectorXd& b) {
  a.resize(n + 1);
  b.resize(n + 1);
  Eigen::ArrayXd p_prev = Eigen::ArrayXd::Zero(x.size());
  Eigen::ArrayXd p = Eigen::ArrayXd::Ones(x.size());
  const Eigen::ArrayXd xs = x.array(), ws = w.array();
  double nrm2_prev = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double nrm2 = (ws * p * p).sum();
    if (!(nrm2 > 0.0) || !std::isfinite(nrm2))
      throw std::runtime_error(
          "stieltjes_recurrence: lost positivity at degree " +
          std::to_string(k) + "; increase quadrature or reduce N");
    b[k] = (k == 0) ? nrm2 : nrm2 / nrm2_prev;
    a[k] = (ws * xs * p * p).sum() / nrm2;
    if (k < n) {
      Eigen::ArrayXd p_new =
          (xs - a[k]) * p - (k > 0 ? b[k] : 0.0) * p_prev;
      p_prev = p;
      p = p_new;
    }
    nrm2_prev = nrm2;
  }
}

/// Composite Gauss-Legendre discretization of e^{-phi(x)} dx on [-R, R],
/// used to seed the Stieltjes procedure for non-Gaussian marginals.
void discretize_measure(const Marginal1D& m, double R, int panels, int pts,
                        Eigen::VectorXd& x, Eigen::VectorXd& w) {
  // pts-point Legendre rule on [-1, 1] via Golub-Welsch on the Jacobi matrix
  Eigen::VectorXd a = Eigen::VectorXd::Zero(pts), b(pts);
  b[0] = 2.0;
  for (int k = 1; k < pts; ++k) b[k] = k * k / (4.0 * k * k - 1.0);
  Eigen::VectorXd lx, lw;
  golub_welsch(a, b, pts, lx, lw);

  x.resize(panels * pts);
  w.resize(panels * pts);
  for (int pa = 0; pa < panels; ++pa) {
    const double lo = -R + 2.0 * R * pa / panels;
    const double hi = -R + 2.0 * R * (pa + 1) / panels;
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
    for (int q = 0; q < pts; ++q) {
      const double t = mid + half * lx[q];
      x[pa * pts + q] = t;
      w[pa * pts + q] = half * lw[q] * std::exp(-m.value(t));
    }
  }
}

/// Smallest R with phi(R), phi(-R) >= thresh (integrand support radius).
double support_radius(const Marginal1D& m, double thresh) {
  double R = 1.0;
  while (R < 1e6 &&
         (m.value(R) - m.value(0.0) < thresh ||
          m.value(-R) - m.value(0.0) < thresh))
    R *= 1.25;
  return R;
}

const Marginal1D& require_marginal(const Potential& pot) {
  if (!pot.marginal)
    throw std::invalid_argument(
        "quadrature: potential '" + pot.id +
        "' has no 1D marginal (position rules need a separable potential)");
  return *pot.marginal;
}

}  // namespace

QuadratureRule gauss_hermite_rule(int n, double beta) {
  if (n < 1) throw std::invalid_argument("gauss_hermite_rule: n >= 1");
  if (!(beta > 0.0)) throw std::invalid_argument("gauss_hermite_rule: beta > 0");
  // monic recurrence of the standard normal: a_k = 0, b_k = k, b_0 = 1
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n), b(n);
  b[0] = 1.0;
  for (int k = 1; k < n; ++k) b[k] = k;
  QuadratureRule rule;
  golub_welsch(a, b, n, rule.nodes, rule.weights);
  rule.nodes /= std::sqrt(beta);  // variance 1/beta
  rule.measure_id = "velocity";
  rule.exact_degree = 2 * n - 1;
  return rule;
}

QuadratureRule position_rule(const Potential& pot, int n) {
  if (n < 1) throw std::invalid_argument("position_rule: n >= 1");
  const Marginal1D& m = require_marginal(pot);
  if (m.gaussian) {
    QuadratureRule rule = gauss_hermite_rule(n, 1.0);
    rule.measure_id = "position";
    return rule;
  }
  // Discretized Stieltjes: refine the auxiliary grid until the recurrence
  // coefficients stabilize.
  const double R = support_radius(m, 60.0 + 2.0 * (n + 1));
  Eigen::VectorXd a_prev, b_prev;
  Eigen::VectorXd a, b;
  int panels = 60;
  for (int iter = 0; iter < 5; ++iter, panels *= 2) {
    Eigen::VectorXd xg, wg;
    discretize_measure(m, R, panels, 30, xg, wg);
    stieltjes_recurrence(xg, wg, n, a, b);
    if (iter > 0) {
      const double da = (a - a_prev).cwiseAbs().maxCoeff();
      const double db = (b - b_prev).cwiseAbs().maxCoeff();
      if (da < 1e-13 * (1.0 + a.cwiseAbs().maxCoeff()) &&
          db < 1e-13 * b.cwiseAbs().maxCoeff())
        break;
    }
    a_prev = a;
    b_prev = b;
  }
  QuadratureRule rule;
  golub_welsch(a, b, n, rule.nodes, rule.weights);
  rule.measure_id = "position";
  rule.exact_degree = (m.deriv_poly_degree >= 0) ? 2 * n - 1 : -1;
  return rule;
}

double OrthonormalBasis::evaluate(int k, double x) const {
  return eval_all(x)[k];
}

Eigen::VectorXd OrthonormalBasis::eval_all(double x) const {
  Eigen::VectorXd p(size);
  p[0] = 1.0 / std::sqrt(b[0]);
  if (size > 1) p[1] = (x - a[0]) * p[0] / std::sqrt(b[1]);
  for (int k = 1; k + 1 < size; ++k)
    p[k + 1] =
        ((x - a[k]) * p[k] - std::sqrt(b[k]) * p[k - 1]) / std::sqrt(b[k + 1]);
  return p;
}

Eigen::VectorXd OrthonormalBasis::eval_deriv_all(double x) const {
  Eigen::VectorXd p = eval_all(x), dp(size);
  dp[0] = 0.0;
  if (size > 1) dp[1] = p[0] / std::sqrt(b[1]);
  for (int k = 1; k + 1 < size; ++k)
    dp[k + 1] = ((x - a[k]) * dp[k] + p[k] - std::sqrt(b[k]) * dp[k - 1]) /
                std::sqrt(b[k + 1]);
  return dp;
}

OrthonormalBasis hermite_basis(int N, double beta) {
  if (N < 1) throw std::invalid_argument("hermite_basis: N >= 1");
  OrthonormalBasis basis;
  basis.size = N;
  basis.a = Eigen::VectorXd::Zero(N);
  basis.b.resize(N);
  basis.b[0] = 1.0;
  for (int k = 1; k < N; ++k) basis.b[k] = k / beta;
  basis.measure_id = "velocity";
  basis.gaussian = (beta == 1.0);
  return basis;
}

OrthonormalBasis stieltjes_basis(const Potential& pot,
                                 const QuadratureRule& quad, int N) {
  if (N < 1) throw std::invalid_argument("stieltjes_basis: N >= 1");
  if (pot.dim != 1)
    throw std::invalid_argument(
        "stieltjes_basis: d = 1 only (tensorize for d > 1)");
  if (quad.exact_degree >= 0 && quad.exact_degree < 2 * N + 2)
    throw std::invalid_argument(
        "stieltjes_basis: quadrature exact degree " +
        std::to_string(quad.exact_degree) + " < 2N+2 = " +
        std::to_string(2 * N + 2));
  const Marginal1D& m = require_marginal(pot);

  OrthonormalBasis basis;
  basis.size = N;
  basis.measure_id = "position";
  if (m.gaussian) {
    basis.a = Eigen::VectorXd::Zero(N);
    basis.b.resize(N);
    basis.b[0] = 1.0;
    for (int k = 1; k < N; ++k) basis.b[k] = k;
    basis.gaussian = true;
    return basis;
  }
  stieltjes_recurrence(quad.nodes, quad.weights, N - 1, basis.a, basis.b);
  basis.a.conservativeResize(N);
  basis.b.conservativeResize(N);

  const Eigen::MatrixXd g = gram_matrix(basis, quad);
  const double dev =
      (g - Eigen::MatrixXd::Identity(N, N)).cwiseAbs().maxCoeff();
  if (dev > 1e-8)
    throw std::runtime_error(
        "stieltjes_basis: orthogonality lost (Gram deviation " +
        std::to_string(dev) + "); enlarge the quadrature or reduce N");
  return basis;
}

Eigen::MatrixXd gram_matrix(const OrthonormalBasis& basis,
                            const QuadratureRule& quad) {
  const int N = basis.size, Q = quad.nodes.size();
  Eigen::MatrixXd vals(N, Q);
  for (int q = 0; q < Q; ++q) vals.col(q) = basis.eval_all(quad.nodes[q]);
  return vals * quad.weights.asDiagonal() * vals.transpose();
}

}  // namespace hypolab
