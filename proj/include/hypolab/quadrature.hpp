#pragma once

#include <Eigen/Dense>
#include <string>

#include "hypolab/model.hpp"

namespace hypolab {

/// Nodes/weights of a quadrature rule for one marginal probability measure.
/// exact_degree is the highest polynomial degree integrated exactly;
/// -1 flags an adaptive rule (non-polynomial custom potentials).
struct QuadratureRule {
  Eigen::VectorXd nodes;
  Eigen::VectorXd weights;
  std::string measure_id;  // "position" or "velocity"
  int exact_degree = 0;
};

/// Orthonormal polynomials of a 1D probability measure via their three-term
/// recurrence.  With b_k the monic recurrence coefficients (b_0 = total
/// mass), the orthonormal family satisfies
///   sqrt(b_{k+1}) p_{k+1}(x) = (x - a_k) p_k(x) - sqrt(b_k) p_{k-1}(x).
struct OrthonormalBasis {
  int size = 0;
  Eigen::VectorXd a;  // a_0 .. a_{size-1}
  Eigen::VectorXd b;  // b_0 .. b_{size-1}; b_0 = mass (= 1 for probabilities)
  std::string measure_id;
  bool gaussian = false;  // standard normal marginal (analytic ladder algebra)

  double evaluate(int k, double x) const;
  /// values p_0(x) .. p_{size-1}(x)
  Eigen::VectorXd eval_all(double x) const;
  /// derivatives p_0'(x) .. p_{size-1}'(x)
  Eigen::VectorXd eval_deriv_all(double x) const;
};

/// n-point Gauss rule for the centered Gaussian with variance 1/beta
/// (the velocity marginal nu_beta).  Exact through degree 2n-1.
QuadratureRule gauss_hermite_rule(int n, double beta);

/// n-point Gauss rule for the position marginal e^{-Phi} dx (d = 1 only).
/// Gaussian marginals map to gauss_hermite_rule; everything else goes
/// through a discretized Stieltjes procedure on a fine composite rule.
QuadratureRule position_rule(const Potential& pot, int n);

/// Orthonormal polynomial basis of L^2(e^{-Phi} dx), d = 1, degrees
/// 0..N-1, computed by the Stieltjes procedure against `quad`.
/// Requires quad.exact_degree >= 2N+2 (or adaptive).  Raises if the Gram
/// matrix deviates from identity by more than 1e-8.
OrthonormalBasis stieltjes_basis(const Potential& pot,
                                 const QuadratureRule& quad, int N);

/// Orthonormal Hermite basis for nu_beta (analytic recurrence).
OrthonormalBasis hermite_basis(int N, double beta);

/// Gram matrix <p_i, p_j> of `basis` under `quad` (test/diagnostic helper).
Eigen::MatrixXd gram_matrix(const OrthonormalBasis& basis,
                            const QuadratureRule& quad);

}  // namespace hypolab
