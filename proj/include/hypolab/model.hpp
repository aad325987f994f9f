#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>

namespace hypolab {

/// Physical parameters of the kinetic model: dimension d, damping alpha,
/// inverse temperature beta.  alpha, beta > 0 enforced at construction;
/// the spectral pipeline additionally requires d <= 3 (checked at assembly),
/// while the SDE integrators accept any d >= 1.
struct ModelParams {
  int d = 1;
  double alpha = 1.0;
  double beta = 1.0;

  ModelParams() = default;
  ModelParams(int d_, double alpha_, double beta_);
};

/// One-dimensional factor of a coordinate-separable potential,
/// Phi(x) = sum_c phi(x_c).  Used by the quadrature/operator modules.
struct Marginal1D {
  std::function<double(double)> value;   // phi (normalization folded in)
  std::function<double(double)> deriv;   // phi'
  std::function<double(double)> second;  // phi''
  int deriv_poly_degree = -1;            // degree of phi' if polynomial, else -1
  bool gaussian = false;                 // phi(x) = x^2/2 + log sqrt(2 pi)
};

/// A confining potential with its analytic data.  e^{-Phi} dx is a
/// probability measure (the normalization constant is folded into Phi as an
/// additive constant).
struct Potential {
  std::string id;
  int dim = 1;

  std::function<double(const Eigen::VectorXd&)> evaluate;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> hessian;

  /// Mass of e^{-Phi_raw} dx before folding, i.e. Phi = Phi_raw + log(Z).
  double normalization_constant = 1.0;
  /// Poincare constant of e^{-Phi} dx when known analytically; otherwise
  /// unset and estimated numerically (hypo module).
  std::optional<double> poincare_constant;
  /// Constant c with |hess Phi| <= c (1 + |grad Phi|) everywhere.
  double hessian_growth_constant = 0.0;
  double lower_bound = 0.0;

  /// Set when Phi separates into identical 1D marginals; required by the
  /// spectral pipeline.
  std::optional<Marginal1D> marginal;
};

/// Phi(x) = |x|^2/2 + (d/2) log(2 pi).  Poincare constant 1, growth
/// constant 1, exactly Gaussian marginals.
Potential make_harmonic_potential(int d);

/// Phi(x) = |x|^p + log Z_p with p even, p >= 4.  The growth constant is
/// obtained by maximizing |hess|/(1+|grad|) over a grid plus local
/// refinement; the Poincare constant is left for numerical estimation.
Potential make_even_power_potential(int p, int d);

struct C3Report {
  double max_ratio = 0.0;
  bool holds = false;
};

/// Evaluates |hess Phi|/(1 + |grad Phi|) on a grid of n_points per axis over
/// [-grid_extent, grid_extent]^d and compares against the stored growth
/// constant.  Non-finite values raise with the offending point in the text.
C3Report check_c3(const Potential& pot, double grid_extent, int n_points);

/// Resolve a potential by string id: "harmonic" or "power:<p>".
/// Custom ids can be registered programmatically.
Potential make_potential(const std::string& id, int d);
void register_potential(const std::string& id,
                        std::function<Potential(int)> factory);
bool is_registered_potential(const std::string& id);

}  // namespace hypolab
