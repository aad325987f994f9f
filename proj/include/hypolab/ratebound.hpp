#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace hypolab {

struct OperatorSet;

/// The explicit constant chain of the decay-rate bound: inputs
/// (Lambda, beta, c_hyp, alpha, upsilon) and every intermediate
/// quantity down to (nu1, nu2).
struct RateLedger {
  // inputs
  double Lambda = 0.0, beta = 0.0, c_hyp = 0.0, alpha = 0.0, upsilon = 0.0;
  // chain
  double delta = 0.0;
  double r_of_alpha = 0.0;
  double s = 0.0;
  double a1 = 0.0, a2 = 0.0, a3 = 0.0;
  double eps_bar = 0.0;
  double eps_bar_max = 0.0;
  double epsilon = 0.0;
  double kappa = 0.0;
  double n1 = 0.0, n2 = 0.0, n3 = 0.0;
  double kappa1 = 0.0, kappa2 = 0.0;
  double nu1 = 0.0, nu2 = 0.0;
  // provenance of c_hyp (truncation metadata travels with the ledger)
  std::string c_hyp_source;  // e.g. "numeric(nx=16,nw=16)" or "override"
};

/// Evaluate the whole constant chain.  All inputs strictly positive except
/// c_hyp >= 0.  Raises naming the offending stage on non-finite
/// intermediates.
RateLedger build_ledger(double Lambda, double beta, double c_hyp, double alpha,
                        double upsilon);

/// nu2 as a function of alpha at fixed (Lambda, beta, c_hyp, upsilon).
std::vector<std::pair<double, double>> nu2_curve(
    double Lambda, double beta, double c_hyp, double upsilon,
    const std::vector<double>& alphas);

/// alpha maximizing nu2 (and eps_bar): sqrt(n1/n3) = sqrt(a1/a3).
double nu2_argmax(double Lambda, double beta, double c_hyp);

struct EntropyBoundsReport {
  double H_eps = 0.0;
  bool within_bounds = false;
};

/// Modified entropy H_eps[f] = ||f||^2/2 + eps (Bf, f) and its norm
/// equivalence (1-eps)/2 ||f||^2 <= H_eps[f] <= (1+eps)/2 ||f||^2.
EntropyBoundsReport entropy_bounds_check(double epsilon,
                                         const Eigen::VectorXd& f,
                                         const Eigen::MatrixXd& B);

/// H_eps via the factored B application (no dense B needed).
double entropy_value(const OperatorSet& ops, double epsilon,
                     const Eigen::VectorXd& f);

/// CSV rows (alpha, nu2, kappa, epsilon, eps_bar), 17 significant digits.
std::string ledger_sweep_csv(double Lambda, double beta, double c_hyp,
                             double upsilon, const std::vector<double>& alphas);
std::string ledger_json(const RateLedger& led);

}  // namespace hypolab
