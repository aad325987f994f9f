#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "hypolab/operators.hpp"
#include "hypolab/ratebound.hpp"

namespace hypolab {

enum class Stepper { KrylovExpm, CrankNicolson };
Stepper stepper_from_string(const std::string& s);
std::string to_string(Stepper s);

/// Semigroup trajectory of the deviation f_t = T_t g - <g,1>: norms,
/// optional modified-entropy values, and the fitted tail decay rate.
struct DecayTrace {
  std::vector<double> times;
  std::vector<double> deviation_norms;
  std::vector<double> entropy_values;  // empty unless requested
  double fitted_rate = 0.0;
  double fit_t_lo = 0.0, fit_t_hi = 0.0;
  std::string initial_condition_id;
};

struct EvolveOptions {
  Stepper stepper = Stepper::KrylovExpm;
  double dt = 1e-3;            // Crank-Nicolson step
  int krylov_dim = 30;
  double krylov_tol = 1e-10;   // relative local error target per substep
  std::optional<double> entropy_epsilon;  // record H_eps along the trajectory
  std::string initial_condition_id = "custom";
};

/// Integrate df/dt = L f from f_0 = g - <g,1> 1, sampling at `times`
/// (strictly increasing, times[0] >= 0).
DecayTrace evolve(const OperatorSet& ops, const Eigen::VectorXd& g,
                  const std::vector<double>& times, const EvolveOptions& opts);

struct SpectrumResult {
  double gap = 0.0;
  std::vector<std::complex<double>> head;  // 20 eigenvalues of smallest -Re
};

/// Eigenvalues of L restricted to the complement of the constants;
/// gap = min -Re over that spectrum.  Dense solve, dimension-capped.
SpectrumResult spectral_gap(const OperatorSet& ops, int dense_cap = 2500);

struct DissipationReport {
  double min_ratio = 0.0;
  bool holds = false;
};

/// Centered-difference check of D_eps[t] = -dH_eps/dt >= kappa ||f_t||^2
/// along a trace computed with entropy values (5% slack for the time
/// discretization).  Vacuous traces (zero deviation) report +inf.
DissipationReport entropy_dissipation_check(const OperatorSet& ops,
                                            const RateLedger& ledger,
                                            const DecayTrace& trace);

/// Exact derivative of the modified entropy via the matrices:
/// D_eps = -(Lf,f) - eps ((B L f, f) + (B f, L f)).
double entropy_dissipation_exact(const OperatorSet& ops, double epsilon,
                                 const Eigen::VectorXd& f);

}  // namespace hypolab
