#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hypolab/model.hpp"

namespace hypolab {

enum class SdeScheme { EulerMaruyama, Baoab };
SdeScheme scheme_from_string(const std::string& s);
std::string to_string(SdeScheme s);

struct InitialLaw {
  enum class Kind { Point, Equilibrium } kind = Kind::Equilibrium;
  Eigen::VectorXd x0, w0;  // for Point

  static InitialLaw point(Eigen::VectorXd x, Eigen::VectorXd w);
  static InitialLaw equilibrium();
};

struct SdeConfig {
  ModelParams params;
  Potential pot;
  SdeScheme scheme = SdeScheme::Baoab;
  double dt = 1e-3;
  std::int64_t n_paths = 10000;
  double horizon = 10.0;
  std::uint64_t seed = 0;
  InitialLaw initial;
  int threads = 0;  // 0: hardware concurrency

  void validate() const;  // dt/horizon/path checks + EM stability guard
};

/// An observable g(x, w); for the overdamped dynamics w is empty.
struct Observable {
  std::string name;
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> eval;
};

/// Named pointwise observables: "1", "x", "w", "x2", "w2", "xw"
/// (first coordinate in d > 1).
Observable named_observable(const std::string& name);

struct ObservableTrace {
  std::string name;
  std::vector<double> times;
  std::vector<double> means;
  std::vector<double> std_errors;
  double target = std::numeric_limits<double>::quiet_NaN();
};

/// Monte Carlo means of the observables along the kinetic Langevin flow.
/// Deterministic for fixed (seed, config): per-path generators come from a
/// documented seed split and the reduction order is fixed, so serial and
/// threaded runs agree bit for bit.
std::vector<ObservableTrace> simulate(const SdeConfig& cfg,
                                      const std::vector<Observable>& obs,
                                      const std::vector<double>& sample_times);

/// The high-friction position process
/// dx = -(1/(alpha beta)) grad Phi dt + sqrt(2/(alpha beta)) dW.
std::vector<ObservableTrace> simulate_overdamped(
    const SdeConfig& cfg, const std::vector<Observable>& obs,
    const std::vector<double>& sample_times);

struct AlphaSweepRow {
  double alpha = 0.0;
  double rate_langevin = 0.0;
  double nu2 = 0.0;
  double rate_overdamped = 0.0;
};

/// Per-alpha fitted decay rates of the Langevin phase mean (E[x_1], E[w_1])
/// from a point start, the rate bound nu2(alpha), and the overdamped rate
/// from E[x_1].  Horizons may be given per alpha (default: cfg.horizon).
std::vector<AlphaSweepRow> alpha_sweep(
    const SdeConfig& cfg, const std::vector<double>& alphas,
    const std::function<double(double)>& nu2_of_alpha,
    const std::vector<double>& horizons = {});

/// Split the paths of `cfg` into `groups` disjoint blocks and return the
/// per-group fitted Langevin rates (for standard errors of fitted rates).
std::vector<double> langevin_rate_groups(const SdeConfig& cfg, int groups);

/// Fitted decay rate of the phase mean norm hypot(E[x_1], E[w_1]).
double langevin_mean_rate(const SdeConfig& cfg,
                          const std::vector<double>& sample_times);
/// Fitted decay rate of |E[x_1]| for the overdamped flow.
double overdamped_mean_rate(const SdeConfig& cfg,
                            const std::vector<double>& sample_times);

/// Equilibrium mean of a named observable by tensor quadrature (d = 1).
double observable_target(const Potential& pot, const ModelParams& params,
                         const std::string& name);

/// Terminal (x, w) states of every path at t = horizon, one row per path
/// (columns x_1..x_d, w_1..w_d).  Feeds the distributional tests.
Eigen::MatrixXd terminal_states(const SdeConfig& cfg);

}  // namespace hypolab
