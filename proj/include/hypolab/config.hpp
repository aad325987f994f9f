#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hypolab/model.hpp"
#include "hypolab/sde.hpp"

namespace hypolab {

/// Declarative experiment description parsed from a JSON config file.
/// Unknown keys anywhere in the tree are rejected with their path.
struct ExperimentConfig {
  std::string potential_id = "harmonic";
  int d = 1;
  std::vector<double> alphas{1.0};  // single value or a grid
  double beta = 1.0;

  int nx = 16, nw = 16;

  // ledger
  double upsilon = 1.0;
  std::optional<double> c_hyp_override;

  // evolution
  std::string stepper = "krylov-expm";
  double evolve_dt = 1e-3;
  double horizon = 0.0;  // 0: choose 20/nu2 automatically
  int samples = 400;
  std::string initial = "x";

  // sde
  std::string scheme = "baoab";
  double sde_dt = 1e-3;
  std::int64_t n_paths = 20000;
  double sde_horizon = 8.0;
  std::uint64_t seed = 42;
  std::vector<std::string> observables{"x"};
  InitialLaw sde_initial = InitialLaw::point(
      (Eigen::VectorXd(1) << 2.0).finished(),
      (Eigen::VectorXd(1) << 0.0).finished());

  std::string output_dir = "out";

  double alpha() const { return alphas.front(); }
  Potential make_pot() const { return make_potential(potential_id, d); }
  ModelParams params(double a) const { return ModelParams(d, a, beta); }
};

/// Parse + validate; `source_name` appears in diagnostics.
ExperimentConfig parse_config(const std::string& json_text,
                              const std::string& source_name);
ExperimentConfig load_config(const std::string& path);

/// Canonical JSON echo of the config (used in manifests; round-trips
/// through parse_config to an equivalent config).
std::string config_to_json(const ExperimentConfig& cfg);

/// FNV-1a hash of the canonical config text.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace hypolab
