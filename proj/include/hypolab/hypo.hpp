#pragma once

#include <optional>
#include <string>

#include "hypolab/operators.hpp"

namespace hypolab {

/// Certified inputs to the decay-rate theorem.  Each value carries a tag
/// recording whether it is the analytic constant ("analytic") or a discrete
/// eigen/singular value ("numeric").
struct HypoConstants {
  double lambda_m = 0.0;       // microscopic coercivity
  double lambda_M = 0.0;       // macroscopic coercivity
  double c1 = 0.0;
  double c2 = 0.0;
  double c5 = 0.0;             // c1 + c2
  double poincare_lambda = 0.0;  // Lambda used for lambda_M
  std::string lambda_m_tag = "numeric";
  std::string lambda_M_tag = "numeric";
  std::string c1_tag = "numeric";
  std::string c2_tag = "numeric";
  std::string poincare_tag = "numeric";
  /// set when analytic and numeric values disagree beyond 5% (truncation
  /// inadequacy); consumers should refine instead of picking a side
  bool truncation_warning = false;
  std::string warning_detail;
};

struct H1Result {
  double residual = 0.0;  // max |P A P|
  bool holds = false;
};

struct H2Result {
  double lambda_m_numeric = 0.0;
};

struct PoincareResult {
  double lambda_numeric = 0.0;
};

struct H3Result {
  double lambda_M_numeric = 0.0;
  bool holds = false;
  /// worst relative error of ||APf||^2 = (1/beta)||grad f_S||^2 over the
  /// sampled P-range vectors
  double identity_residual = 0.0;
};

struct H4Result {
  double c1_numeric = 0.0;
  double c2_numeric = 0.0;
  /// fitted intertwining constant in P A S = c3 P A (expected -alpha)
  double c3_fitted = 0.0;
  double intertwine_residual = 0.0;  // max |PAS - c3 PA|
};

H1Result check_H1(const OperatorSet& ops);
H2Result check_H2(const OperatorSet& ops);
PoincareResult estimate_poincare(const OperatorSet& ops);
H3Result check_H3(const OperatorSet& ops, const HypoConstants& consts);
H4Result check_H4(const OperatorSet& ops);

/// Run all checks and certify the constants for the rate theorem.
/// Analytic values are used where the paper provides them (lambda_m = alpha,
/// c1 = alpha/2, lambda_M = Lambda/beta when the potential carries an
/// analytic Poincare constant); numeric values otherwise.
HypoConstants certify(const OperatorSet& ops, const Potential& pot);

/// JSON text of the per-condition report (condition, analytic, numeric,
/// residual, holds).
std::string hypo_report_json(const OperatorSet& ops, const Potential& pot);

}  // namespace hypolab
