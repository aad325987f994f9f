#include "hypolab/hypo.hpp"

#include <json.hpp>
#include <cmath>
#include <random>
#include <stdexcept>

namespace hypolab {

namespace {

double max_abs(const Eigen::SparseMatrix<double>& m) {
  double v = 0.0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
      v = std::max(v, std::abs(it.value()));
  return v;
}

Eigen::SparseMatrix<double> mask_rows(const Eigen::SparseMatrix<double>& m,
                                      const Eigen::VectorXd& diag) {
  Eigen::SparseMatrix<double> out = diag.asDiagonal() * m;
  out.prune(0.0);
  return out;
}

Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solve_minus_G(
    const OperatorSet& ops) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-ops.G_mac);
  if (es.info() != Eigen::Success)
    throw std::runtime_error(
        "hypo: eigensolve of -G failed to converge (dimension " +
        std::to_string(ops.G_mac.rows()) + ")");
  return es;
}

/// ||grad f_S||^2 in L^2(e^{-Phi} dx) from the coefficients of a
/// P-range vector (w-degree 0 block), summed over coordinates.
double grad_norm2(const OperatorSet& ops, const Eigen::VectorXd& f) {
  const int d = ops.params.d;
  const int Mx = ops.basis.Mx();
  Eigen::VectorXd fs = Eigen::VectorXd::Zero(Mx);
  for (int ix = 0; ix < Mx; ++ix) fs[ix] = f[ops.basis.flat(ix, 0)];
  double out = 0.0;
  for (int c = 0; c < d; ++c) {
    // apply the 1D derivative coefficient map on coordinate c
    Eigen::VectorXd g = Eigen::VectorXd::Zero(Mx);
    for (int ix = 0; ix < Mx; ++ix) {
      if (fs[ix] == 0.0) continue;
      auto m = ops.basis.x_multi(ix);
      for (int in = 0; in < ops.basis.Nx(); ++in) {
        const double v = ops.Dx(in, m[c]);
        if (v == 0.0) continue;
        auto mn = m;
        mn[c] = in;
        const int ixn = ops.basis.x_index(mn);
        if (ixn >= 0) g[ixn] += v * fs[ix];
      }
    }
    out += g.squaredNorm();
  }
  return out;
}

}  // namespace

H1Result check_H1(const OperatorSet& ops) {
  H1Result r;
  for (int k = 0; k < ops.A.outerSize(); ++k) {
    if (ops.P_diag[k] == 0.0) continue;
    for (Eigen::SparseMatrix<double>::InnerIterator it(ops.A, k); it; ++it)
      if (ops.P_diag[it.row()] != 0.0)
        r.residual = std::max(r.residual, std::abs(it.value()));
  }
  r.holds = r.residual <= 1e-12 * max_abs(ops.A);
  return r;
}

H2Result check_H2(const OperatorSet& ops) {
  const Eigen::VectorXd s = Eigen::VectorXd(ops.S.diagonal());
  double lam = std::numeric_limits<double>::infinity();
  for (int k = 0; k < ops.dim(); ++k)
    if (ops.PS_diag[k] == 0.0) lam = std::min(lam, -s[k]);
  return H2Result{lam};
}

PoincareResult estimate_poincare(const OperatorSet& ops) {
  auto es = solve_minus_G(ops);
  return PoincareResult{ops.params.beta * es.eigenvalues()(0)};
}

H3Result check_H3(const OperatorSet& ops, const HypoConstants& consts) {
  H3Result r;
  // (AP)^T (AP) = -P A^2 P, so its smallest eigenvalue on range(P) is the
  // smallest eigenvalue of -G
  auto es = solve_minus_G(ops);
  r.lambda_M_numeric = es.eigenvalues()(0);
  r.holds = r.lambda_M_numeric >= consts.lambda_M - 1e-8;

  std::mt19937_64 eng(0x48335f6964ULL);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd f = Eigen::VectorXd::Zero(ops.dim());
    for (int m : ops.macro) f[m] = nd(eng);
    const double lhs = (ops.AP * f).squaredNorm();
    const double rhs = grad_norm2(ops, f) / ops.params.beta;
    const double rel = std::abs(lhs - rhs) / std::max(rhs, 1e-300);
    r.identity_residual = std::max(r.identity_residual, rel);
  }
  return r;
}

H4Result check_H4(const OperatorSet& ops) {
  H4Result r;
  const Eigen::SparseMatrix<double> PA = mask_rows(ops.A, ops.P_diag);
  const Eigen::VectorXd sdiag = Eigen::VectorXd(ops.S.diagonal());
  Eigen::SparseMatrix<double> PAS = PA * sdiag.asDiagonal();

  double num = 0.0, den = 0.0;
  for (int k = 0; k < PA.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(PA, k); it; ++it) {
      num += it.value() * (it.value() * sdiag[k]);
      den += it.value() * it.value();
    }
  r.c3_fitted = (den > 0.0) ? num / den : 0.0;
  const Eigen::SparseMatrix<double> res = PAS - r.c3_fitted * PA;
  r.intertwine_residual = max_abs(res);
  r.c1_numeric = 0.5 * std::abs(r.c3_fitted);

  const int dim = ops.dim(), Mmac = (int)ops.macro.size();
  Eigen::MatrixXd A2P_mac(dim, Mmac);
  for (int c = 0; c < Mmac; ++c)
    A2P_mac.col(c) = ops.A2P.col(ops.macro[c]);
  // A2P (I-G)^{-1} on range(P); (I-G) is symmetric so solve on the right
  const Eigen::MatrixXd M =
      ops.IminusG_llt.solve(A2P_mac.transpose()).transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(M);
  r.c2_numeric = svd.singularValues()(0);
  return r;
}

HypoConstants certify(const OperatorSet& ops, const Potential& pot) {
  HypoConstants hc;
  const double alpha = ops.params.alpha, beta = ops.params.beta;

  const H2Result h2 = check_H2(ops);
  hc.lambda_m = alpha;
  hc.lambda_m_tag = "analytic";
  if (std::abs(h2.lambda_m_numeric - alpha) > 0.05 * alpha) {
    hc.truncation_warning = true;
    hc.warning_detail += "lambda_m numeric deviates from alpha; ";
  }

  const PoincareResult pr = estimate_poincare(ops);
  if (pot.poincare_constant) {
    hc.poincare_lambda = *pot.poincare_constant;
    hc.poincare_tag = "analytic";
    if (std::abs(pr.lambda_numeric - hc.poincare_lambda) >
        0.05 * hc.poincare_lambda) {
      hc.truncation_warning = true;
      hc.warning_detail += "Poincare numeric vs analytic > 5%; ";
    }
  } else {
    hc.poincare_lambda = pr.lambda_numeric;
  }
  hc.lambda_M = hc.poincare_lambda / beta;
  hc.lambda_M_tag = hc.poincare_tag;

  const H4Result h4 = check_H4(ops);
  hc.c1 = 0.5 * alpha;
  hc.c1_tag = "analytic";
  if (std::abs(h4.c1_numeric - hc.c1) > 0.05 * hc.c1) {
    hc.truncation_warning = true;
    hc.warning_detail += "c1 numeric vs alpha/2 > 5%; ";
  }
  hc.c2 = h4.c2_numeric;
  hc.c5 = hc.c1 + hc.c2;
  return hc;
}

std::string hypo_report_json(const OperatorSet& ops, const Potential& pot) {
  using nlohmann::json;
  const double alpha = ops.params.alpha, beta = ops.params.beta;
  const H1Result h1 = check_H1(ops);
  const H2Result h2 = check_H2(ops);
  const PoincareResult pr = estimate_poincare(ops);
  HypoConstants pre;
  pre.lambda_M = (pot.poincare_constant ? *pot.poincare_constant
                                        : pr.lambda_numeric) /
                 beta;
  const H3Result h3 = check_H3(ops, pre);
  const H4Result h4 = check_H4(ops);

  json rep = json::array();
  rep.push_back({{"condition", "H1"},
                 {"analytic", 0.0},
                 {"numeric", h1.residual},
                 {"residual", h1.residual},
                 {"holds", h1.holds}});
  rep.push_back({{"condition", "H2"},
                 {"analytic", alpha},
                 {"numeric", h2.lambda_m_numeric},
                 {"residual", std::abs(h2.lambda_m_numeric - alpha)},
                 {"holds", std::abs(h2.lambda_m_numeric - alpha) <=
                               1e-12 * alpha}});
  json h3a;
  if (pot.poincare_constant)
    h3a = *pot.poincare_constant / beta;
  else
    h3a = nullptr;
  rep.push_back({{"condition", "H3"},
                 {"analytic", h3a},
                 {"numeric", h3.lambda_M_numeric},
                 {"residual", h3.identity_residual},
                 {"holds", h3.holds}});
  rep.push_back({{"condition", "H4"},
                 {"analytic", 0.5 * alpha},
                 {"numeric", h4.c1_numeric},
                 {"c2_numeric", h4.c2_numeric},
                 {"c3_fitted", h4.c3_fitted},
                 {"residual", h4.intertwine_residual},
                 {"holds", std::abs(h4.c1_numeric - 0.5 * alpha) <=
                               1e-10 * alpha}});
  json out;
  out["conditions"] = rep;
  out["poincare_numeric"] = pr.lambda_numeric;
  out["truncation"] = {{"nx", ops.basis.Nx()}, {"nw", ops.basis.Nw()},
                       {"d", ops.params.d}};
  return out.dump(2);
}

}  // namespace hypolab
