#include "hypolab/operators.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <fstream>
#include <stdexcept>

namespace hypolab {

namespace {

/// Analytic 1D blocks for a standard-normal marginal: psi_i' = sqrt(i)
/// psi_{i-1} and x psi_i = sqrt(i+1) psi_{i+1} + sqrt(i) psi_{i-1}.
void gaussian_blocks(int N, Eigen::MatrixXd& Dx, Eigen::MatrixXd& Vx,
                     Eigen::MatrixXd& Kx) {
  Dx = Eigen::MatrixXd::Zero(N, N);
  Vx = Eigen::MatrixXd::Zero(N, N);
  Kx = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    if (i > 0) {
      Dx(i - 1, i) = std::sqrt((double)i);
      Vx(i - 1, i) = std::sqrt((double)i);
    }
    if (i + 1 < N) Vx(i + 1, i) = std::sqrt((double)i + 1.0);
    Kx(i, i) = i;
  }
}

void quadrature_blocks(const Potential& pot, const OrthonormalBasis& basis,
                       const QuadratureRule& rule, Eigen::MatrixXd& Dx,
                       Eigen::MatrixXd& Vx, Eigen::MatrixXd& Kx) {
  const int N = basis.size, Q = rule.nodes.size();
  Eigen::MatrixXd vals(N, Q), ders(N, Q);
  Eigen::VectorXd dphi(Q);
  const Marginal1D& m = *pot.marginal;
  for (int q = 0; q < Q; ++q) {
    vals.col(q) = basis.eval_all(rule.nodes[q]);
    ders.col(q) = basis.eval_deriv_all(rule.nodes[q]);
    dphi[q] = m.deriv(rule.nodes[q]);
  }
  const auto W = rule.weights.asDiagonal();
  Dx = vals * W * ders.transpose();            // (j, i) = <psi_i', psi_j>
  Vx = vals * (rule.weights.cwiseProduct(dphi)).asDiagonal() *
       vals.transpose();                        // (j, i) = <phi' psi_i, psi_j>
  Kx = ders * W * ders.transpose();
}

}  // namespace

TensorBasis::TensorBasis(int d, int Nx, int Nw) : d_(d), Nx_(Nx), Nw_(Nw) {
  if (d < 1 || d > 3)
    throw std::invalid_argument("TensorBasis: d must be in {1,2,3}");
  if (Nx < 2 || Nw < 2) throw std::invalid_argument("TensorBasis: N >= 2");
  if (Nx > 64 || Nw > 64)
    throw std::invalid_argument("TensorBasis: per-axis degree cap is 64");
  x_multis_ = enumerate(d, Nx);
  w_multis_ = enumerate(d, Nw);
  for (int i = 0; i < (int)x_multis_.size(); ++i)
    x_lookup_[encode(x_multis_[i])] = i;
  for (int i = 0; i < (int)w_multis_.size(); ++i)
    w_lookup_[encode(w_multis_[i])] = i;
}

std::vector<std::array<int, 3>> TensorBasis::enumerate(int d, int N) {
  // total degree <= N-1, ordered by degree then lexicographically;
  // element 0 is the zero multi-index (the constant function).
  std::vector<std::array<int, 3>> out;
  for (int deg = 0; deg <= N - 1; ++deg) {
    std::array<int, 3> m{{0, 0, 0}};
    // iterate all multi-indices of exact total degree `deg`
    std::function<void(int, int)> rec = [&](int coord, int left) {
      if (coord == d - 1) {
        m[coord] = left;
        out.push_back(m);
        return;
      }
      for (int v = 0; v <= left; ++v) {
        m[coord] = v;
        rec(coord + 1, left - v);
      }
    };
    rec(0, deg);
  }
  return out;
}

int TensorBasis::x_total_degree(int ix) const {
  const auto& m = x_multis_[ix];
  return m[0] + m[1] + m[2];
}
int TensorBasis::w_total_degree(int iw) const {
  const auto& m = w_multis_[iw];
  return m[0] + m[1] + m[2];
}
int TensorBasis::x_index(const std::array<int, 3>& m) const {
  auto it = x_lookup_.find(encode(m));
  return it == x_lookup_.end() ? -1 : it->second;
}
int TensorBasis::w_index(const std::array<int, 3>& m) const {
  auto it = w_lookup_.find(encode(m));
  return it == w_lookup_.end() ? -1 : it->second;
}
BasisIndex TensorBasis::unflatten(int k) const {
  BasisIndex b;
  b.flat = k;
  b.x_degree = x_multis_[k / Mw()];
  b.w_degree = w_multis_[k % Mw()];
  return b;
}

OperatorSet assemble(const ModelParams& params, const Potential& pot, int Nx,
                     int Nw, int dim_cap) {
  if (params.d > 3)
    throw std::invalid_argument(
        "assemble: the discretized pipeline supports d in {1,2,3}");
  if (pot.dim != params.d)
    throw std::invalid_argument("assemble: potential dimension mismatch");
  if (!pot.marginal)
    throw std::invalid_argument(
        "assemble: potential '" + pot.id +
        "' is not coordinate-separable; the Galerkin pipeline needs "
        "identical 1D marginals (use d = 1 or the harmonic potential)");

  OperatorSet ops;
  ops.params = params;
  ops.basis = TensorBasis(params.d, Nx, Nw);
  const int dim = ops.basis.dim();
  if (dim > dim_cap)
    throw std::invalid_argument("assemble: dimension " + std::to_string(dim) +
                                " exceeds cap " + std::to_string(dim_cap));

  const double alpha = params.alpha, beta = params.beta;

  // 1D position blocks, built from the per-coordinate marginal
  const Marginal1D& marg = *pot.marginal;
  Potential pot1;
  pot1.id = pot.id;
  pot1.dim = 1;
  pot1.marginal = marg;
  pot1.evaluate = [marg](const Eigen::VectorXd& x) { return marg.value(x[0]); };
  pot1.gradient = [marg](const Eigen::VectorXd& x) {
    return (Eigen::VectorXd(1) << marg.deriv(x[0])).finished();
  };
  pot1.hessian = [marg](const Eigen::VectorXd& x) {
    return (Eigen::MatrixXd(1, 1) << marg.second(x[0])).finished();
  };
  if (marg.gaussian) {
    gaussian_blocks(Nx, ops.Dx, ops.Vx, ops.Kx);
    ops.pos_basis = stieltjes_basis(
        pot1, QuadratureRule{{}, {}, "position", 4 * Nx + 8}, Nx);
  } else {
    const int extra =
        marg.deriv_poly_degree > 0 ? (marg.deriv_poly_degree + 1) / 2 : 8;
    const int nq = 2 * Nx + 4 + extra;
    QuadratureRule rule = position_rule(pot1, nq);
    ops.pos_basis = stieltjes_basis(pot1, rule, Nx);
    quadrature_blocks(pot1, ops.pos_basis, rule, ops.Dx, ops.Vx, ops.Kx);
  }
  ops.vel_basis = hermite_basis(Nw, beta);
  // the multiplication block <phi' psi_i, psi_j> equals Dx + Dx^T by
  // integration by parts; using that form keeps A antisymmetric to
  // rounding (the quadrature Vx stays available as a diagnostic)
  const Eigen::MatrixXd Vx_ibp = ops.Dx + ops.Dx.transpose();

  // velocity ladder blocks: Dw = sqrt(beta) * lower, Xw = (lower+lower^T)/sqrt(beta)
  const double sqb = std::sqrt(beta);

  const int Mx = ops.basis.Mx(), Mw = ops.basis.Mw();
  std::vector<Eigen::Triplet<double>> tS, tA;
  tS.reserve(dim);
  tA.reserve((size_t)dim * (2 * Nx + 4));

  for (int iw = 0; iw < Mw; ++iw) {
    const int wdeg = ops.basis.w_total_degree(iw);
    for (int ix = 0; ix < Mx; ++ix) {
      const int col = ops.basis.flat(ix, iw);
      if (wdeg > 0) tS.emplace_back(col, col, -alpha * wdeg);

      const auto& mx = ops.basis.x_multi(ix);
      const auto& mw = ops.basis.w_multi(iw);
      for (int c = 0; c < params.d; ++c) {
        const int jc = mw[c];
        // -w_c d/dx_c: couples w-degree jc -> jc +/- 1, x via Dx column
        // (1/beta) phi'(x_c) d/dw_c: lowers w-degree, x via Vx column
        for (int dj : {-1, +1}) {
          const int jn = jc + dj;
          if (jn < 0) continue;
          auto mwn = mw;
          mwn[c] = jn;
          const int iwn = ops.basis.w_index(mwn);
          if (iwn < 0) continue;
          // <w h_jc, h_jn> = sqrt(max(jc,jn))/sqrt(beta)
          const double xw = std::sqrt((double)std::max(jc, jn)) / sqb;
          // <d/dw h_jc, h_jn> = sqrt(beta) sqrt(jc) for jn = jc-1
          const double dw = (dj == -1) ? sqb * std::sqrt((double)jc) : 0.0;
          for (int in = 0; in < Nx; ++in) {
            const double dxv = ops.Dx(in, mx[c]);
            const double vxv = Vx_ibp(in, mx[c]);
            const double entry = -dxv * xw + (1.0 / beta) * vxv * dw;
            if (entry == 0.0) continue;
            auto mxn = mx;
            mxn[c] = in;
            const int ixn = ops.basis.x_index(mxn);
            if (ixn < 0) continue;  // Galerkin truncation
            tA.emplace_back(ops.basis.flat(ixn, iwn), col, entry);
          }
        }
      }
    }
  }

  ops.S.resize(dim, dim);
  ops.S.setFromTriplets(tS.begin(), tS.end());
  ops.A.resize(dim, dim);
  ops.A.setFromTriplets(tA.begin(), tA.end());
  ops.A.prune(0.0);
  ops.L = ops.S - ops.A;

  ops.PS_diag = Eigen::VectorXd::Zero(dim);
  ops.P_diag = Eigen::VectorXd::Zero(dim);
  for (int ix = 0; ix < Mx; ++ix) {
    const int k = ops.basis.flat(ix, 0);
    ops.PS_diag[k] = 1.0;
    if (ix > 0) {
      ops.P_diag[k] = 1.0;
      ops.macro.push_back(k);
    }
  }

  ops.AP = ops.A * ops.P_diag.asDiagonal();
  ops.AP.prune(0.0);
  ops.A2P = (ops.A * ops.AP).pruned();

  const int Mmac = (int)ops.macro.size();
  ops.G_mac.resize(Mmac, Mmac);
  Eigen::MatrixXd A2P_mac = Eigen::MatrixXd::Zero(dim, Mmac);
  for (int c = 0; c < Mmac; ++c)
    A2P_mac.col(c) = ops.A2P.col(ops.macro[c]);
  for (int r = 0; r < Mmac; ++r) ops.G_mac.row(r) = A2P_mac.row(ops.macro[r]);
  ops.IminusG_llt.compute(Eigen::MatrixXd::Identity(Mmac, Mmac) - ops.G_mac);
  if (ops.IminusG_llt.info() != Eigen::Success)
    throw std::runtime_error("assemble: I - G is not positive definite");
  return ops;
}

Eigen::VectorXd apply_AP(const OperatorSet& ops, const Eigen::VectorXd& f) {
  if (!f.allFinite()) throw std::invalid_argument("apply_AP: non-finite input");
  return ops.AP * f;
}

Eigen::VectorXd apply_A2P(const OperatorSet& ops, const Eigen::VectorXd& f) {
  if (!f.allFinite())
    throw std::invalid_argument("apply_A2P: non-finite input");
  return ops.A2P * f;
}

Eigen::MatrixXd build_G(const OperatorSet& ops) { return ops.G_mac; }

Eigen::MatrixXd build_B(const OperatorSet& ops) {
  const int dim = ops.dim(), Mmac = (int)ops.macro.size();
  // rows of (AP)^T are columns of AP, nonzero only on range(P)
  Eigen::MatrixXd APt_mac(Mmac, dim);
  const Eigen::MatrixXd APd = Eigen::MatrixXd(ops.AP);
  for (int r = 0; r < Mmac; ++r) APt_mac.row(r) = APd.col(ops.macro[r]);
  const Eigen::MatrixXd solved = ops.IminusG_llt.solve(APt_mac);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(dim, dim);
  for (int r = 0; r < Mmac; ++r) B.row(ops.macro[r]) = solved.row(r);
  return B;
}

Eigen::VectorXd apply_B(const OperatorSet& ops, const Eigen::VectorXd& f) {
  Eigen::VectorXd t = ops.AP.transpose() * f;
  Eigen::VectorXd t_mac((int)ops.macro.size());
  for (int r = 0; r < (int)ops.macro.size(); ++r) t_mac[r] = t[ops.macro[r]];
  Eigen::VectorXd s = ops.IminusG_llt.solve(t_mac);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(ops.dim());
  for (int r = 0; r < (int)ops.macro.size(); ++r) out[ops.macro[r]] = s[r];
  return out;
}

Eigen::VectorXd observable_coefficients(const OperatorSet& ops,
                                        const std::string& name) {
  if (ops.params.d != 1)
    throw std::invalid_argument(
        "observable_coefficients: named observables are 1D");
  const int Mx = ops.basis.Mx(), Mw = ops.basis.Mw();
  auto jacobi = [](const OrthonormalBasis& b) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(b.size, b.size);
    for (int i = 0; i < b.size; ++i) {
      J(i, i) = b.a[i];
      if (i + 1 < b.size) J(i, i + 1) = J(i + 1, i) = std::sqrt(b.b[i + 1]);
    }
    return J;
  };
  const Eigen::MatrixXd Jx = jacobi(ops.pos_basis), Jw = jacobi(ops.vel_basis);
  Eigen::VectorXd ex = Eigen::VectorXd::Unit(Mx, 0),
                  ew = Eigen::VectorXd::Unit(Mw, 0);
  Eigen::VectorXd cx = ex, cw = ew;
  if (name == "1") {
  } else if (name == "x") {
    cx = Jx * ex;
  } else if (name == "x2") {
    cx = Jx * (Jx * ex);
  } else if (name == "w") {
    cw = Jw * ew;
  } else if (name == "w2") {
    cw = Jw * (Jw * ew);
  } else if (name == "xw") {
    cx = Jx * ex;
    cw = Jw * ew;
  } else if (name == "x+w") {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(ops.dim());
    Eigen::VectorXd gx = Jx * ex, gw = Jw * ew;
    for (int i = 0; i < Mx; ++i) out[ops.basis.flat(i, 0)] += gx[i];
    for (int j = 0; j < Mw; ++j) out[ops.basis.flat(0, j)] += gw[j];
    return out;
  } else {
    throw std::invalid_argument("observable_coefficients: unknown name '" +
                                name + "'");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(ops.dim());
  for (int i = 0; i < Mx; ++i)
    for (int j = 0; j < Mw; ++j)
      if (cx[i] != 0.0 && cw[j] != 0.0)
        out[ops.basis.flat(i, j)] = cx[i] * cw[j];
  return out;
}

double evaluate_at(const OperatorSet& ops, const Eigen::VectorXd& coeffs,
                   const Eigen::VectorXd& x, const Eigen::VectorXd& w) {
  const int d = ops.params.d;
  if (x.size() != d || w.size() != d)
    throw std::invalid_argument("evaluate_at: point dimension mismatch");
  std::vector<Eigen::VectorXd> pv(d), wv(d);
  for (int c = 0; c < d; ++c) {
    pv[c] = ops.pos_basis.eval_all(x[c]);
    wv[c] = ops.vel_basis.eval_all(w[c]);
  }
  double out = 0.0;
  for (int ix = 0; ix < ops.basis.Mx(); ++ix) {
    double px = 1.0;
    for (int c = 0; c < d; ++c) px *= pv[c][ops.basis.x_multi(ix)[c]];
    for (int iw = 0; iw < ops.basis.Mw(); ++iw) {
      const double coef = coeffs[ops.basis.flat(ix, iw)];
      if (coef == 0.0) continue;
      double pw = 1.0;
      for (int c = 0; c < d; ++c) pw *= wv[c][ops.basis.w_multi(iw)[c]];
      out += coef * px * pw;
    }
  }
  return out;
}

void dump_operator(const Eigen::SparseMatrix<double>& m,
                   const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("dump_operator: cannot open " + path);
  char buf[80];
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it) {
      std::snprintf(buf, sizeof buf, "%d %d %.17g\n", (int)it.row(),
                    (int)it.col(), it.value());
      os << buf;
    }
}

void dump_operator(const Eigen::MatrixXd& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("dump_operator: cannot open " + path);
  char buf[80];
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0) {
        std::snprintf(buf, sizeof buf, "%d %d %.17g\n", i, j, m(i, j));
        os << buf;
      }
}

}  // namespace hypolab
