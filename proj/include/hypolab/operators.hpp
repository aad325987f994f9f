#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <array>
#include <string>
#include <unordered_map>
#include <vector>

#include "hypolab/model.hpp"
#include "hypolab/quadrature.hpp"

namespace hypolab {

/// Index bookkeeping for the tensor basis psi_m(x) h_n(w): position and
/// velocity multi-indices with per-coordinate degree for d = 1 and
/// total-degree truncation for d > 1, linearized as flat = ix * Mw + iw.
struct BasisIndex {
  std::array<int, 3> x_degree{{0, 0, 0}};
  std::array<int, 3> w_degree{{0, 0, 0}};
  int flat = 0;
};

class TensorBasis {
 public:
  TensorBasis() = default;
  TensorBasis(int d, int Nx, int Nw);

  int d() const { return d_; }
  int Nx() const { return Nx_; }
  int Nw() const { return Nw_; }
  int Mx() const { return (int)x_multis_.size(); }
  int Mw() const { return (int)w_multis_.size(); }
  int dim() const { return Mx() * Mw(); }

  const std::array<int, 3>& x_multi(int ix) const { return x_multis_[ix]; }
  const std::array<int, 3>& w_multi(int iw) const { return w_multis_[iw]; }
  int x_total_degree(int ix) const;
  int w_total_degree(int iw) const;

  /// position of a multi-index in the enumeration, -1 if outside truncation
  int x_index(const std::array<int, 3>& m) const;
  int w_index(const std::array<int, 3>& m) const;

  int flat(int ix, int iw) const { return ix * Mw() + iw; }
  BasisIndex unflatten(int k) const;

 private:
  static std::vector<std::array<int, 3>> enumerate(int d, int N);
  static int encode(const std::array<int, 3>& m) {
    return m[0] + 64 * m[1] + 64 * 64 * m[2];
  }
  int d_ = 1, Nx_ = 0, Nw_ = 0;
  std::vector<std::array<int, 3>> x_multis_, w_multis_;
  std::unordered_map<int, int> x_lookup_, w_lookup_;
};

/// Galerkin matrices of the kinetic operators on the tensor basis.
/// S is diagonal (OU spectrum), A exactly antisymmetric, L = S - A;
/// the projections P_S (onto w-degree 0) and P (P_S minus the constant
/// mode) are diagonal 0/1 in this basis.
struct OperatorSet {
  ModelParams params;
  TensorBasis basis;
  OrthonormalBasis pos_basis;  // 1D position basis (per coordinate)
  OrthonormalBasis vel_basis;  // 1D Hermite basis for nu_beta

  Eigen::SparseMatrix<double> S, A, L, AP, A2P;
  Eigen::VectorXd PS_diag, P_diag;
  std::vector<int> macro;  // flat indices spanning range(P)
  Eigen::MatrixXd G_mac;   // P A^2 P restricted to range(P)
  Eigen::LLT<Eigen::MatrixXd> IminusG_llt;  // factor of I - G_mac

  // 1D position blocks (diagnostics / hypo checks).  Assembly itself uses
  // Dx + Dx^T for the multiplication block (exact integration by parts);
  // the quadrature-computed Vx is kept for consistency checks.
  Eigen::MatrixXd Dx;  // <psi_i', psi_j> at (j, i)
  Eigen::MatrixXd Vx;  // <phi' psi_i, psi_j> at (j, i), by quadrature
  Eigen::MatrixXd Kx;  // <psi_i', psi_j'>

  int dim() const { return basis.dim(); }
};

/// Assemble all operator matrices.  Requires a separable potential
/// (marginal set); Nx, Nw >= 2; Nx * Nw bounded by dim_cap.
OperatorSet assemble(const ModelParams& params, const Potential& pot, int Nx,
                     int Nw, int dim_cap = 40000);

/// A (P f); the result is supported on w-degrees with one entry 1.
Eigen::VectorXd apply_AP(const OperatorSet& ops, const Eigen::VectorXd& f);
/// A^2 (P f); supported on w-degrees 0 and 2.
Eigen::VectorXd apply_A2P(const OperatorSet& ops, const Eigen::VectorXd& f);

/// The macroscopic operator G = P A^2 P on range(P); equals (1/beta) times
/// the Galerkin matrix of (Laplace - grad Phi . grad) on the zero-mean
/// position subspace.
Eigen::MatrixXd build_G(const OperatorSet& ops);

/// B = (I + (AP)^T AP)^{-1} (AP)^T as a dense matrix; its rows are
/// supported on range(P) and ||B||_2 <= 1/2 (checked by the caller's tests,
/// not assumed here).
Eigen::MatrixXd build_B(const OperatorSet& ops);

/// Matrix-free application of B (preferred at larger dimensions).
Eigen::VectorXd apply_B(const OperatorSet& ops, const Eigen::VectorXd& f);

/// Coefficient vector of the named observable: one of "1", "x", "w", "x2",
/// "w2", "xw", "x+w" (d = 1 only; "x"/"w" refer to the sole coordinate).
Eigen::VectorXd observable_coefficients(const OperatorSet& ops,
                                        const std::string& name);

/// Evaluate a coefficient vector as a function at the phase point (x, w).
double evaluate_at(const OperatorSet& ops, const Eigen::VectorXd& coeffs,
                   const Eigen::VectorXd& x, const Eigen::VectorXd& w);

/// Coordinate-format dump (row, col, value; 17 significant digits).
void dump_operator(const Eigen::SparseMatrix<double>& m,
                   const std::string& path);
void dump_operator(const Eigen::MatrixXd& m, const std::string& path);

}  // namespace hypolab
