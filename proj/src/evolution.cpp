#include "hypolab/evolution.hpp"

#include <Eigen/SparseLU>
#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hypolab/stats.hpp"

namespace hypolab {

Stepper stepper_from_string(const std::string& s) {
  if (s == "krylov-expm") return Stepper::KrylovExpm;
  if (s == "crank-nicolson") return Stepper::CrankNicolson;
  throw std::invalid_argument("unknown stepper '" + s +
                              "' (krylov-expm | crank-nicolson)");
}

std::string to_string(Stepper s) {
  return s == Stepper::KrylovExpm ? "krylov-expm" : "crank-nicolson";
}

namespace {

/// Arnoldi approximation of exp(tau L) v with adaptive substepping
/// (EXPOKIT-style local error control).
class KrylovPropagator {
 public:
  KrylovPropagator(const Eigen::SparseMatrix<double>& L, int m, double tol)
      : L_(L), m_(std::min<int>(m, (int)L.rows())), tol_(tol) {
    // 1-norm of L for the initial step-size guess
    Eigen::VectorXd colsum = Eigen::VectorXd::Zero(L.cols());
    for (int k = 0; k < L.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(L, k); it; ++it)
        colsum[it.col()] += std::abs(it.value());
    anorm_ = std::max(colsum.maxCoeff(), 1e-300);
  }

  void advance(Eigen::VectorXd& v, double t_total) {
    if (t_total <= 0.0) return;
    double t_done = 0.0;
    const int n = (int)v.size();
    Eigen::MatrixXd V(n, m_ + 1);
    while (t_done < t_total) {
      const double beta = v.norm();
      if (beta < 1e-300) return;  // identically zero from here on
      if (tau_ <= 0.0) {
        const double xm = 1.0 / m_;
        const double fact = std::pow((m_ + 1) / std::exp(1.0), m_ + 1) *
                            std::sqrt(2.0 * M_PI * (m_ + 1));
        tau_ = (1.0 / anorm_) *
               std::pow(fact * tol_ / (4.0 * beta * anorm_), xm);
      }
      double tau = std::min(tau_, t_total - t_done);

      // Arnoldi with one re-orthogonalization pass
      Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m_ + 2, m_ + 2);
      V.col(0) = v / beta;
      int mb = m_;
      bool happy = false;
      for (int j = 0; j < m_; ++j) {
        Eigen::VectorXd w = L_ * V.col(j);
        for (int i = 0; i <= j; ++i) {
          const double h = V.col(i).dot(w);
          w -= h * V.col(i);
          H(i, j) += h;
        }
        for (int i = 0; i <= j; ++i) {
          const double c = V.col(i).dot(w);
          w -= c * V.col(i);
          H(i, j) += c;
        }
        const double s = w.norm();
        if (s < 1e-12 * anorm_) {
          mb = j + 1;
          happy = true;
          break;
        }
        H(j + 1, j) = s;
        V.col(j + 1) = w / s;
      }
      double avnorm = 0.0;
      if (!happy) {
        avnorm = (L_ * V.col(m_)).norm();
        H(m_ + 1, m_) = 1.0;  // extension for the second error term
      }

      for (int reject = 0;; ++reject) {
        const int hdim = happy ? mb : m_ + 2;
        Eigen::MatrixXd F =
            (tau * H.topLeftCorner(hdim, hdim)).exp();
        double err_loc = 0.0;
        if (!happy) {
          const double phi1 = std::abs(beta * F(m_, 0));
          const double phi2 = std::abs(beta * F(m_ + 1, 0)) * avnorm;
          if (phi1 > 10.0 * phi2)
            err_loc = phi2;
          else if (phi1 > phi2)
            err_loc = phi1 * phi2 / (phi1 - phi2);
          else
            err_loc = phi1;
        }
        if (happy || err_loc <= tol_ * beta || reject >= 60) {
          if (reject >= 60 && err_loc > tol_ * beta)
            throw std::runtime_error(
                "krylov-expm: step size control failed near t = " +
                std::to_string(t_done));
          const int mx = happy ? mb : m_ + 1;
          v = beta * (V.leftCols(mx) * F.col(0).head(mx));
          t_done += tau;
          if (!happy) {
            const double gamma = 0.9, xm = 1.0 / m_;
            tau_ = tau * std::min(2.0, std::max(
                0.2, gamma * std::pow(tol_ * beta / err_loc, xm)));
          } else {
            tau_ = std::max(tau_, tau);
          }
          break;
        }
        const double gamma = 0.9, xm = 1.0 / m_;
        tau *= std::max(0.2, gamma * std::pow(tol_ * beta / err_loc, xm));
      }
    }
  }

 private:
  const Eigen::SparseMatrix<double>& L_;
  int m_;
  double tol_;
  double anorm_ = 1.0;
  double tau_ = 0.0;
};

/// Crank-Nicolson with a cached LU factorization; the step inside each
/// sampling interval divides it exactly.
class CrankNicolsonPropagator {
 public:
  CrankNicolsonPropagator(const Eigen::SparseMatrix<double>& L, double dt)
      : L_(L), dt_cfg_(dt) {
    if (!(dt > 0.0))
      throw std::invalid_argument("crank-nicolson: dt must be > 0");
  }

  void advance(Eigen::VectorXd& v, double t_total, double t_now) {
    if (t_total <= 0.0) return;
    const int n_steps = std::max(1, (int)std::ceil(t_total / dt_cfg_ - 1e-12));
    const double h = t_total / n_steps;
    if (std::abs(h - dt_factored_) > 1e-15 * h) factorize(h);
    for (int k = 0; k < n_steps; ++k) {
      const double before = v.norm();
      Eigen::VectorXd rhs = v + 0.5 * h * (L_ * v);
      v = lu_.solve(rhs);
      if (lu_.info() != Eigen::Success)
        throw std::runtime_error("crank-nicolson: solve failed");
      const double after = v.norm();
      if (after > before * (1.0 + 1e-9) + 1e-300)
        throw std::runtime_error(
            "crank-nicolson: residual growth (divergence) at t = " +
            std::to_string(t_now + (k + 1) * h));
    }
  }

 private:
  void factorize(double h) {
    Eigen::SparseMatrix<double> I(L_.rows(), L_.cols());
    I.setIdentity();
    Eigen::SparseMatrix<double> M = I - (0.5 * h) * L_;
    lu_.compute(M);
    if (lu_.info() != Eigen::Success)
      throw std::runtime_error("crank-nicolson: factorization failed");
    dt_factored_ = h;
  }
  const Eigen::SparseMatrix<double>& L_;
  double dt_cfg_, dt_factored_ = -1.0;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

}  // namespace

DecayTrace evolve(const OperatorSet& ops, const Eigen::VectorXd& g,
                  const std::vector<double>& times,
                  const EvolveOptions& opts) {
  if (times.empty()) throw std::invalid_argument("evolve: empty time grid");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < 0.0 || (i > 0 && times[i] <= times[i - 1]))
      throw std::invalid_argument(
          "evolve: times must be nonnegative and strictly increasing");
  }
  if (g.size() != ops.dim())
    throw std::invalid_argument("evolve: coefficient vector size mismatch");

  Eigen::VectorXd f = g;
  f[0] = 0.0;  // subtract <g,1> (coefficient of the constant mode)

  DecayTrace trace;
  trace.initial_condition_id = opts.initial_condition_id;
  trace.times = times;
  trace.deviation_norms.reserve(times.size());
  const bool want_entropy = opts.entropy_epsilon.has_value();
  if (want_entropy) trace.entropy_values.reserve(times.size());

  KrylovPropagator krylov(ops.L, opts.krylov_dim, opts.krylov_tol);
  CrankNicolsonPropagator cn(ops.L, opts.dt);

  double t_cur = 0.0;
  for (double t : times) {
    const double step = t - t_cur;
    if (step > 0.0) {
      if (opts.stepper == Stepper::KrylovExpm)
        krylov.advance(f, step);
      else
        cn.advance(f, step, t_cur);
      t_cur = t;
    }
    trace.deviation_norms.push_back(f.norm());
    if (want_entropy)
      trace.entropy_values.push_back(
          entropy_value(ops, *opts.entropy_epsilon, f));
  }

  const double n0 = trace.deviation_norms.front();
  const LogLinearFit fit =
      fit_decay_rate(trace.times, trace.deviation_norms, 1e-10 * n0);
  if (fit.valid) {
    trace.fitted_rate = fit.rate;
    trace.fit_t_lo = trace.times[fit.i_lo];
    trace.fit_t_hi = trace.times[fit.i_hi];
  }
  return trace;
}

SpectrumResult spectral_gap(const OperatorSet& ops, int dense_cap) {
  const int dim = ops.dim();
  if (dim > dense_cap)
    throw std::invalid_argument("spectral_gap: dimension " +
                                std::to_string(dim) +
                                " above the dense eigensolve cap");
  // deflate the constant mode: L e_0 = 0 and e_0^T L = 0 structurally
  Eigen::MatrixXd Ld = Eigen::MatrixXd(ops.L).block(1, 1, dim - 1, dim - 1);
  Eigen::EigenSolver<Eigen::MatrixXd> es(Ld, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("spectral_gap: eigensolver failed");
  std::vector<std::complex<double>> evs(es.eigenvalues().data(),
                                        es.eigenvalues().data() + dim - 1);
  std::sort(evs.begin(), evs.end(), [](auto a, auto b) {
    return -a.real() < -b.real();
  });
  SpectrumResult res;
  res.gap = -evs.front().real();
  res.head.assign(evs.begin(),
                  evs.begin() + std::min<std::size_t>(20, evs.size()));
  return res;
}

DissipationReport entropy_dissipation_check(const OperatorSet& /*ops*/,
                                            const RateLedger& ledger,
                                            const DecayTrace& trace) {
  if (trace.entropy_values.size() != trace.times.size())
    throw std::invalid_argument(
        "entropy_dissipation_check: trace has no entropy values");
  DissipationReport rep;
  const double n0 = trace.deviation_norms.front();
  if (n0 == 0.0) {  // vacuous: zero deviation stays zero
    rep.min_ratio = std::numeric_limits<double>::infinity();
    rep.holds = true;
    return rep;
  }
  rep.min_ratio = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < trace.times.size(); ++i) {
    const double h_prev = trace.entropy_values[i - 1];
    const double h_here = trace.entropy_values[i];
    const double h_next = trace.entropy_values[i + 1];
    if ((h_here > 0.0 && h_prev / h_here > 2.0) ||
        (h_next > 0.0 && h_here / h_next > 2.0))
      throw std::runtime_error(
          "entropy_dissipation_check: time grid too coarse for stable "
          "differencing near t = " + std::to_string(trace.times[i]) +
          "; refine the grid");
    const double nrm = trace.deviation_norms[i];
    if (nrm < 1e-9 * n0) continue;  // below differencing accuracy
    const double d_eps =
        -(h_next - h_prev) / (trace.times[i + 1] - trace.times[i - 1]);
    rep.min_ratio = std::min(rep.min_ratio, d_eps / (nrm * nrm));
  }
  rep.holds = rep.min_ratio >= ledger.kappa * 0.95;
  return rep;
}

double entropy_dissipation_exact(const OperatorSet& ops, double epsilon,
                                 const Eigen::VectorXd& f) {
  const Eigen::VectorXd lf = ops.L * f;
  return -f.dot(lf) -
         epsilon * (f.dot(apply_B(ops, lf)) + lf.dot(apply_B(ops, f)));
}

}  // namespace hypolab
