#include "hypolab/model.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace hypolab {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // log(2 pi)/2

double spectral_norm(const Eigen::MatrixXd& m) {
  if (m.rows() == 1) return std::abs(m(0, 0));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Maximize f over [lo, hi]: coarse grid, then golden-section refinement
/// around the best sample.
double grid_maximize(const std::function<double(double)>& f, double lo,
                     double hi, int n) {
  double best = -std::numeric_limits<double>::infinity(), best_x = lo;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (hi - lo) * i / (n - 1);
    const double v = f(x);
    if (v > best) best = v, best_x = x;
  }
  const double h = (hi - lo) / (n - 1);
  double a = std::max(lo, best_x - h), b = std::min(hi, best_x + h);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a), d = a + gr * (b - a);
  for (int it = 0; it < 200 && b - a > 1e-14 * (1 + std::abs(a)); ++it) {
    if (f(c) > f(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - gr * (b - a);
    d = a + gr * (b - a);
  }
  return std::max(best, f(0.5 * (a + b)));
}

std::map<std::string, std::function<Potential(int)>>& registry() {
  static std::map<std::string, std::function<Potential(int)>> reg;
  return reg;
}
std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

ModelParams::ModelParams(int d_, double alpha_, double beta_)
    : d(d_), alpha(alpha_), beta(beta_) {
  if (d < 1) throw std::invalid_argument("ModelParams: d must be >= 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("ModelParams: alpha must be > 0");
  if (!(beta > 0.0) || !std::isfinite(beta))
    throw std::invalid_argument("ModelParams: beta must be > 0");
}

Potential make_harmonic_potential(int d) {
  if (d < 1) throw std::invalid_argument("harmonic potential: d must be >= 1");
  Potential pot;
  pot.id = "harmonic";
  pot.dim = d;
  pot.evaluate = [d](const Eigen::VectorXd& x) {
    return 0.5 * x.squaredNorm() + d * kHalfLog2Pi;
  };
  pot.gradient = [](const Eigen::VectorXd& x) { return x; };
  pot.hessian = [d](const Eigen::VectorXd&) {
    return Eigen::MatrixXd::Identity(d, d).eval();
  };
  pot.normalization_constant = std::pow(2.0 * M_PI, 0.5 * d);
  pot.poincare_constant = 1.0;
  pot.hessian_growth_constant = 1.0;  // ratio 1/(1+|x|), max at x = 0
  pot.lower_bound = d * kHalfLog2Pi;
  Marginal1D m;
  m.value = [](double x) { return 0.5 * x * x + kHalfLog2Pi; };
  m.deriv = [](double x) { return x; };
  m.second = [](double) { return 1.0; };
  m.deriv_poly_degree = 1;
  m.gaussian = true;
  pot.marginal = m;
  return pot;
}

Potential make_even_power_potential(int p, int d) {
  if (p < 4 || p % 2 != 0)
    throw std::invalid_argument(
        "even power potential: p must be even and >= 4");
  if (d < 1) throw std::invalid_argument("even power potential: d >= 1");

  // Z = integral of e^{-|x|^p} over R^d, computed by quadrature on the
  // radial profile r^{d-1} e^{-r^p} (composite Gauss-Legendre; the integrand
  // is negligible past r = 60^{1/p}).
  const double rmax = std::pow(60.0, 1.0 / p);
  // 50-panel, 20-point Legendre on [0, rmax]
  static const int kPts = 20;
  static const double gl_x[kPts] = {
      -0.9931285991850949, -0.9639719272779138, -0.9122344282513259,
      -0.8391169718222188, -0.7463319064601508, -0.6360536807265150,
      -0.5108670019508271, -0.3737060887154195, -0.2277858511416451,
      -0.0765265211334973, 0.0765265211334973,  0.2277858511416451,
      0.3737060887154195,  0.5108670019508271,  0.6360536807265150,
      0.7463319064601508,  0.8391169718222188,  0.9122344282513259,
      0.9639719272779138,  0.9931285991850949};
  static const double gl_w[kPts] = {
      0.0176140071391521, 0.0406014298003869, 0.0626720483341091,
      0.0832767415767048, 0.1019301198172404, 0.1181945319615184,
      0.1316886384491766, 0.1420961093183820, 0.1491729864726037,
      0.1527533871307258, 0.1527533871307258, 0.1491729864726037,
      0.1420961093183820, 0.1316886384491766, 0.1181945319615184,
      0.1019301198172404, 0.0832767415767048, 0.0626720483341091,
      0.0406014298003869, 0.0176140071391521};
  double radial = 0.0;
  const int panels = 50;
  for (int pa = 0; pa < panels; ++pa) {
    const double a = rmax * pa / panels, b = rmax * (pa + 1) / panels;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int q = 0; q < kPts; ++q) {
      const double r = mid + half * gl_x[q];
      radial += half * gl_w[q] * std::pow(r, d - 1) * std::exp(-std::pow(r, p));
    }
  }
  // surface area of the unit sphere in R^d
  const double surf = 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d);
  const double Z = (d == 1) ? 2.0 * radial : surf * radial;
  const double logZ = std::log(Z);

  Potential pot;
  pot.id = "power:" + std::to_string(p);
  pot.dim = d;
  pot.evaluate = [p, logZ](const Eigen::VectorXd& x) {
    return std::pow(x.norm(), p) + logZ;
  };
  pot.gradient = [p](const Eigen::VectorXd& x) {
    const double r = x.norm();
    if (r == 0.0) return Eigen::VectorXd::Zero(x.size()).eval();
    return (p * std::pow(r, p - 2) * x).eval();
  };
  pot.hessian = [p, d](const Eigen::VectorXd& x) {
    const double r = x.norm();
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
    if (r == 0.0) return h;  // p >= 4: hessian vanishes at the origin
    h = p * std::pow(r, p - 2) * Eigen::MatrixXd::Identity(d, d) +
        p * (p - 2) * std::pow(r, p - 4) * (x * x.transpose());
    return h;
  };
  pot.normalization_constant = Z;
  // |hess| = p(p-1) r^{p-2} along x; ratio r -> p(p-1)r^{p-2}/(1+p r^{p-1})
  // depends on the radius only, so a 1D maximization covers every d.
  auto ratio = [p](double r) {
    return p * (p - 1) * std::pow(r, p - 2) / (1.0 + p * std::pow(r, p - 1));
  };
  pot.hessian_growth_constant = grid_maximize(ratio, 0.0, 100.0, 20001);
  pot.lower_bound = logZ;
  if (d == 1) {
    Marginal1D m;
    m.value = [p, logZ](double x) { return std::pow(std::abs(x), p) + logZ; };
    m.deriv = [p](double x) {
      return p * std::pow(std::abs(x), p - 2) * x;
    };
    m.second = [p](double x) {
      return p * (p - 1) * std::pow(std::abs(x), p - 2);
    };
    m.deriv_poly_degree = p - 1;
    pot.marginal = m;
  }
  return pot;
}

C3Report check_c3(const Potential& pot, double grid_extent, int n_points) {
  if (n_points < 2) throw std::invalid_argument("check_c3: n_points >= 2");
  const int d = pot.dim;
  const int per_axis =
      (d == 1) ? n_points
               : std::max(2, (int)std::ceil(std::pow((double)n_points, 1.0 / d)));
  std::vector<int> idx(d, 0);
  C3Report rep;
  Eigen::VectorXd x(d);
  while (true) {
    for (int c = 0; c < d; ++c)
      x[c] = -grid_extent + 2.0 * grid_extent * idx[c] / (per_axis - 1);
    const double hn = spectral_norm(pot.hessian(x));
    const double gn = pot.gradient(x).norm();
    const double val = pot.evaluate(x);
    if (!std::isfinite(hn) || !std::isfinite(gn) || !std::isfinite(val)) {
      std::ostringstream os;
      os << "check_c3: non-finite potential data at x = [";
      for (int c = 0; c < d; ++c) os << (c ? ", " : "") << x[c];
      os << "]";
      throw std::runtime_error(os.str());
    }
    rep.max_ratio = std::max(rep.max_ratio, hn / (1.0 + gn));
    int c = 0;
    for (; c < d; ++c) {
      if (++idx[c] < per_axis) break;
      idx[c] = 0;
    }
    if (c == d) break;
  }
  rep.holds = rep.max_ratio <= pot.hessian_growth_constant * (1.0 + 1e-9);
  return rep;
}

void register_potential(const std::string& id,
                        std::function<Potential(int)> factory) {
  std::lock_guard<std::mutex> lock(registry_mutex());
  registry()[id] = std::move(factory);
}

bool is_registered_potential(const std::string& id) {
  std::lock_guard<std::mutex> lock(registry_mutex());
  return registry().count(id) > 0;
}

Potential make_potential(const std::string& id, int d) {
  {
    std::lock_guard<std::mutex> lock(registry_mutex());
    auto it = registry().find(id);
    if (it != registry().end()) return it->second(d);
  }
  if (id == "harmonic") return make_harmonic_potential(d);
  if (id.rfind("power:", 0) == 0) {
    int p = 0;
    try {
      p = std::stoi(id.substr(6));
    } catch (const std::exception&) {
      throw std::invalid_argument("make_potential: bad power id '" + id + "'");
    }
    return make_even_power_potential(p, d);
  }
  throw std::invalid_argument("make_potential: unknown potential id '" + id +
                              "'");
}

}  // namespace hypolab
