#include "hypolab/ratebound.hpp"

#include <json.hpp>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "hypolab/operators.hpp"

namespace hypolab {

namespace {
void require_finite(double v, const char* stage) {
  if (!std::isfinite(v))
    throw std::runtime_error(std::string("build_ledger: non-finite value at ") +
                             stage);
}
}  // namespace

RateLedger build_ledger(double Lambda, double beta, double c_hyp, double alpha,
                        double upsilon) {
  if (!(Lambda > 0) || !(beta > 0) || !(alpha > 0) || !(upsilon > 0) ||
      c_hyp < 0)
    throw std::invalid_argument(
        "build_ledger: need Lambda, beta, alpha, upsilon > 0 and c_hyp >= 0");
  RateLedger led;
  led.Lambda = Lambda;
  led.beta = beta;
  led.c_hyp = c_hyp;
  led.alpha = alpha;
  led.upsilon = upsilon;

  const double u = 1.0 + c_hyp + 0.5 * alpha;           // 1 + c5 with c1 = a/2
  const double q = (beta + Lambda) / (2.0 * Lambda);

  led.delta = (Lambda / (beta + Lambda)) / u;
  require_finite(led.delta, "delta");
  led.s = 0.5 * Lambda / (beta + Lambda);
  led.r_of_alpha = u * (1.0 + q * u);
  require_finite(led.r_of_alpha, "r(alpha)");

  // r(alpha) + s = a1 + a2 alpha + a3 alpha^2 with u0 = 1 + c_hyp
  const double u0 = 1.0 + c_hyp;
  led.a1 = u0 + q * u0 * u0 + led.s;
  led.a2 = 0.5 + q * u0;
  led.a3 = 0.25 * q;

  led.eps_bar = alpha / (led.a1 + led.a2 * alpha + led.a3 * alpha * alpha);
  require_finite(led.eps_bar, "eps_bar");
  const double sup_eps_bar =
      1.0 / (led.a2 + 2.0 * std::sqrt(led.a1 * led.a3));
  led.eps_bar_max = std::max(1.0, sup_eps_bar);
  led.epsilon = upsilon / (1.0 + upsilon) * led.eps_bar / led.eps_bar_max;
  require_finite(led.epsilon, "epsilon");
  if (!(led.epsilon > 0.0 && led.epsilon < 1.0))
    throw std::runtime_error("build_ledger: epsilon left (0,1)");

  led.n1 = 2.0 * led.eps_bar_max / led.s * led.a1;
  led.n2 = 2.0 * led.eps_bar_max / led.s * led.a2;
  led.n3 = 2.0 * led.eps_bar_max / led.s * led.a3;
  led.kappa = upsilon / (1.0 + upsilon) * 2.0 * alpha /
              (led.n1 + led.n2 * alpha + led.n3 * alpha * alpha);
  require_finite(led.kappa, "kappa");

  led.kappa1 = std::sqrt((1.0 + led.epsilon) / (1.0 - led.epsilon));
  led.kappa2 = led.kappa / (1.0 + led.epsilon);
  led.nu1 = 1.0 + upsilon;
  led.nu2 = 0.5 * led.kappa;
  require_finite(led.kappa1, "kappa1");
  require_finite(led.nu2, "nu2");
  return led;
}

std::vector<std::pair<double, double>> nu2_curve(
    double Lambda, double beta, double c_hyp, double upsilon,
    const std::vector<double>& alphas) {
  std::vector<std::pair<double, double>> out;
  out.reserve(alphas.size());
  for (double a : alphas) {
    if (!(a > 0)) throw std::invalid_argument("nu2_curve: alphas must be > 0");
    out.emplace_back(a, build_ledger(Lambda, beta, c_hyp, a, upsilon).nu2);
  }
  return out;
}

double nu2_argmax(double Lambda, double beta, double c_hyp) {
  const RateLedger led = build_ledger(Lambda, beta, c_hyp, 1.0, 1.0);
  return std::sqrt(led.n1 / led.n3);
}

EntropyBoundsReport entropy_bounds_check(double epsilon,
                                         const Eigen::VectorXd& f,
                                         const Eigen::MatrixXd& B) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("entropy_bounds_check: epsilon in (0,1)");
  EntropyBoundsReport rep;
  const double n2 = f.squaredNorm();
  rep.H_eps = 0.5 * n2 + epsilon * f.dot(B * f);
  const double slack = 1e-12 * n2;
  rep.within_bounds = rep.H_eps >= 0.5 * (1.0 - epsilon) * n2 - slack &&
                      rep.H_eps <= 0.5 * (1.0 + epsilon) * n2 + slack;
  return rep;
}

double entropy_value(const OperatorSet& ops, double epsilon,
                     const Eigen::VectorXd& f) {
  return 0.5 * f.squaredNorm() + epsilon * f.dot(apply_B(ops, f));
}

std::string ledger_sweep_csv(double Lambda, double beta, double c_hyp,
                             double upsilon,
                             const std::vector<double>& alphas) {
  std::ostringstream os;
  os << "alpha,nu2,kappa,epsilon,eps_bar\n";
  char buf[200];
  for (double a : alphas) {
    const RateLedger led = build_ledger(Lambda, beta, c_hyp, a, upsilon);
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", a,
                  led.nu2, led.kappa, led.epsilon, led.eps_bar);
    os << buf;
  }
  return os.str();
}

std::string ledger_json(const RateLedger& led) {
  nlohmann::json j;
  j["inputs"] = {{"Lambda", led.Lambda},
                 {"beta", led.beta},
                 {"c_hyp", led.c_hyp},
                 {"alpha", led.alpha},
                 {"upsilon", led.upsilon},
                 {"c_hyp_source", led.c_hyp_source}};
  j["delta"] = led.delta;
  j["r_of_alpha"] = led.r_of_alpha;
  j["s"] = led.s;
  j["a"] = {led.a1, led.a2, led.a3};
  j["eps_bar"] = led.eps_bar;
  j["eps_bar_max"] = led.eps_bar_max;
  j["epsilon"] = led.epsilon;
  j["kappa"] = led.kappa;
  j["n"] = {led.n1, led.n2, led.n3};
  j["kappa1"] = led.kappa1;
  j["kappa2"] = led.kappa2;
  j["nu1"] = led.nu1;
  j["nu2"] = led.nu2;
  return j.dump(2);
}

}  // namespace hypolab
