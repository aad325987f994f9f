#include "hypolab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hypolab {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t path_seed(std::uint64_t master, std::uint64_t path_index) {
  return splitmix64(master ^ splitmix64(path_index + 1));
}

// Wichura's AS241 (PPND16)
double normal_icdf(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("normal_icdf: p must be in (0,1)");
  const double q = p - 0.5;
  double r;
  if (std::abs(q) <= 0.425) {
    r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                 6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
               1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
              1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
           (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                 3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
               5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
              4.2313330701600911252e+1) * r + 1.0);
  }
  r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
              3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
             4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
             2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
             5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
             5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -val : val;
}

LogLinearFit fit_decay_rate(const std::vector<double>& times,
                            const std::vector<double>& values,
                            double floor_abs, double decades,
                            double min_decay) {
  LogLinearFit fit;
  const int n = (int)times.size();
  if (n < 3 || values.size() != times.size()) return fit;
  const double v0 = values[0];
  if (!(v0 > 0.0)) return fit;

  int hi = -1;
  for (int i = n - 1; i >= 0; --i)
    if (values[i] >= floor_abs) { hi = i; break; }
  if (hi < 2) return fit;
  const double top = values[hi] * std::pow(10.0, decades);
  int lo = hi;
  for (int i = 0; i <= hi; ++i)
    if (values[i] <= std::min(top, v0 / min_decay)) { lo = i; break; }
  if (hi - lo < 2) {  // degenerate window; fall back to the tail half
    lo = hi / 2;
    if (hi - lo < 2) return fit;
  }

  double st = 0, sy = 0, stt = 0, sty = 0;
  int m = 0;
  for (int i = lo; i <= hi; ++i) {
    if (!(values[i] > 0.0)) continue;
    const double t = times[i], y = std::log(values[i]);
    st += t; sy += y; stt += t * t; sty += t * y;
    ++m;
  }
  if (m < 3) return fit;
  const double denom = m * stt - st * st;
  if (denom <= 0.0) return fit;
  fit.rate = -(m * sty - st * sy) / denom;
  fit.i_lo = lo;
  fit.i_hi = hi;
  fit.valid = true;
  return fit;
}

namespace {
/// Kolmogorov distribution tail Q(lambda) = 2 sum (-1)^{k-1} e^{-2k^2 lambda^2}
double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}
}  // namespace

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b,
                       double significance) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = (double)a.size(), nb = (double)b.size();
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  KsResult res;
  res.statistic = d;
  const double en = std::sqrt(na * nb / (na + nb));
  res.p_value = kolmogorov_q((en + 0.12 + 0.11 / en) * d);
  res.reject = res.p_value < significance;
  return res;
}

}  // namespace hypolab
