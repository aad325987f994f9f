#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace hypolab {

/// SplitMix64 mixing step (Vigna); used to derive independent per-path
/// seeds from one master seed.
std::uint64_t splitmix64(std::uint64_t x);

/// Documented seed splitting: seed of path p is
/// splitmix64(master ^ splitmix64(p + 1)).
std::uint64_t path_seed(std::uint64_t master, std::uint64_t path_index);

/// Inverse standard normal CDF (Wichura, algorithm AS241), accurate to
/// full double precision on (0, 1).
double normal_icdf(double p);

/// mt19937_64 stream with uniforms in (0,1) and inverse-CDF normals;
/// the same uniform-to-normal map on every platform keeps traces
/// bit-identical for a fixed seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  double uniform() {
    return ((eng_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }
  double normal() { return normal_icdf(uniform()); }

 private:
  std::mt19937_64 eng_;
};

struct LogLinearFit {
  double rate = 0.0;  // decay rate (= -slope of log values vs time)
  int i_lo = 0, i_hi = 0;
  bool valid = false;
};

/// Least-squares exponential-rate fit on log(values) over a tail window:
/// samples with values within `decades` decades of the last sample above
/// `floor_abs`, entering no earlier than a decay by `min_decay`.
LogLinearFit fit_decay_rate(const std::vector<double>& times,
                            const std::vector<double>& values,
                            double floor_abs, double decades = 3.0,
                            double min_decay = 10.0);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  bool reject = false;
};

/// Two-sample Kolmogorov-Smirnov test at the given significance
/// (asymptotic p-value).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b,
                       double significance);

}  // namespace hypolab
