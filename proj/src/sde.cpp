#include "hypolab/sde.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "hypolab/quadrature.hpp"
#include "hypolab/stats.hpp"

namespace hypolab {

SdeScheme scheme_from_string(const std::string& s) {
  if (s == "euler-maruyama") return SdeScheme::EulerMaruyama;
  if (s == "baoab") return SdeScheme::Baoab;
  throw std::invalid_argument("unknown scheme '" + s +
                              "' (euler-maruyama | baoab)");
}
std::string to_string(SdeScheme s) {
  return s == SdeScheme::EulerMaruyama ? "euler-maruyama" : "baoab";
}

InitialLaw InitialLaw::point(Eigen::VectorXd x, Eigen::VectorXd w) {
  InitialLaw law;
  law.kind = Kind::Point;
  law.x0 = std::move(x);
  law.w0 = std::move(w);
  return law;
}
InitialLaw InitialLaw::equilibrium() { return InitialLaw{}; }

void SdeConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("sde: dt must be > 0");
  if (!(horizon > 0.0)) throw std::invalid_argument("sde: horizon must be > 0");
  if (n_paths < 1) throw std::invalid_argument("sde: n_paths >= 1");
  if (scheme == SdeScheme::EulerMaruyama && dt * params.alpha >= 0.5)
    throw std::invalid_argument(
        "sde: euler-maruyama stability guard requires dt * alpha < 0.5");
  if (initial.kind == InitialLaw::Kind::Point) {
    if (initial.x0.size() != params.d)
      throw std::invalid_argument("sde: point initial x0 dimension mismatch");
  }
}

Observable named_observable(const std::string& name) {
  using V = Eigen::VectorXd;
  if (name == "1")
    return {name, [](const V&, const V&) { return 1.0; }};
  if (name == "x")
    return {name, [](const V& x, const V&) { return x[0]; }};
  if (name == "x2")
    return {name, [](const V& x, const V&) { return x[0] * x[0]; }};
  auto need_w = [](const V& w) {
    if (w.size() < 1)
      throw std::invalid_argument(
          "observable: velocity not available (overdamped trace)");
  };
  if (name == "w")
    return {name, [=](const V&, const V& w) { need_w(w); return w[0]; }};
  if (name == "w2")
    return {name, [=](const V&, const V& w) { need_w(w); return w[0] * w[0]; }};
  if (name == "xw")
    return {name, [=](const V& x, const V& w) { need_w(w); return x[0] * w[0]; }};
  throw std::invalid_argument("named_observable: unknown name '" + name +
                              "'");
}

namespace {

constexpr int kBlock = 4096;  // paths per reduction block (fixed order)

struct SampleGrid {
  std::vector<std::int64_t> steps;
  std::vector<double> times;  // snapped to the step grid
  std::int64_t max_step = 0;
};

SampleGrid make_grid(const SdeConfig& cfg,
                     const std::vector<double>& sample_times) {
  if (sample_times.empty())
    throw std::invalid_argument("sde: no sample times given");
  SampleGrid g;
  std::int64_t prev = -1;
  for (double t : sample_times) {
    if (t < 0.0 || t > cfg.horizon * (1.0 + 1e-12))
      throw std::invalid_argument("sde: sample time outside [0, horizon]");
    const std::int64_t s = std::llround(t / cfg.dt);
    if (s <= prev && !(s == 0 && prev == -1))
      throw std::invalid_argument(
          "sde: sample times collapse on the step grid; reduce dt");
    g.steps.push_back(s);
    g.times.push_back(s * cfg.dt);
    prev = s;
  }
  g.max_step = g.steps.back();
  return g;
}

/// Per-coordinate derivative of Phi for separable potentials; falls back
/// to the full gradient otherwise.
struct Drift {
  const Potential& pot;
  bool separable;
  Eigen::VectorXd buf;

  explicit Drift(const Potential& p)
      : pot(p), separable(p.marginal.has_value()), buf(p.dim) {}

  // writes grad Phi(x) into g
  void grad_phi(const double* x, double* g, int d) {
    if (separable) {
      for (int c = 0; c < d; ++c) g[c] = pot.marginal->deriv(x[c]);
    } else {
      Eigen::Map<const Eigen::VectorXd> xv(x, d);
      buf = pot.gradient(xv);
      for (int c = 0; c < d; ++c) g[c] = buf[c];
    }
  }
};

void init_path(const SdeConfig& cfg, Rng& rng, double* x, double* w,
               bool with_velocity) {
  const int d = cfg.params.d;
  if (cfg.initial.kind == InitialLaw::Kind::Point) {
    for (int c = 0; c < d; ++c) x[c] = cfg.initial.x0[c];
    if (with_velocity)
      for (int c = 0; c < d; ++c)
        w[c] = cfg.initial.w0.size() == d ? cfg.initial.w0[c] : 0.0;
    return;
  }
  // equilibrium: velocity ~ nu_beta exactly; position per potential family
  if (cfg.pot.id == "harmonic") {
    for (int c = 0; c < d; ++c) x[c] = rng.normal();
  } else if (cfg.pot.id.rfind("power:", 0) == 0) {
    const int p = std::stoi(cfg.pot.id.substr(6));
    // rejection against N(0, I/2): |y|^p >= |y|^2 - c_p with
    // c_p = s - s^{p/2}, s = (2/p)^{2/(p-2)}
    const double s = std::pow(2.0 / p, 2.0 / (p - 2));
    const double cp = s - std::pow(s, 0.5 * p);
    while (true) {
      double r2 = 0.0;
      for (int c = 0; c < d; ++c) {
        x[c] = rng.normal() / std::sqrt(2.0);
        r2 += x[c] * x[c];
      }
      const double logacc = -(std::pow(r2, 0.5 * p) - r2 + cp);
      if (std::log(rng.uniform()) < logacc) break;
    }
  } else {
    throw std::invalid_argument(
        "sde: equilibrium sampling is implemented for 'harmonic' and "
        "'power:p' potentials; use a point start for '" + cfg.pot.id + "'");
  }
  if (with_velocity) {
    const double sig = 1.0 / std::sqrt(cfg.params.beta);
    for (int c = 0; c < d; ++c) w[c] = sig * rng.normal();
  }
}

struct Sums {
  // [time][obs] running sum and sum of squares
  std::vector<double> s, s2;
  int n_obs = 0;
  void init(int n_times, int n_obs_) {
    n_obs = n_obs_;
    s.assign((std::size_t)n_times * n_obs, 0.0);
    s2.assign((std::size_t)n_times * n_obs, 0.0);
  }
  void add(int it, int io, double v) {
    s[(std::size_t)it * n_obs + io] += v;
    s2[(std::size_t)it * n_obs + io] += v * v;
  }
  void merge(const Sums& o) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] += o.s[i];
      s2[i] += o.s2[i];
    }
  }
};

template <typename StepFn>
void run_paths(const SdeConfig& cfg, const std::vector<Observable>& obs,
               const SampleGrid& grid, bool with_velocity,
               std::int64_t first_path_index, StepFn&& step_path,
               Sums& total) {
  const int d = cfg.params.d;
  const int n_times = (int)grid.steps.size(), n_obs = (int)obs.size();
  const std::int64_t n_blocks = (cfg.n_paths + kBlock - 1) / kBlock;
  int n_threads = cfg.threads > 0
                      ? cfg.threads
                      : (int)std::max(1u, std::thread::hardware_concurrency());
  n_threads = (int)std::min<std::int64_t>(n_threads, n_blocks);

  std::vector<Sums> block_sums(n_blocks);
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&](int tid) {
    try {
      Eigen::VectorXd xv(d), wv(with_velocity ? d : 0);
      Drift drift(cfg.pot);
      for (std::int64_t b = tid; b < n_blocks; b += n_threads) {
        Sums& sums = block_sums[b];
        sums.init(n_times, n_obs);
        const std::int64_t p_lo = b * kBlock;
        const std::int64_t p_hi = std::min<std::int64_t>(cfg.n_paths, p_lo + kBlock);
        for (std::int64_t p = p_lo; p < p_hi; ++p) {
          Rng rng(path_seed(cfg.seed, (std::uint64_t)(first_path_index + p)));
          double x[3] = {0, 0, 0}, w[3] = {0, 0, 0};
          init_path(cfg, rng, x, w, with_velocity);
          std::int64_t stepno = 0;
          for (int it = 0; it < n_times; ++it) {
            for (; stepno < grid.steps[it]; ++stepno)
              step_path(x, w, drift, rng);
            for (int c = 0; c < d; ++c) {
              if (!std::isfinite(x[c]) || (with_velocity && !std::isfinite(w[c])))
                throw std::runtime_error(
                    "sde: non-finite state on path " + std::to_string(p) +
                    " at t = " + std::to_string(stepno * cfg.dt) +
                    " (reduce dt)");
              xv[c] = x[c];
              if (with_velocity) wv[c] = w[c];
            }
            for (int io = 0; io < n_obs; ++io)
              sums.add(it, io, obs[io].eval(xv, wv));
          }
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };

  if (n_threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  total.init(n_times, n_obs);
  for (std::int64_t b = 0; b < n_blocks; ++b) total.merge(block_sums[b]);
}

std::vector<ObservableTrace> collect(const SdeConfig& cfg,
                                     const std::vector<Observable>& obs,
                                     const SampleGrid& grid,
                                     const Sums& sums) {
  const int n_times = (int)grid.steps.size(), n_obs = (int)obs.size();
  const double n = (double)cfg.n_paths;
  std::vector<ObservableTrace> out(n_obs);
  for (int io = 0; io < n_obs; ++io) {
    out[io].name = obs[io].name;
    out[io].times = grid.times;
    out[io].means.resize(n_times);
    out[io].std_errors.resize(n_times);
    for (int it = 0; it < n_times; ++it) {
      const double s = sums.s[(std::size_t)it * n_obs + io];
      const double s2 = sums.s2[(std::size_t)it * n_obs + io];
      const double mean = s / n;
      const double var = std::max(0.0, s2 / n - mean * mean);
      out[io].means[it] = mean;
      out[io].std_errors[it] = std::sqrt(var / n);
    }
    try {
      out[io].target = observable_target(cfg.pot, cfg.params, obs[io].name);
    } catch (const std::exception&) {
      // target unavailable (custom observable or potential); leave NaN
    }
  }
  return out;
}

std::vector<ObservableTrace> simulate_impl(
    const SdeConfig& cfg, const std::vector<Observable>& obs,
    const std::vector<double>& sample_times, std::int64_t first_path_index) {
  cfg.validate();
  const SampleGrid grid = make_grid(cfg, sample_times);
  const int d = cfg.params.d;
  const double dt = cfg.dt, alpha = cfg.params.alpha, beta = cfg.params.beta;

  Sums sums;
  if (cfg.scheme == SdeScheme::Baoab) {
    const double c1 = std::exp(-alpha * dt);
    const double c2 = std::sqrt((1.0 - c1 * c1) / beta);
    const double half = 0.5 * dt;
    auto step = [=](double* x, double* w, Drift& drift, Rng& rng) {
      double g[3];
      drift.grad_phi(x, g, d);
      for (int c = 0; c < d; ++c) w[c] -= half * g[c] / beta;  // B
      for (int c = 0; c < d; ++c) x[c] += half * w[c];         // A
      for (int c = 0; c < d; ++c) w[c] = c1 * w[c] + c2 * rng.normal();  // O
      for (int c = 0; c < d; ++c) x[c] += half * w[c];         // A
      drift.grad_phi(x, g, d);
      for (int c = 0; c < d; ++c) w[c] -= half * g[c] / beta;  // B
    };
    run_paths(cfg, obs, grid, true, first_path_index, step, sums);
  } else {
    const double noise = std::sqrt(2.0 * alpha * dt / beta);
    auto step = [=](double* x, double* w, Drift& drift, Rng& rng) {
      double g[3];
      drift.grad_phi(x, g, d);
      for (int c = 0; c < d; ++c) {
        const double xn = x[c] + dt * w[c];
        w[c] += dt * (-alpha * w[c] - g[c] / beta) + noise * rng.normal();
        x[c] = xn;
      }
    };
    run_paths(cfg, obs, grid, true, first_path_index, step, sums);
  }
  return collect(cfg, obs, grid, sums);
}

std::vector<ObservableTrace> simulate_overdamped_impl(
    const SdeConfig& cfg, const std::vector<Observable>& obs,
    const std::vector<double>& sample_times, std::int64_t first_path_index) {
  cfg.validate();
  const SampleGrid grid = make_grid(cfg, sample_times);
  const int d = cfg.params.d;
  const double dt = cfg.dt;
  const double mob = 1.0 / (cfg.params.alpha * cfg.params.beta);
  const double noise = std::sqrt(2.0 * mob * dt);
  Sums sums;
  auto step = [=](double* x, double* /*w*/, Drift& drift, Rng& rng) {
    double g[3];
    drift.grad_phi(x, g, d);
    for (int c = 0; c < d; ++c)
      x[c] += -dt * mob * g[c] + noise * rng.normal();
  };
  run_paths(cfg, obs, grid, false, first_path_index, step, sums);
  return collect(cfg, obs, grid, sums);
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
  return v;
}

double fit_phase_mean_rate(const std::vector<ObservableTrace>& traces) {
  const auto& tx = traces[0];
  const auto& tw = traces[1];
  const int n = (int)tx.times.size();
  std::vector<double> v(n), sig(n);
  for (int i = 0; i < n; ++i) {
    v[i] = std::hypot(tx.means[i], tw.means[i]);
    sig[i] = std::hypot(tx.std_errors[i], tw.std_errors[i]);
  }
  std::vector<double> sig_sorted = sig;
  std::nth_element(sig_sorted.begin(), sig_sorted.begin() + n / 2,
                   sig_sorted.end());
  const double floor_abs = 8.0 * sig_sorted[n / 2];
  const LogLinearFit fit = fit_decay_rate(tx.times, v, floor_abs,
                                          /*decades=*/3.0, /*min_decay=*/3.0);
  if (!fit.valid)
    throw std::runtime_error(
        "sde: decay-rate fit failed (signal below the noise floor; "
        "increase n_paths or shorten the horizon)");
  return fit.rate;
}

}  // namespace

std::vector<ObservableTrace> simulate(const SdeConfig& cfg,
                                      const std::vector<Observable>& obs,
                                      const std::vector<double>& times) {
  return simulate_impl(cfg, obs, times, 0);
}

std::vector<ObservableTrace> simulate_overdamped(
    const SdeConfig& cfg, const std::vector<Observable>& obs,
    const std::vector<double>& times) {
  return simulate_overdamped_impl(cfg, obs, times, 0);
}

double langevin_mean_rate(const SdeConfig& cfg,
                          const std::vector<double>& sample_times) {
  const auto traces = simulate(
      cfg, {named_observable("x"), named_observable("w")}, sample_times);
  return fit_phase_mean_rate(traces);
}

std::vector<double> langevin_rate_groups(const SdeConfig& cfg, int groups) {
  if (groups < 2) throw std::invalid_argument("langevin_rate_groups: >= 2");
  SdeConfig sub = cfg;
  sub.n_paths = cfg.n_paths / groups;
  const auto times = linspace(0.0, cfg.horizon, 160);
  std::vector<double> rates;
  for (int g = 0; g < groups; ++g) {
    const auto traces = simulate_impl(
        sub, {named_observable("x"), named_observable("w")}, times,
        (std::int64_t)g * sub.n_paths);
    rates.push_back(fit_phase_mean_rate(traces));
  }
  return rates;
}

double overdamped_mean_rate(const SdeConfig& cfg,
                            const std::vector<double>& sample_times) {
  const auto traces =
      simulate_overdamped(cfg, {named_observable("x")}, sample_times);
  const auto& tr = traces[0];
  const int n = (int)tr.times.size();
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = std::abs(tr.means[i]);
  std::vector<double> sig = tr.std_errors;
  std::nth_element(sig.begin(), sig.begin() + n / 2, sig.end());
  const double floor_abs = 8.0 * sig[n / 2];
  const LogLinearFit fit =
      fit_decay_rate(tr.times, v, floor_abs, 3.0, /*min_decay=*/3.0);
  if (!fit.valid)
    throw std::runtime_error("sde: overdamped rate fit failed");
  return fit.rate;
}

std::vector<AlphaSweepRow> alpha_sweep(
    const SdeConfig& cfg, const std::vector<double>& alphas,
    const std::function<double(double)>& nu2_of_alpha,
    const std::vector<double>& horizons) {
  if (!horizons.empty() && horizons.size() != alphas.size())
    throw std::invalid_argument("alpha_sweep: horizons size mismatch");
  std::vector<AlphaSweepRow> rows;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const double a = alphas[i];
    if (!(a > 0)) throw std::invalid_argument("alpha_sweep: alphas > 0");
    AlphaSweepRow row;
    row.alpha = a;
    row.nu2 = nu2_of_alpha ? nu2_of_alpha(a) : 0.0;
    SdeConfig c = cfg;
    c.params = ModelParams(cfg.params.d, a, cfg.params.beta);
    if (!horizons.empty()) c.horizon = horizons[i];
    row.rate_langevin =
        langevin_mean_rate(c, linspace(0.0, c.horizon, 160));
    // the overdamped flow relaxes at Lambda/(alpha beta); give it its own
    // time scale and step so both fits see a few clean decades
    SdeConfig ov = c;
    ov.horizon = 5.0 * a * cfg.params.beta;
    ov.dt = std::min(cfg.dt, ov.horizon / 800.0);
    row.rate_overdamped =
        overdamped_mean_rate(ov, linspace(0.0, ov.horizon, 160));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd terminal_states(const SdeConfig& cfg) {
  cfg.validate();
  const int d = cfg.params.d;
  const double dt = cfg.dt, alpha = cfg.params.alpha, beta = cfg.params.beta;
  const std::int64_t n_steps = std::llround(cfg.horizon / dt);
  const double c1 = std::exp(-alpha * dt);
  const double c2 = std::sqrt((1.0 - c1 * c1) / beta);
  const double half = 0.5 * dt;
  const double em_noise = std::sqrt(2.0 * alpha * dt / beta);

  Eigen::MatrixXd out(cfg.n_paths, 2 * d);
  int n_threads = cfg.threads > 0
                      ? cfg.threads
                      : (int)std::max(1u, std::thread::hardware_concurrency());
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&](int tid) {
    try {
      Drift drift(cfg.pot);
      for (std::int64_t p = tid; p < cfg.n_paths; p += n_threads) {
        Rng rng(path_seed(cfg.seed, (std::uint64_t)p));
        double x[3] = {0, 0, 0}, w[3] = {0, 0, 0}, g[3];
        init_path(cfg, rng, x, w, true);
        for (std::int64_t s = 0; s < n_steps; ++s) {
          if (cfg.scheme == SdeScheme::Baoab) {
            drift.grad_phi(x, g, d);
            for (int c = 0; c < d; ++c) w[c] -= half * g[c] / beta;
            for (int c = 0; c < d; ++c) x[c] += half * w[c];
            for (int c = 0; c < d; ++c) w[c] = c1 * w[c] + c2 * rng.normal();
            for (int c = 0; c < d; ++c) x[c] += half * w[c];
            drift.grad_phi(x, g, d);
            for (int c = 0; c < d; ++c) w[c] -= half * g[c] / beta;
          } else {
            drift.grad_phi(x, g, d);
            for (int c = 0; c < d; ++c) {
              const double xn = x[c] + dt * w[c];
              w[c] += dt * (-alpha * w[c] - g[c] / beta) +
                      em_noise * rng.normal();
              x[c] = xn;
            }
          }
        }
        for (int c = 0; c < d; ++c) {
          if (!std::isfinite(x[c]) || !std::isfinite(w[c]))
            throw std::runtime_error("sde: non-finite state on path " +
                                     std::to_string(p) + " at t = " +
                                     std::to_string(cfg.horizon));
          out(p, c) = x[c];
          out(p, d + c) = w[c];
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };
  if (n_threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker, t);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

double observable_target(const Potential& pot, const ModelParams& params,
                         const std::string& name) {
  if (!pot.marginal)
    throw std::invalid_argument(
        "observable_target: needs a separable potential");
  // product structure: named observables involve the first coordinate only
  Potential pot1 = pot;
  if (pot.dim != 1) {
    pot1 = make_potential(pot.id, 1);
  }
  const QuadratureRule rx = position_rule(pot1, 40);
  const QuadratureRule rw = gauss_hermite_rule(40, params.beta);
  const Observable g = named_observable(name);
  double out = 0.0;
  Eigen::VectorXd xv(1), wv(1);
  for (int i = 0; i < rx.nodes.size(); ++i)
    for (int j = 0; j < rw.nodes.size(); ++j) {
      xv[0] = rx.nodes[i];
      wv[0] = rw.nodes[j];
      out += rx.weights[i] * rw.weights[j] * g.eval(xv, wv);
    }
  return out;
}

}  // namespace hypolab
