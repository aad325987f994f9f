#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>

#include "hypolab/config.hpp"
#include "hypolab/evolution.hpp"
#include "hypolab/hypo.hpp"
#include "hypolab/operators.hpp"
#include "hypolab/ratebound.hpp"
#include "hypolab/sde.hpp"
#include "hypolab/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hypolab;

namespace {

constexpr const char* kVersion = "0.1.0";

struct CliState {
  std::string config_path;
  std::string output_dir_override;
  double alpha_override = 0.0;
  double upsilon_override = 0.0;
  std::string alpha_grid;  // "from:to:count" (log-spaced)
  bool canonical = false;
  bool dump_matrices = false;
};

ExperimentConfig load(const CliState& st) {
  ExperimentConfig cfg = load_config(st.config_path);
  if (st.alpha_override > 0.0) cfg.alphas = {st.alpha_override};
  if (st.upsilon_override > 0.0) cfg.upsilon = st.upsilon_override;
  if (!st.output_dir_override.empty()) cfg.output_dir = st.output_dir_override;
  if (!st.alpha_grid.empty()) {
    double from = 0, to = 0;
    int count = 0;
    if (std::sscanf(st.alpha_grid.c_str(), "%lf:%lf:%d", &from, &to, &count) !=
            3 ||
        !(from > 0) || !(to > from) || count < 2)
      throw std::invalid_argument(
          "--alpha-grid expects from:to:count with 0 < from < to");
    cfg.alphas.clear();
    for (int i = 0; i < count; ++i)
      cfg.alphas.push_back(from *
                           std::pow(to / from, (double)i / (count - 1)));
  }
  return cfg;
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << text;
}

void write_manifest(const ExperimentConfig& cfg, const CliState& st,
                    const std::string& subcommand,
                    const std::vector<std::string>& artifacts) {
  json m;
  m["subcommand"] = subcommand;
  m["version"] = kVersion;
  m["config"] = json::parse(config_to_json(cfg));
  m["config_hash"] = config_hash(cfg);
  m["artifacts"] = artifacts;
  if (!st.canonical) {
    const auto now = std::chrono::system_clock::now();
    m["timestamp_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch())
            .count();
  }
  write_text(fs::path(cfg.output_dir) / ("manifest-" + subcommand + ".json"),
             m.dump(2));
}

std::string csv_line(std::initializer_list<double> vals) {
  std::string out;
  char buf[32];
  bool first = true;
  for (double v : vals) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    if (!first) out += ",";
    out += buf;
    first = false;
  }
  return out + "\n";
}

std::string basis_csv(const OrthonormalBasis& b) {
  std::string out = "index,a_k,b_k\n";
  char buf[80];
  for (int k = 0; k < b.size; ++k) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", k, b.a[k], b.b[k]);
    out += buf;
  }
  return out;
}

struct Pipeline {
  ExperimentConfig cfg;
  Potential pot;
  OperatorSet ops;
  HypoConstants consts;

  explicit Pipeline(const ExperimentConfig& c, double alpha)
      : cfg(c), pot(c.make_pot()),
        ops(assemble(c.params(alpha), pot, c.nx, c.nw)),
        consts(certify(ops, pot)) {}

  RateLedger ledger() const {
    const double c_hyp =
        cfg.c_hyp_override ? *cfg.c_hyp_override : consts.c2;
    RateLedger led = build_ledger(consts.poincare_lambda, cfg.beta, c_hyp,
                                  ops.params.alpha, cfg.upsilon);
    led.c_hyp_source = cfg.c_hyp_override
                           ? "override"
                           : ("numeric(nx=" + std::to_string(cfg.nx) +
                              ",nw=" + std::to_string(cfg.nw) + ")");
    return led;
  }
};

int cmd_assemble(const CliState& st) {
  ExperimentConfig cfg = load(st);
  Pipeline pl(cfg, cfg.alpha());
  const fs::path dir(cfg.output_dir);
  std::vector<std::string> artifacts;
  write_text(dir / "position_basis.csv", basis_csv(pl.ops.pos_basis));
  write_text(dir / "velocity_basis.csv", basis_csv(pl.ops.vel_basis));
  artifacts = {"position_basis.csv", "velocity_basis.csv"};
  if (st.dump_matrices) {
    dump_operator(pl.ops.S, (dir / "op_S.txt").string());
    dump_operator(pl.ops.A, (dir / "op_A.txt").string());
    dump_operator(pl.ops.L, (dir / "op_L.txt").string());
    dump_operator(pl.ops.AP, (dir / "op_AP.txt").string());
    dump_operator(pl.ops.A2P, (dir / "op_A2P.txt").string());
    dump_operator(build_G(pl.ops), (dir / "op_G.txt").string());
    dump_operator(build_B(pl.ops), (dir / "op_B.txt").string());
    for (const char* n :
         {"op_S.txt", "op_A.txt", "op_L.txt", "op_AP.txt", "op_A2P.txt",
          "op_G.txt", "op_B.txt"})
      artifacts.push_back(n);
  }
  json s;
  s["dim"] = pl.ops.dim();
  s["nnz_A"] = (std::int64_t)pl.ops.A.nonZeros();
  s["nnz_L"] = (std::int64_t)pl.ops.L.nonZeros();
  s["macro_dim"] = (std::int64_t)pl.ops.macro.size();
  write_text(dir / "assemble-summary.json", s.dump(2));
  artifacts.push_back("assemble-summary.json");
  write_manifest(cfg, st, "assemble", artifacts);
  std::cout << "assembled dim=" << pl.ops.dim() << " nnz(L)="
            << pl.ops.L.nonZeros() << "\n";
  return 0;
}

int cmd_check_hypo(const CliState& st) {
  ExperimentConfig cfg = load(st);
  Pipeline pl(cfg, cfg.alpha());
  const std::string rep = hypo_report_json(pl.ops, pl.pot);
  write_text(fs::path(cfg.output_dir) / "hypo.json", rep);
  write_manifest(cfg, st, "check-hypo", {"hypo.json"});
  const json j = json::parse(rep);
  bool all = true;
  for (const auto& c : j["conditions"]) {
    const bool h = c["holds"].get<bool>();
    all = all && h;
    std::cout << c["condition"].get<std::string>() << ": "
              << (h ? "holds" : "VIOLATED") << "\n";
  }
  std::cout << (all ? "all conditions hold" : "conditions violated") << "\n";
  return 0;
}

int cmd_rate_bound(const CliState& st) {
  ExperimentConfig cfg = load(st);
  Pipeline pl(cfg, cfg.alphas.front());
  const fs::path dir(cfg.output_dir);
  const RateLedger led = pl.ledger();
  write_text(dir / "ledger.json", ledger_json(led));
  std::vector<std::string> artifacts{"ledger.json"};
  if (cfg.alphas.size() > 1) {
    const double c_hyp = cfg.c_hyp_override ? *cfg.c_hyp_override : pl.consts.c2;
    write_text(dir / "nu2_sweep.csv",
               ledger_sweep_csv(pl.consts.poincare_lambda, cfg.beta, c_hyp,
                                cfg.upsilon, cfg.alphas));
    artifacts.push_back("nu2_sweep.csv");
  }
  write_manifest(cfg, st, "rate-bound", artifacts);
  std::cout << "nu1=" << led.nu1 << " nu2=" << led.nu2 << "\n";
  return 0;
}

int cmd_evolve(const CliState& st) {
  ExperimentConfig cfg = load(st);
  Pipeline pl(cfg, cfg.alpha());
  const RateLedger led = pl.ledger();
  const double horizon = cfg.horizon > 0.0 ? cfg.horizon : 20.0 / led.nu2;

  EvolveOptions opts;
  opts.stepper = stepper_from_string(cfg.stepper);
  opts.dt = cfg.evolve_dt;
  opts.entropy_epsilon = led.epsilon;
  opts.initial_condition_id = cfg.initial;

  Eigen::VectorXd g;
  if (cfg.initial.rfind("random:", 0) == 0) {
    Rng rng(std::stoull(cfg.initial.substr(7)));
    g.resize(pl.ops.dim());
    for (int i = 0; i < g.size(); ++i) g[i] = rng.normal();
  } else {
    g = observable_coefficients(pl.ops, cfg.initial);
  }

  std::vector<double> times(cfg.samples);
  for (int i = 0; i < cfg.samples; ++i)
    times[i] = horizon * i / (cfg.samples - 1);
  const DecayTrace trace = evolve(pl.ops, g, times, opts);

  std::string csv = "t,deviation_norm,entropy,envelope_nu,envelope_kappa\n";
  const double n0 = trace.deviation_norms.front();
  for (std::size_t i = 0; i < trace.times.size(); ++i)
    csv += csv_line({trace.times[i], trace.deviation_norms[i],
                     trace.entropy_values[i],
                     led.nu1 * std::exp(-led.nu2 * trace.times[i]) * n0,
                     led.kappa1 * std::exp(-led.kappa2 * trace.times[i]) * n0});
  const fs::path dir(cfg.output_dir);
  write_text(dir / "decay_trace.csv", csv);

  json s;
  s["fitted_rate"] = trace.fitted_rate;
  s["fit_window"] = {trace.fit_t_lo, trace.fit_t_hi};
  s["nu1"] = led.nu1;
  s["nu2"] = led.nu2;
  s["kappa1"] = led.kappa1;
  s["kappa2"] = led.kappa2;
  int violations_nu = 0, violations_kappa = 0;
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    const double t = trace.times[i], nrm = trace.deviation_norms[i];
    if (nrm > led.nu1 * std::exp(-led.nu2 * t) * n0 * (1 + 1e-12))
      ++violations_nu;
    if (nrm > led.kappa1 * std::exp(-led.kappa2 * t) * n0 * (1 + 1e-12))
      ++violations_kappa;
  }
  s["envelope_violations_nu"] = violations_nu;
  s["envelope_violations_kappa"] = violations_kappa;
  s["envelope_holds"] = (violations_nu == 0 && violations_kappa == 0);
  if (pl.ops.dim() <= 2500) {
    const SpectrumResult spec = spectral_gap(pl.ops);
    s["spectral_gap"] = spec.gap;
    s["rate_above_nu2"] = trace.fitted_rate >= led.nu2;
  }
  write_text(dir / "evolve-summary.json", s.dump(2));
  write_manifest(cfg, st, "evolve", {"decay_trace.csv", "evolve-summary.json"});
  std::cout << "fitted_rate=" << trace.fitted_rate << " nu2=" << led.nu2
            << " envelope_violations=" << violations_nu << "\n";
  return 0;
}

SdeConfig sde_config_from(const ExperimentConfig& cfg, double alpha) {
  SdeConfig sc;
  sc.params = cfg.params(alpha);
  sc.pot = cfg.make_pot();
  sc.scheme = scheme_from_string(cfg.scheme);
  sc.dt = cfg.sde_dt;
  sc.n_paths = cfg.n_paths;
  sc.horizon = cfg.sde_horizon;
  sc.seed = cfg.seed;
  sc.initial = cfg.sde_initial;
  return sc;
}

int cmd_sde(const CliState& st) {
  ExperimentConfig cfg = load(st);
  const SdeConfig sc = sde_config_from(cfg, cfg.alpha());
  std::vector<Observable> obs;
  for (const auto& n : cfg.observables) obs.push_back(named_observable(n));
  std::vector<double> times(161);
  for (int i = 0; i < 161; ++i) times[i] = cfg.sde_horizon * i / 160;
  const auto traces = simulate(sc, obs, times);
  const fs::path dir(cfg.output_dir);
  std::vector<std::string> artifacts;
  for (const auto& tr : traces) {
    std::string csv = "t,mean,std_error,target\n";
    for (std::size_t i = 0; i < tr.times.size(); ++i)
      csv += csv_line({tr.times[i], tr.means[i], tr.std_errors[i], tr.target});
    const std::string name = "sde_" + tr.name + ".csv";
    write_text(dir / name, csv);
    artifacts.push_back(name);
  }
  write_manifest(cfg, st, "sde", artifacts);
  std::cout << "sde: " << traces.size() << " traces, " << sc.n_paths
            << " paths\n";
  return 0;
}

int cmd_sweep_alpha(const CliState& st) {
  ExperimentConfig cfg = load(st);
  Pipeline pl(cfg, cfg.alphas.front());
  const double c_hyp = cfg.c_hyp_override ? *cfg.c_hyp_override : pl.consts.c2;
  const double Lambda = pl.consts.poincare_lambda;
  auto nu2_of = [&](double a) {
    return build_ledger(Lambda, cfg.beta, c_hyp, a, cfg.upsilon).nu2;
  };
  // per-alpha jobs fan out concurrently; each owns its sub-run
  std::vector<std::future<AlphaSweepRow>> jobs;
  for (double a : cfg.alphas) {
    jobs.push_back(std::async(std::launch::async, [&, a]() {
      SdeConfig sc = sde_config_from(cfg, a);
      sc.threads = 1;
      const auto rows = alpha_sweep(sc, {a}, nu2_of);
      return rows.front();
    }));
  }
  std::string csv = "alpha,fitted_rate_langevin,nu2,fitted_rate_overdamped\n";
  for (auto& job : jobs) {
    const AlphaSweepRow r = job.get();
    csv += csv_line({r.alpha, r.rate_langevin, r.nu2, r.rate_overdamped});
  }
  write_text(fs::path(cfg.output_dir) / "alpha_sweep.csv", csv);
  write_manifest(cfg, st, "sweep-alpha", {"alpha_sweep.csv"});
  std::cout << "sweep-alpha: " << cfg.alphas.size() << " rows\n";
  return 0;
}

int cmd_report(const CliState& st) {
  ExperimentConfig cfg = load(st);
  const fs::path dir(cfg.output_dir);
  json summary;
  summary["checks"] = json::array();
  int n_artifacts = 0;
  bool all_pass = true;
  if (fs::exists(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() != ".json") continue;
      const std::string name = e.path().filename().string();
      if (name.rfind("manifest-", 0) == 0 || name == "report.json") continue;
      ++n_artifacts;
      std::ifstream is(e.path());
      json j;
      try {
        is >> j;
      } catch (...) {
        continue;
      }
      if (j.contains("conditions")) {
        for (const auto& c : j["conditions"]) {
          const bool h = c["holds"].get<bool>();
          all_pass = all_pass && h;
          summary["checks"].push_back(
              {{"source", name},
               {"check", c["condition"].get<std::string>()},
               {"pass", h}});
        }
      }
      if (j.contains("envelope_holds")) {
        const bool h = j["envelope_holds"].get<bool>();
        all_pass = all_pass && h;
        summary["checks"].push_back(
            {{"source", name}, {"check", "envelope"}, {"pass", h}});
        if (j.contains("rate_above_nu2")) {
          const bool r = j["rate_above_nu2"].get<bool>();
          all_pass = all_pass && r;
          summary["checks"].push_back(
              {{"source", name}, {"check", "rate_above_nu2"}, {"pass", r}});
        }
      }
    }
  }
  if (n_artifacts == 0) {
    std::cerr << "report: no artifacts found in " << dir << "\n";
    return 1;
  }
  summary["all_pass"] = all_pass;
  summary["n_artifacts"] = n_artifacts;
  write_text(dir / "report.json", summary.dump(2));
  std::cout << "report: " << summary["checks"].size() << " checks, "
            << (all_pass ? "all pass" : "FAILURES") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kinetic Langevin hypocoercivity laboratory"};
  app.require_subcommand(1);
  CliState st;

  const char* env_out = std::getenv("HYPOLAB_OUTPUT_ROOT");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", st.config_path, "experiment config (JSON)")
        ->required();
    sub->add_option("--alpha", st.alpha_override, "override alpha");
    sub->add_option("--upsilon", st.upsilon_override, "override upsilon");
    sub->add_option("--alpha-grid", st.alpha_grid,
                    "log-spaced alpha grid from:to:count");
    sub->add_option("--output-dir", st.output_dir_override,
                    "override output directory");
    sub->add_flag("--canonical", st.canonical,
                  "omit timestamps for byte-identical reruns");
  };

  CLI::App* a = app.add_subcommand("assemble", "assemble operator matrices");
  add_common(a);
  a->add_flag("--dump-matrices", st.dump_matrices,
              "write coordinate-format operator dumps");
  CLI::App* h = app.add_subcommand("check-hypo", "verify conditions H1-H4");
  add_common(h);
  CLI::App* r = app.add_subcommand("rate-bound", "evaluate the rate ledger");
  add_common(r);
  CLI::App* e = app.add_subcommand("evolve", "semigroup decay trace");
  add_common(e);
  CLI::App* s = app.add_subcommand("sde", "Monte Carlo observable traces");
  add_common(s);
  CLI::App* w = app.add_subcommand("sweep-alpha",
                                   "rates vs alpha (SDE + bound)");
  add_common(w);
  CLI::App* p = app.add_subcommand("report", "aggregate artifacts");
  add_common(p);

  CLI11_PARSE(app, argc, argv);

  try {
    if (env_out && st.output_dir_override.empty())
      st.output_dir_override = env_out;
    if (a->parsed()) return cmd_assemble(st);
    if (h->parsed()) return cmd_check_hypo(st);
    if (r->parsed()) return cmd_rate_bound(st);
    if (e->parsed()) return cmd_evolve(st);
    if (s->parsed()) return cmd_sde(st);
    if (w->parsed()) return cmd_sweep_alpha(st);
    if (p->parsed()) return cmd_report(st);
  } catch (const std::invalid_argument& ex) {
    std::cerr << "validation error: " << ex.what() << "\n";
    return 1;
  } catch (const std::exception& ex) {
    std::cerr << "numerical error: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}
