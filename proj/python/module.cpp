#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hypolab/config.hpp"
#include "hypolab/evolution.hpp"
#include "hypolab/hypo.hpp"
#include "hypolab/model.hpp"
#include "hypolab/operators.hpp"
#include "hypolab/ratebound.hpp"
#include "hypolab/sde.hpp"

namespace py = pybind11;
using namespace hypolab;

namespace {

SdeConfig make_sde_config(const std::string& potential_id, int d, double alpha,
                          double beta, const std::string& scheme, double dt,
                          std::int64_t n_paths, double horizon,
                          std::uint64_t seed, py::object initial_x,
                          py::object initial_w, int threads) {
  SdeConfig cfg;
  cfg.params = ModelParams(d, alpha, beta);
  cfg.pot = make_potential(potential_id, d);
  cfg.scheme = scheme_from_string(scheme);
  cfg.dt = dt;
  cfg.n_paths = n_paths;
  cfg.horizon = horizon;
  cfg.seed = seed;
  cfg.threads = threads;
  if (initial_x.is_none()) {
    cfg.initial = InitialLaw::equilibrium();
  } else {
    Eigen::VectorXd x0 = initial_x.cast<Eigen::VectorXd>();
    Eigen::VectorXd w0 = initial_w.is_none()
                             ? Eigen::VectorXd::Zero(d).eval()
                             : initial_w.cast<Eigen::VectorXd>();
    cfg.initial = InitialLaw::point(x0, w0);
  }
  return cfg;
}

py::dict trace_to_dict(const ObservableTrace& tr) {
  py::dict d;
  d["name"] = tr.name;
  d["times"] = tr.times;
  d["means"] = tr.means;
  d["std_errors"] = tr.std_errors;
  d["target"] = tr.target;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "kinetic Langevin hypocoercivity laboratory (C++ core)";

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init<int, double, double>(), py::arg("d"), py::arg("alpha"),
           py::arg("beta"))
      .def_readonly("d", &ModelParams::d)
      .def_readonly("alpha", &ModelParams::alpha)
      .def_readonly("beta", &ModelParams::beta);

  py::class_<Potential>(m, "Potential")
      .def_property_readonly("id", [](const Potential& p) { return p.id; })
      .def_property_readonly("dim", [](const Potential& p) { return p.dim; })
      .def_readonly("normalization_constant", &Potential::normalization_constant)
      .def_readonly("hessian_growth_constant", &Potential::hessian_growth_constant)
      .def_property_readonly("poincare_constant",
                             [](const Potential& p) -> py::object {
                               if (p.poincare_constant)
                                 return py::float_(*p.poincare_constant);
                               return py::none();
                             })
      .def("evaluate", [](const Potential& p, const Eigen::VectorXd& x) {
        return p.evaluate(x);
      })
      .def("gradient", [](const Potential& p, const Eigen::VectorXd& x) {
        return p.gradient(x);
      })
      .def("hessian", [](const Potential& p, const Eigen::VectorXd& x) {
        return p.hessian(x);
      });

  m.def("make_potential", &make_potential, py::arg("id"), py::arg("d") = 1);
  m.def("check_c3", [](const Potential& p, double extent, int n) {
    const C3Report r = check_c3(p, extent, n);
    py::dict d;
    d["max_ratio"] = r.max_ratio;
    d["holds"] = r.holds;
    return d;
  });

  py::class_<OperatorSet>(m, "OperatorSet")
      .def_property_readonly("dim", &OperatorSet::dim)
      .def_property_readonly("alpha",
                             [](const OperatorSet& o) { return o.params.alpha; })
      .def_property_readonly("beta",
                             [](const OperatorSet& o) { return o.params.beta; })
      .def_property_readonly(
          "S", [](const OperatorSet& o) { return Eigen::MatrixXd(o.S); })
      .def_property_readonly(
          "A", [](const OperatorSet& o) { return Eigen::MatrixXd(o.A); })
      .def_property_readonly(
          "L", [](const OperatorSet& o) { return Eigen::MatrixXd(o.L); });

  m.def(
      "assemble",
      [](const std::string& potential_id, int d, double alpha, double beta,
         int nx, int nw) {
        return assemble(ModelParams(d, alpha, beta),
                        make_potential(potential_id, d), nx, nw);
      },
      py::arg("potential"), py::arg("d"), py::arg("alpha"), py::arg("beta"),
      py::arg("nx"), py::arg("nw"));

  m.def("build_G", &build_G);
  m.def("build_B", &build_B);
  m.def("apply_AP", &apply_AP);
  m.def("apply_A2P", &apply_A2P);
  m.def("apply_B", &apply_B);
  m.def("observable_coefficients", &observable_coefficients);
  m.def("evaluate_at", &evaluate_at);

  m.def("check_hypo", [](const OperatorSet& ops, const std::string& pot_id) {
    const Potential pot = make_potential(pot_id, ops.params.d);
    return hypo_report_json(ops, pot);
  });
  m.def("certify", [](const OperatorSet& ops, const std::string& pot_id) {
    const Potential pot = make_potential(pot_id, ops.params.d);
    const HypoConstants hc = certify(ops, pot);
    py::dict d;
    d["lambda_m"] = hc.lambda_m;
    d["lambda_M"] = hc.lambda_M;
    d["c1"] = hc.c1;
    d["c2"] = hc.c2;
    d["c5"] = hc.c5;
    d["poincare_lambda"] = hc.poincare_lambda;
    d["truncation_warning"] = hc.truncation_warning;
    return d;
  });
  m.def("estimate_poincare", [](const OperatorSet& ops) {
    return estimate_poincare(ops).lambda_numeric;
  });

  m.def("build_ledger", [](double Lambda, double beta, double c_hyp,
                           double alpha, double upsilon) {
    const RateLedger led = build_ledger(Lambda, beta, c_hyp, alpha, upsilon);
    py::dict d;
    d["delta"] = led.delta;
    d["r_of_alpha"] = led.r_of_alpha;
    d["s"] = led.s;
    d["a"] = py::make_tuple(led.a1, led.a2, led.a3);
    d["eps_bar"] = led.eps_bar;
    d["eps_bar_max"] = led.eps_bar_max;
    d["epsilon"] = led.epsilon;
    d["kappa"] = led.kappa;
    d["n"] = py::make_tuple(led.n1, led.n2, led.n3);
    d["kappa1"] = led.kappa1;
    d["kappa2"] = led.kappa2;
    d["nu1"] = led.nu1;
    d["nu2"] = led.nu2;
    return d;
  }, py::arg("Lambda"), py::arg("beta"), py::arg("c_hyp"), py::arg("alpha"),
     py::arg("upsilon") = 1.0);

  m.def("nu2_curve", &nu2_curve, py::arg("Lambda"), py::arg("beta"),
        py::arg("c_hyp"), py::arg("upsilon"), py::arg("alphas"));

  m.def(
      "evolve",
      [](const OperatorSet& ops, const Eigen::VectorXd& g,
         const std::vector<double>& times, const std::string& stepper,
         double dt, py::object entropy_epsilon) {
        EvolveOptions opts;
        opts.stepper = stepper_from_string(stepper);
        opts.dt = dt;
        if (!entropy_epsilon.is_none())
          opts.entropy_epsilon = entropy_epsilon.cast<double>();
        const DecayTrace tr = evolve(ops, g, times, opts);
        py::dict d;
        d["times"] = tr.times;
        d["deviation_norms"] = tr.deviation_norms;
        d["entropy_values"] = tr.entropy_values;
        d["fitted_rate"] = tr.fitted_rate;
        d["fit_window"] = py::make_tuple(tr.fit_t_lo, tr.fit_t_hi);
        return d;
      },
      py::arg("ops"), py::arg("g"), py::arg("times"),
      py::arg("stepper") = "krylov-expm", py::arg("dt") = 1e-3,
      py::arg("entropy_epsilon") = py::none());

  m.def("spectral_gap", [](const OperatorSet& ops) {
    const SpectrumResult r = spectral_gap(ops);
    py::dict d;
    d["gap"] = r.gap;
    d["head"] = r.head;
    return d;
  });

  m.def(
      "simulate",
      [](const std::string& potential_id, int d, double alpha, double beta,
         const std::string& scheme, double dt, std::int64_t n_paths,
         double horizon, std::uint64_t seed,
         const std::vector<std::string>& observables,
         const std::vector<double>& sample_times, py::object initial_x,
         py::object initial_w, int threads, bool overdamped) {
        const SdeConfig cfg =
            make_sde_config(potential_id, d, alpha, beta, scheme, dt, n_paths,
                            horizon, seed, initial_x, initial_w, threads);
        std::vector<Observable> obs;
        for (const auto& n : observables) obs.push_back(named_observable(n));
        const auto traces = overdamped
                                ? simulate_overdamped(cfg, obs, sample_times)
                                : simulate(cfg, obs, sample_times);
        py::list out;
        for (const auto& tr : traces) out.append(trace_to_dict(tr));
        return out;
      },
      py::arg("potential"), py::arg("d"), py::arg("alpha"), py::arg("beta"),
      py::arg("scheme"), py::arg("dt"), py::arg("n_paths"), py::arg("horizon"),
      py::arg("seed"), py::arg("observables"), py::arg("sample_times"),
      py::arg("initial_x") = py::none(), py::arg("initial_w") = py::none(),
      py::arg("threads") = 0, py::arg("overdamped") = false);
}
