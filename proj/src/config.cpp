#include "hypolab/config.hpp"

#include <json.hpp>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace hypolab {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& src, const std::string& path,
                       const std::string& what) {
  throw std::invalid_argument(src + ": " + path + ": " + what);
}

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& src, const std::string& path) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      fail(src, path + "/" + it.key(), "unknown key");
}

double get_num(const json& j, const char* key, double dflt,
               const std::string& src, const std::string& path) {
  if (!j.contains(key)) return dflt;
  if (!j[key].is_number()) fail(src, path + "/" + key, "expected a number");
  return j[key].get<double>();
}

std::vector<double> parse_alphas(const json& j, const std::string& src) {
  // "alpha": number | [numbers] | {"from","to","count","log"?}
  std::vector<double> out;
  if (j.is_number()) {
    out.push_back(j.get<double>());
  } else if (j.is_array()) {
    for (const auto& v : j) {
      if (!v.is_number()) fail(src, "/params/alpha", "expected numbers");
      out.push_back(v.get<double>());
    }
  } else if (j.is_object()) {
    reject_unknown(j, {"from", "to", "count", "log"}, src, "/params/alpha");
    const double from = get_num(j, "from", 0.0, src, "/params/alpha");
    const double to = get_num(j, "to", 0.0, src, "/params/alpha");
    const int count = (int)get_num(j, "count", 0, src, "/params/alpha");
    const bool logspace = j.value("log", false);
    if (count < 2 || !(from > 0) || !(to > from))
      fail(src, "/params/alpha", "need 0 < from < to and count >= 2");
    for (int i = 0; i < count; ++i) {
      const double t = (double)i / (count - 1);
      out.push_back(logspace ? from * std::pow(to / from, t)
                             : from + (to - from) * t);
    }
  } else {
    fail(src, "/params/alpha", "expected number, array or range object");
  }
  for (double a : out)
    if (!(a > 0)) fail(src, "/params/alpha", "alpha values must be > 0");
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text,
                              const std::string& src) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(src + ": " + e.what());
  }
  ExperimentConfig cfg;
  reject_unknown(j,
                 {"potential", "params", "truncation", "ledger", "evolution",
                  "sde", "output_dir"},
                 src, "");

  if (j.contains("potential")) {
    const json& p = j["potential"];
    reject_unknown(p, {"id"}, src, "/potential");
    if (p.contains("id")) cfg.potential_id = p["id"].get<std::string>();
  }
  if (j.contains("params")) {
    const json& p = j["params"];
    reject_unknown(p, {"d", "alpha", "beta"}, src, "/params");
    cfg.d = (int)get_num(p, "d", 1, src, "/params");
    if (p.contains("alpha")) cfg.alphas = parse_alphas(p["alpha"], src);
    cfg.beta = get_num(p, "beta", 1.0, src, "/params");
  }
  if (j.contains("truncation")) {
    const json& p = j["truncation"];
    reject_unknown(p, {"nx", "nw"}, src, "/truncation");
    cfg.nx = (int)get_num(p, "nx", 16, src, "/truncation");
    cfg.nw = (int)get_num(p, "nw", 16, src, "/truncation");
  }
  if (j.contains("ledger")) {
    const json& p = j["ledger"];
    reject_unknown(p, {"upsilon", "c_hyp_override"}, src, "/ledger");
    cfg.upsilon = get_num(p, "upsilon", 1.0, src, "/ledger");
    if (p.contains("c_hyp_override") && !p["c_hyp_override"].is_null())
      cfg.c_hyp_override = p["c_hyp_override"].get<double>();
  }
  if (j.contains("evolution")) {
    const json& p = j["evolution"];
    reject_unknown(p, {"stepper", "dt", "horizon", "samples", "initial"}, src,
                   "/evolution");
    if (p.contains("stepper")) cfg.stepper = p["stepper"].get<std::string>();
    cfg.evolve_dt = get_num(p, "dt", 1e-3, src, "/evolution");
    cfg.horizon = get_num(p, "horizon", 0.0, src, "/evolution");
    cfg.samples = (int)get_num(p, "samples", 400, src, "/evolution");
    if (p.contains("initial")) cfg.initial = p["initial"].get<std::string>();
  }
  if (j.contains("sde")) {
    const json& p = j["sde"];
    reject_unknown(p,
                   {"scheme", "dt", "n_paths", "horizon", "seed", "initial",
                    "observables"},
                   src, "/sde");
    if (p.contains("scheme")) cfg.scheme = p["scheme"].get<std::string>();
    cfg.sde_dt = get_num(p, "dt", 1e-3, src, "/sde");
    cfg.n_paths = (std::int64_t)get_num(p, "n_paths", 20000, src, "/sde");
    cfg.sde_horizon = get_num(p, "horizon", 8.0, src, "/sde");
    cfg.seed = (std::uint64_t)get_num(p, "seed", 42, src, "/sde");
    if (p.contains("observables")) {
      cfg.observables.clear();
      for (const auto& o : p["observables"])
        cfg.observables.push_back(o.get<std::string>());
    }
    if (p.contains("initial")) {
      const json& q = p["initial"];
      reject_unknown(q, {"type", "x", "w"}, src, "/sde/initial");
      const std::string type = q.value("type", "point");
      if (type == "equilibrium") {
        cfg.sde_initial = InitialLaw::equilibrium();
      } else if (type == "point") {
        Eigen::VectorXd x0 = Eigen::VectorXd::Zero(cfg.d),
                        w0 = Eigen::VectorXd::Zero(cfg.d);
        if (q.contains("x"))
          for (int c = 0; c < std::min<int>(cfg.d, q["x"].size()); ++c)
            x0[c] = q["x"][c].get<double>();
        if (q.contains("w"))
          for (int c = 0; c < std::min<int>(cfg.d, q["w"].size()); ++c)
            w0[c] = q["w"][c].get<double>();
        cfg.sde_initial = InitialLaw::point(x0, w0);
      } else {
        fail(src, "/sde/initial/type", "expected 'point' or 'equilibrium'");
      }
    }
  }
  if (j.contains("output_dir"))
    cfg.output_dir = j["output_dir"].get<std::string>();

  // revalidate cross-field constraints of the underlying modules
  if (cfg.d < 1 || cfg.d > 3)
    fail(src, "/params/d", "spectral pipeline supports d in {1,2,3}");
  if (!(cfg.beta > 0)) fail(src, "/params/beta", "beta must be > 0");
  if (cfg.nx < 2 || cfg.nw < 2) fail(src, "/truncation", "nx, nw >= 2");
  if (!(cfg.upsilon > 0)) fail(src, "/ledger/upsilon", "upsilon > 0");
  if (!(cfg.evolve_dt > 0)) fail(src, "/evolution/dt", "dt > 0");
  if (cfg.samples < 3) fail(src, "/evolution/samples", "samples >= 3");
  if (!(cfg.sde_dt > 0)) fail(src, "/sde/dt", "dt > 0");
  if (cfg.n_paths < 1) fail(src, "/sde/n_paths", "n_paths >= 1");
  if (!(cfg.sde_horizon > 0)) fail(src, "/sde/horizon", "horizon > 0");
  if (cfg.scheme == "euler-maruyama") {
    for (double a : cfg.alphas)
      if (cfg.sde_dt * a >= 0.5)
        fail(src, "/sde/dt", "euler-maruyama requires dt * alpha < 0.5");
  } else if (cfg.scheme != "baoab") {
    fail(src, "/sde/scheme", "expected 'euler-maruyama' or 'baoab'");
  }
  if (cfg.stepper != "krylov-expm" && cfg.stepper != "crank-nicolson")
    fail(src, "/evolution/stepper",
         "expected 'krylov-expm' or 'crank-nicolson'");
  try {
    make_potential(cfg.potential_id, cfg.d);
  } catch (const std::exception& e) {
    fail(src, "/potential/id", e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open config file: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path);
}

std::string config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["potential"] = {{"id", cfg.potential_id}};
  j["params"] = {{"d", cfg.d}, {"beta", cfg.beta}};
  if (cfg.alphas.size() == 1)
    j["params"]["alpha"] = cfg.alphas[0];
  else
    j["params"]["alpha"] = cfg.alphas;
  j["truncation"] = {{"nx", cfg.nx}, {"nw", cfg.nw}};
  j["ledger"]["upsilon"] = cfg.upsilon;
  if (cfg.c_hyp_override) j["ledger"]["c_hyp_override"] = *cfg.c_hyp_override;
  j["evolution"] = {{"stepper", cfg.stepper},
                    {"dt", cfg.evolve_dt},
                    {"horizon", cfg.horizon},
                    {"samples", cfg.samples},
                    {"initial", cfg.initial}};
  j["sde"] = {{"scheme", cfg.scheme},
              {"dt", cfg.sde_dt},
              {"n_paths", cfg.n_paths},
              {"horizon", cfg.sde_horizon},
              {"seed", cfg.seed},
              {"observables", cfg.observables}};
  if (cfg.sde_initial.kind == InitialLaw::Kind::Equilibrium) {
    j["sde"]["initial"] = {{"type", "equilibrium"}};
  } else {
    std::vector<double> x(cfg.sde_initial.x0.data(),
                          cfg.sde_initial.x0.data() + cfg.sde_initial.x0.size());
    std::vector<double> w(cfg.sde_initial.w0.data(),
                          cfg.sde_initial.w0.data() + cfg.sde_initial.w0.size());
    j["sde"]["initial"] = {{"type", "point"}, {"x", x}, {"w", w}};
  }
  j["output_dir"] = cfg.output_dir;
  return j.dump(2);
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string s = config_to_json(cfg);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", (unsigned long long)h);
  return buf;
}

}  // namespace hypolab
