#pragma once

// Run configuration: strict JSON parsing, named presets, canonical dump.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "vhmv/errors.hpp"
#include "vhmv/kernels.hpp"
#include "vhmv/model.hpp"
#include "vhmv/presets.hpp"
#include "vhmv/simulate.hpp"
#include "vhmv/volterra.hpp"

namespace vhmv {

using json = nlohmann::json;

enum class OutputFormat { Csv, Json };

struct SolverBlock {
  std::size_t steps = 500;
  unsigned corrector_sweeps = 1;
  double tolerance = 1e-6;
  double blowup_threshold = 1e8;
  double dual_tolerance = 1e-5;
  double p = 2.5;  // admissibility exponent

  SolverOptions options() const { return {corrector_sweeps, blowup_threshold, tolerance}; }
};

struct SimulationBlock {
  SimConfig sim{};
  bool seed_given = false;
  std::size_t bootstrap_resamples = 1000;
  double level = 0.95;
  std::size_t sample_paths = 10;
};

struct Investor {
  std::string name;
  ModelParams model;
};

struct StrategyBlock {
  std::optional<double> V;  // constant state override; default V0
  std::optional<double> X;  // default x0 e^{int_0^t r}
  std::size_t points = 0;   // 0: every solver node
};

struct ExperimentBlock {
  std::vector<double> alphas;  // fractional kernels only
  std::vector<double> c_grid;  // empty: x0 e^{(r+m)T}, m in [0.01, 0.5]
  std::size_t c_points = 50;
  StrategyBlock strategy;
  std::vector<Investor> investors;  // empty: one investor with the base model
  bool zero_control = false;
};

struct OutputBlock {
  std::string dir = ".";
  OutputFormat format = OutputFormat::Csv;
};

struct RunConfig {
  std::string preset;
  ModelParams model;
  bool target_given = false;
  SolverBlock solver;
  SimulationBlock simulation;
  ExperimentBlock experiment;
  OutputBlock output;
};

inline std::string to_string(OutputFormat f) { return f == OutputFormat::Json ? "json" : "csv"; }

inline OutputFormat parse_format(const std::string& s) {
  if (s == "csv") return OutputFormat::Csv;
  if (s == "json") return OutputFormat::Json;
  throw ConfigError("output format must be csv or json, got '" + s + "'");
}

namespace detail {

inline void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(where) + " must be an object");
  for (const auto& item : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
      throw ConfigError("unknown key '" + item.key() + "' in " + std::string(where));
  }
}

inline double number(const json& obj, const char* key, std::string_view where) {
  const json& v = obj.at(key);
  if (!v.is_number()) throw ConfigError(std::string(where) + "." + key + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(std::string(where) + "." + key + " must be finite");
  return x;
}

inline void read(const json& obj, const char* key, std::string_view where, double& out) {
  if (obj.contains(key)) out = number(obj, key, where);
}

inline std::uint64_t count(const json& obj, const char* key, std::string_view where) {
  const json& v = obj.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    throw ConfigError(std::string(where) + "." + key + " must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

template <class T>
void read_count(const json& obj, const char* key, std::string_view where, T& out) {
  if (!obj.contains(key)) return;
  const std::uint64_t v = count(obj, key, where);
  if (v > std::numeric_limits<T>::max()) throw ConfigError(std::string(where) + "." + key + " is too large");
  out = static_cast<T>(v);
}

inline std::string text(const json& obj, const char* key, std::string_view where) {
  const json& v = obj.at(key);
  if (!v.is_string()) throw ConfigError(std::string(where) + "." + key + " must be a string");
  return v.get<std::string>();
}

inline std::vector<double> numbers(const json& v, std::string_view where) {
  if (!v.is_array()) throw ConfigError(std::string(where) + " must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number() || !std::isfinite(x.get<double>()))
      throw ConfigError(std::string(where) + " must be an array of finite numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

inline RateCurve parse_rate(const json& v) {
  try {
    if (v.is_number()) return RateCurve(v.get<double>());
    check_keys(v, "model.rate", {"knots", "values"});
    if (!v.contains("knots") || !v.contains("values")) throw ConfigError("model.rate needs knots and values");
    return RateCurve(numbers(v.at("knots"), "model.rate.knots"), numbers(v.at("values"), "model.rate.values"));
  } catch (const DomainError& e) {
    throw ConfigError(std::string("model.rate: ") + e.what());
  }
}

inline KernelSpec parse_kernel(const json& v, std::string_view where, const KernelSpec& base) {
  check_keys(v, where, {"type", "alpha", "c", "beta"});
  KernelSpec k = base;
  if (v.contains("type")) {
    const std::string type = text(v, "type", where);
    if (type == "constant") k = KernelSpec::constant();
    else if (type == "fractional") k = KernelSpec::fractional(base.kind == KernelKind::Fractional ? base.alpha : 0.6);
    else if (type == "exponential") k = KernelSpec::exponential(base.kind == KernelKind::Exponential ? base.beta : 0.0);
    else throw ConfigError(std::string(where) + ".type must be constant, fractional or exponential");
    if (!v.contains("c")) k.c = base.c;
  }
  if (v.contains("alpha") && k.kind != KernelKind::Fractional)
    throw ConfigError(std::string(where) + ".alpha applies to the fractional kernel only");
  if (v.contains("beta") && k.kind != KernelKind::Exponential)
    throw ConfigError(std::string(where) + ".beta applies to the exponential kernel only");
  read(v, "alpha", where, k.alpha);
  read(v, "beta", where, k.beta);
  read(v, "c", where, k.c);
  try {
    k.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string(where) + ": " + e.what());
  }
  return k;
}

/// Overlays `v` on `base`; with `complete` every key except c must be present.
inline ModelParams parse_model(const json& v, std::string_view where, ModelParams base, bool complete,
                               bool& target_given) {
  check_keys(v, where, {"V0", "kappa", "phi", "sigma", "rho", "theta", "T", "x0", "rate", "c"});
  if (complete) {
    for (const char* key : {"V0", "kappa", "phi", "sigma", "rho", "theta", "T", "x0", "rate"})
      if (!v.contains(key)) throw ConfigError(std::string(where) + "." + key + " is required");
  }
  read(v, "V0", where, base.V0);
  read(v, "kappa", where, base.kappa);
  read(v, "phi", where, base.phi);
  read(v, "sigma", where, base.sigma);
  read(v, "rho", where, base.rho);
  read(v, "theta", where, base.theta);
  read(v, "T", where, base.T);
  read(v, "x0", where, base.x0);
  if (v.contains("rate")) base.rate = parse_rate(v.at("rate"));
  if (v.contains("c")) {
    base.c = number(v, "c", where);
    target_given = true;
  }
  return base;
}

inline void validate_model(const ModelParams& p, std::string_view where) {
  try {
    p.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string(where) + ": " + e.what());
  }
}

inline bool valid_name(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char ch) {
    return (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '-' || ch == '_';
  });
}

}  // namespace detail

inline std::vector<std::string> preset_names() {
  auto out = presets::names();
  out.push_back("fig3");
  return out;
}

/// Preset defaults before the file's own blocks are applied.
inline RunConfig preset_config(const std::string& name) {
  RunConfig cfg;
  cfg.preset = name;
  cfg.target_given = true;
  if (name == "fig3") {
    cfg.model = presets::fig3_example();
    cfg.experiment.alphas = {0.6};
    cfg.simulation.sim.n_paths = 3000;
    cfg.simulation.sim.n_steps = 250;
    return cfg;
  }
  const auto model = presets::by_name(name);
  if (!model) {
    std::string list;
    for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError("unknown preset '" + name + "'; known presets: " + list);
  }
  cfg.model = *model;
  if (name == "fig4") {
    cfg.experiment.alphas = presets::fig4_alpha_grid();
  } else {
    cfg.experiment.alphas = presets::alpha_grid();
  }
  if (name == "fig2-small-sigma" || name == "fig2-big-sigma") {
    cfg.experiment.strategy.V = presets::kFig2V;
    cfg.experiment.strategy.X = presets::kFig2X;
  }
  return cfg;
}

inline RunConfig parse_config(const json& j) {
  using namespace detail;
  check_keys(j, "config", {"preset", "model", "kernel", "solver", "simulation", "experiment", "output"});
  RunConfig cfg;
  const bool has_preset = j.contains("preset");
  if (has_preset) {
    const std::string name = text(j, "preset", "config");
    if (name == "fig3" && !j.contains("model"))
      throw ConfigError(
          "preset fig3 needs calibrated model parameters in a model block; see configs/fig3-example.json");
    cfg = preset_config(name);
  } else if (!j.contains("model")) {
    throw ConfigError("config needs a model block or a preset");
  }
  const bool complete = !has_preset || cfg.preset == "fig3";
  if (j.contains("model")) cfg.model = parse_model(j.at("model"), "model", cfg.model, complete, cfg.target_given);
  if (j.contains("kernel")) cfg.model.kernel = parse_kernel(j.at("kernel"), "kernel", cfg.model.kernel);
  validate_model(cfg.model, "model");

  if (j.contains("solver")) {
    const json& s = j.at("solver");
    check_keys(s, "solver", {"steps", "corrector_sweeps", "tolerance", "blowup_threshold", "dual_tolerance", "p"});
    read_count(s, "steps", "solver", cfg.solver.steps);
    read_count(s, "corrector_sweeps", "solver", cfg.solver.corrector_sweeps);
    read(s, "tolerance", "solver", cfg.solver.tolerance);
    read(s, "blowup_threshold", "solver", cfg.solver.blowup_threshold);
    read(s, "dual_tolerance", "solver", cfg.solver.dual_tolerance);
    read(s, "p", "solver", cfg.solver.p);
  }
  if (cfg.solver.steps == 0) throw ConfigError("solver.steps must be positive");
  if (cfg.solver.corrector_sweeps == 0) throw ConfigError("solver.corrector_sweeps must be positive");
  if (!(cfg.solver.tolerance > 0.0) || !(cfg.solver.dual_tolerance > 0.0) || !(cfg.solver.blowup_threshold > 0.0))
    throw ConfigError("solver tolerances and blowup_threshold must be positive");
  if (!(cfg.solver.p > 2.0)) throw ConfigError("solver.p must exceed 2");

  if (j.contains("simulation")) {
    const json& s = j.at("simulation");
    check_keys(s, "simulation",
               {"n_paths", "n_steps", "seed", "scheme", "lifted_factors", "lifted_spacing", "lifted_tolerance", "s0",
                "threads", "bootstrap_resamples", "level", "sample_paths"});
    SimConfig& sim = cfg.simulation.sim;
    read_count(s, "n_paths", "simulation", sim.n_paths);
    read_count(s, "n_steps", "simulation", sim.n_steps);
    if (s.contains("seed")) {
      sim.seed = count(s, "seed", "simulation");
      cfg.simulation.seed_given = true;
    }
    if (s.contains("scheme")) {
      const auto scheme = parse_scheme(text(s, "scheme", "simulation"));
      if (!scheme) throw ConfigError("simulation.scheme must be volterra-euler or lifted");
      sim.scheme = *scheme;
    }
    read_count(s, "lifted_factors", "simulation", sim.lifted_factors);
    read(s, "lifted_spacing", "simulation", sim.lifted_spacing);
    read(s, "lifted_tolerance", "simulation", sim.lifted_tolerance);
    read(s, "s0", "simulation", sim.s0);
    read_count(s, "threads", "simulation", sim.threads);
    read_count(s, "bootstrap_resamples", "simulation", cfg.simulation.bootstrap_resamples);
    read(s, "level", "simulation", cfg.simulation.level);
    read_count(s, "sample_paths", "simulation", cfg.simulation.sample_paths);
  }
  cfg.simulation.sim.validate();
  if (cfg.simulation.bootstrap_resamples < 2) throw ConfigError("simulation.bootstrap_resamples must be at least 2");
  if (!(cfg.simulation.level > 0.0 && cfg.simulation.level < 1.0))
    throw ConfigError("simulation.level must lie in (0, 1)");

  ExperimentBlock& ex = cfg.experiment;
  bool alphas_given = false;
  if (j.contains("experiment")) {
    const json& e = j.at("experiment");
    check_keys(e, "experiment", {"alphas", "c_grid", "c_points", "strategy", "investors", "zero_control"});
    if (e.contains("alphas")) {
      ex.alphas = numbers(e.at("alphas"), "experiment.alphas");
      alphas_given = true;
    }
    if (e.contains("c_grid")) ex.c_grid = numbers(e.at("c_grid"), "experiment.c_grid");
    read_count(e, "c_points", "experiment", ex.c_points);
    if (e.contains("strategy")) {
      const json& s = e.at("strategy");
      check_keys(s, "experiment.strategy", {"V", "X", "points"});
      if (s.contains("V")) ex.strategy.V = number(s, "V", "experiment.strategy");
      if (s.contains("X")) ex.strategy.X = number(s, "X", "experiment.strategy");
      read_count(s, "points", "experiment.strategy", ex.strategy.points);
    }
    if (e.contains("zero_control")) {
      if (!e.at("zero_control").is_boolean()) throw ConfigError("experiment.zero_control must be true or false");
      ex.zero_control = e.at("zero_control").get<bool>();
    }
    if (e.contains("investors")) {
      const json& list = e.at("investors");
      if (!list.is_array() || list.empty()) throw ConfigError("experiment.investors must be a nonempty array");
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string where = "experiment.investors[" + std::to_string(i) + "]";
        check_keys(list[i], where, {"name", "model", "kernel"});
        if (!list[i].contains("name")) throw ConfigError(where + ".name is required");
        Investor inv{text(list[i], "name", where), cfg.model};
        if (!valid_name(inv.name)) throw ConfigError(where + ".name may use letters, digits, '-' and '_' only");
        for (const auto& other : ex.investors)
          if (other.name == inv.name) throw ConfigError("duplicate investor name '" + inv.name + "'");
        bool ignored = false;
        if (list[i].contains("model")) inv.model = parse_model(list[i].at("model"), where + ".model", inv.model, false, ignored);
        if (list[i].contains("kernel")) inv.model.kernel = parse_kernel(list[i].at("kernel"), where + ".kernel", inv.model.kernel);
        validate_model(inv.model, where);
        ex.investors.push_back(std::move(inv));
      }
    }
  }
  if (ex.strategy.V && !(*ex.strategy.V >= 0.0)) throw ConfigError("experiment.strategy.V must be nonnegative");
  if (ex.strategy.points == 1) throw ConfigError("experiment.strategy.points must be 0 or at least 2");
  if (ex.c_points == 0) throw ConfigError("experiment.c_points must be positive");
  if (cfg.model.kernel.kind == KernelKind::Fractional) {
    const bool kernel_alpha = j.contains("kernel") && j.at("kernel").contains("alpha");
    if (ex.alphas.empty() || (kernel_alpha && !alphas_given)) ex.alphas = {cfg.model.kernel.alpha};
    for (double a : ex.alphas)
      if (!(a > 0.5 && a <= 1.0)) throw ConfigError("experiment.alphas must lie in (0.5, 1]");
  } else if (!alphas_given) {
    ex.alphas.clear();
  } else {
    throw ConfigError("experiment.alphas applies to the fractional kernel only");
  }

  if (j.contains("output")) {
    const json& o = j.at("output");
    check_keys(o, "output", {"dir", "format"});
    if (o.contains("dir")) cfg.output.dir = text(o, "dir", "output");
    if (o.contains("format")) cfg.output.format = parse_format(text(o, "format", "output"));
  }
  return cfg;
}

inline json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse_config(parse_json_text(os.str(), path));
}

// ---------------------------------------------------------------- canonical form

inline json to_json(const RateCurve& r) {
  if (r.is_constant()) return r.values().front();
  return {{"knots", r.knots()}, {"values", r.values()}};
}

inline json to_json(const KernelSpec& k) {
  json out{{"type", to_string(k.kind)}, {"c", k.c}};
  if (k.kind == KernelKind::Fractional) out["alpha"] = k.alpha;
  if (k.kind == KernelKind::Exponential) out["beta"] = k.beta;
  return out;
}

inline json to_json(const ModelParams& p, bool with_target = true) {
  json out{{"V0", p.V0}, {"kappa", p.kappa}, {"phi", p.phi}, {"sigma", p.sigma}, {"rho", p.rho},
           {"theta", p.theta}, {"T", p.T}, {"x0", p.x0}, {"rate", to_json(p.rate)}};
  if (with_target) out["c"] = p.c;
  return out;
}

/// Every field that affects results. Output location, thread count and seed are left out.
inline json to_json(const RunConfig& cfg) {
  const SimConfig& sim = cfg.simulation.sim;
  const ExperimentBlock& ex = cfg.experiment;
  json investors = json::array();
  for (const auto& inv : ex.investors)
    investors.push_back({{"name", inv.name}, {"model", to_json(inv.model)}, {"kernel", to_json(inv.model.kernel)}});
  json strategy{{"points", ex.strategy.points}};
  if (ex.strategy.V) strategy["V"] = *ex.strategy.V;
  if (ex.strategy.X) strategy["X"] = *ex.strategy.X;
  json out{
      {"model", to_json(cfg.model, cfg.target_given)},
      {"kernel", to_json(cfg.model.kernel)},
      {"solver",
       {{"steps", cfg.solver.steps},
        {"corrector_sweeps", cfg.solver.corrector_sweeps},
        {"tolerance", cfg.solver.tolerance},
        {"blowup_threshold", cfg.solver.blowup_threshold},
        {"dual_tolerance", cfg.solver.dual_tolerance},
        {"p", cfg.solver.p}}},
      {"simulation",
       {{"n_paths", sim.n_paths},
        {"n_steps", sim.n_steps},
        {"scheme", to_string(sim.scheme)},
        {"lifted_factors", sim.lifted_factors},
        {"lifted_spacing", sim.lifted_spacing},
        {"lifted_tolerance", sim.lifted_tolerance},
        {"s0", sim.s0},
        {"bootstrap_resamples", cfg.simulation.bootstrap_resamples},
        {"level", cfg.simulation.level},
        {"sample_paths", cfg.simulation.sample_paths}}},
      {"experiment",
       {{"alphas", ex.alphas},
        {"c_grid", ex.c_grid},
        {"c_points", ex.c_points},
        {"strategy", strategy},
        {"investors", investors},
        {"zero_control", ex.zero_control}}},
  };
  if (!cfg.preset.empty()) out["preset"] = cfg.preset;
  return out;
}

/// FNV-1a 64 of the canonical JSON text, as 16 hex digits.
inline std::string params_hash(const RunConfig& cfg) {
  const std::string text = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace vhmv
