#pragma once

// Subcommands psi, strategy, frontier, simulate and validate, and the exit-code contract.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vhmv/config.hpp"
#include "vhmv/errors.hpp"
#include "vhmv/oracle.hpp"
#include "vhmv/portfolio.hpp"
#include "vhmv/simulate.hpp"
#include "vhmv/table.hpp"

#ifndef VHMV_VERSION
#define VHMV_VERSION "0.0.0"
#endif

namespace vhmv {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNumeric = 2, kExitValidation = 3 };

struct CommandResult {
  ResultSet tables;
  std::vector<std::string> warnings;
  int exit_code = kExitOk;
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"psi", "strategy", "frontier", "simulate", "validate"};
  return names;
}

namespace detail {

inline std::string short_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

struct Variant {
  std::string label;
  ModelParams params;
};

/// One model per requested alpha for fractional kernels, else the model itself.
inline std::vector<Variant> variants(const RunConfig& cfg) {
  std::vector<Variant> out;
  if (cfg.model.kernel.kind != KernelKind::Fractional) {
    out.push_back({to_string(cfg.model.kernel.kind), cfg.model});
    return out;
  }
  for (double a : cfg.experiment.alphas) {
    ModelParams p = cfg.model;
    p.kernel.alpha = a;
    out.push_back({"alpha_" + short_number(a), p});
  }
  return out;
}

inline MVOptions mv_options(const RunConfig& cfg) {
  MVOptions o;
  o.steps = cfg.solver.steps;
  o.solver = cfg.solver.options();
  o.p = cfg.solver.p;
  o.dual_tolerance = cfg.solver.dual_tolerance;
  return o;
}

inline ResultTable make_table(const RunConfig& cfg, const std::string& command, const std::string& name) {
  ResultTable t;
  t.name = name;
  t.metadata = {{"command", command},
                {"version", VHMV_VERSION},
                {"params_hash", params_hash(cfg)},
                {"seed", cfg.simulation.seed_given ? std::to_string(cfg.simulation.sim.seed) : "none"}};
  if (!cfg.preset.empty()) t.metadata.emplace_back("preset", cfg.preset);
  return t;
}

inline void require_target(const RunConfig& cfg, const std::string& command) {
  if (!cfg.target_given) throw ConfigError(command + " needs the target terminal mean model.c");
}

}  // namespace detail

// ---------------------------------------------------------------- psi

inline CommandResult cmd_psi(const RunConfig& cfg) {
  CommandResult out;
  ResultTable t = detail::make_table(cfg, "psi", "psi");
  t.columns = {"t"};
  std::vector<PsiSolution> sols;
  for (const auto& v : detail::variants(cfg)) {
    sols.push_back(solve_psi(v.params, UniformGrid(v.params.T, cfg.solver.steps), cfg.solver.options()));
    t.columns.push_back("psi_" + v.label);
    for (const auto& w : sols.back().warnings) out.warnings.push_back(v.label + ": " + w);
  }
  const UniformGrid& grid = sols.front().grid;
  for (std::size_t n = 0; n < grid.size(); ++n) {
    std::vector<double> row{grid.time(n)};
    for (const auto& s : sols) row.push_back(s.values[n]);
    t.add_row(row);
  }
  out.tables.push_back(std::move(t));
  return out;
}

// ---------------------------------------------------------------- strategy

/// u*(t) and A(t) per variant along a state path: constant (V, X) when given,
/// else V = V0 and X = x0 e^{int_0^t r}.
inline CommandResult cmd_strategy(const RunConfig& cfg) {
  detail::require_target(cfg, "strategy");
  CommandResult out;
  ResultTable t = detail::make_table(cfg, "strategy", "strategy");
  const StrategyBlock& sb = cfg.experiment.strategy;
  t.metadata.emplace_back("V", sb.V ? detail::format_double(*sb.V) : "V0");
  t.metadata.emplace_back("X", sb.X ? detail::format_double(*sb.X) : "riskless");
  std::vector<MVSolution> sols;
  std::vector<std::string> labels;
  for (const auto& v : detail::variants(cfg)) {
    sols.push_back(solve_mv(v.params, detail::mv_options(cfg)));
    labels.push_back(v.label);
    for (const auto& w : sols.back().warnings) out.warnings.push_back(v.label + ": " + w);
  }
  t.columns = {"t"};
  for (const auto& l : labels) t.columns.push_back("u_" + l);
  for (const auto& l : labels) t.columns.push_back("A_" + l);
  const ModelParams& p = cfg.model;
  std::vector<double> times;
  if (sb.points == 0) {
    times = UniformGrid(p.T, cfg.solver.steps).times();
  } else {
    times = UniformGrid(p.T, sb.points - 1).times();
  }
  for (double tm : times) {
    const double V = sb.V ? *sb.V : p.V0;
    const double X = sb.X ? *sb.X : p.x0 * std::exp(p.rate.integral(0.0, tm));
    std::vector<double> row{tm};
    for (const auto& mv : sols) row.push_back(optimal_u(mv, tm, V, X));
    for (const auto& mv : sols) row.push_back(mv.A_at(tm));
    t.add_row(row);
  }
  out.tables.push_back(std::move(t));
  return out;
}

// ---------------------------------------------------------------- frontier

inline std::vector<double> frontier_targets(const RunConfig& cfg) {
  if (!cfg.experiment.c_grid.empty()) return cfg.experiment.c_grid;
  return presets::fig4_targets(cfg.model, cfg.experiment.c_points);
}

inline CommandResult cmd_frontier(const RunConfig& cfg) {
  CommandResult out;
  const auto targets = frontier_targets(cfg);
  ResultTable f = detail::make_table(cfg, "frontier", "frontier");
  ResultTable m = detail::make_table(cfg, "frontier", "m0");
  m.label_column = "variant";
  m.columns = {"M0", "M0_dual", "relative_gap"};
  std::vector<FrontierCurve> curves;
  std::vector<std::string> labels;
  const MVOptions opts = detail::mv_options(cfg);
  for (const auto& v : detail::variants(cfg)) {
    curves.push_back(efficient_frontier(v.params, targets, opts));
    labels.push_back(v.label);
    const auto psi = solve_psi(v.params, UniformGrid(v.params.T, opts.steps), opts.solver);
    const auto forms = m0_forms(v.params, psi);
    m.add_row(v.label, {forms.general, forms.dual, forms.relative_gap});
  }
  f.columns = {"c"};
  for (const auto& l : labels) f.columns.push_back("var_" + l);
  for (const auto& l : labels) f.columns.push_back("std_" + l);
  for (const auto& l : labels) f.columns.push_back("ratio_" + l);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    std::vector<double> row{targets[i]};
    for (const auto& c : curves) row.push_back(c.variance[i]);
    for (const auto& c : curves) row.push_back(c.stddev[i]);
    for (const auto& c : curves) row.push_back(c.ratio[i]);
    f.add_row(row);
  }
  out.tables.push_back(std::move(f));
  out.tables.push_back(std::move(m));
  return out;
}

// ---------------------------------------------------------------- simulate

inline std::vector<Investor> investors(const RunConfig& cfg) {
  if (!cfg.experiment.investors.empty()) return cfg.experiment.investors;
  return {{"investor", cfg.model}};
}

/// Per investor: sample paths and bootstrap bands; one shared table compares
/// Monte Carlo estimates with the closed forms. All investors use the same seed.
inline CommandResult cmd_simulate(const RunConfig& cfg) {
  detail::require_target(cfg, "simulate");
  if (!cfg.simulation.seed_given) throw ConfigError("simulate needs a seed; run_command generates one");
  CommandResult out;
  const SimConfig& sim = cfg.simulation.sim;
  const BootstrapOptions boot{cfg.simulation.bootstrap_resamples, cfg.simulation.level, sim.seed};
  ResultTable val = detail::make_table(cfg, "simulate", "validation");
  val.label_column = "check";
  val.columns = {"closed_form", "estimate", "std_error", "z", "pass"};
  auto add_check = [&](const std::string& label, double closed, double est, double se, bool pass) {
    const double z = se > 0.0 ? (est - closed) / se : std::numeric_limits<double>::quiet_NaN();
    val.add_row(label, {closed, est, se, z, pass ? 1.0 : 0.0});
  };
  const bool zero = cfg.experiment.zero_control;
  for (const auto& inv : investors(cfg)) {
    const ModelParams& p = inv.model;
    const MVSolution mv = solve_mv(p, detail::mv_options(cfg));
    for (const auto& w : mv.warnings) out.warnings.push_back(inv.name + ": " + w);
    const bool track = !zero && cfg.solver.steps % sim.n_steps == 0;
    if (!zero && !track)
      out.warnings.push_back(inv.name + ": solver.steps is not a multiple of simulation.n_steps; M is not tracked");
    const PathBundle b = simulate_portfolio(p, mv, sim, {zero, track});
    for (const auto& w : b.warnings) out.warnings.push_back(inv.name + ": " + w);
    const McSummary s = summarize(b, mv.zeta_star, boot);
    const std::size_t N = b.grid.steps();

    ResultTable bands = detail::make_table(cfg, "simulate", inv.name + "_bands");
    bands.metadata.emplace_back("investor", inv.name);
    bands.metadata.emplace_back("scheme", to_string(sim.scheme));
    bands.metadata.emplace_back("clipped_fraction", detail::format_double(s.clipped_fraction));
    bands.metadata.emplace_back("zeta_star", detail::format_double(mv.zeta_star));
    bands.columns = {"t"};
    const std::vector<std::pair<std::string, const BandCurve*>> curves{
        {"X", &s.wealth}, {"u", &s.strategy}, {"pi", &s.amount}, {"V", &s.variance}};
    for (const auto& [name, c] : curves)
      for (const char* suffix : {"_mean", "_lower", "_upper", "_se"}) bands.columns.push_back(name + suffix);
    if (track) bands.columns.push_back("M_mean");
    for (std::size_t n = 0; n <= N; ++n) {
      std::vector<double> row{s.times[n]};
      for (const auto& [name, c] : curves) {
        row.push_back(c->mean[n]);
        row.push_back(c->lower[n]);
        row.push_back(c->upper[n]);
        row.push_back(c->std_error[n]);
      }
      if (track) {
        double acc = 0.0;
        for (std::size_t k = 0; k < b.n_paths; ++k) acc += b.at(b.M, k, n);
        row.push_back(acc / static_cast<double>(b.n_paths));
      }
      bands.add_row(row);
    }

    ResultTable paths = detail::make_table(cfg, "simulate", inv.name + "_paths");
    paths.metadata.emplace_back("investor", inv.name);
    const std::size_t k = std::min(cfg.simulation.sample_paths, b.n_paths);
    paths.columns = {"t"};
    for (const char* name : {"X", "u", "V", "S"})
      for (std::size_t j = 0; j < k; ++j) paths.columns.push_back(std::string(name) + "_" + std::to_string(j));
    for (std::size_t n = 0; n <= N; ++n) {
      std::vector<double> row{b.grid.time(n)};
      for (const auto* a : {&b.X, &b.u, &b.V, &b.S})
        for (std::size_t j = 0; j < k; ++j) row.push_back(b.at(*a, j, n));
      paths.add_row(row);
    }

    const std::string pre = inv.name + "/";
    const TerminalStats& ts = s.terminal;
    if (zero) {
      const double riskless = p.riskless_terminal();
      double worst = 0.0;
      for (double x : b.terminal_wealth()) worst = std::max(worst, std::abs(x - riskless));
      add_check(pre + "riskless_terminal", riskless, ts.mean.value, ts.mean.std_error, worst <= 1e-12 * riskless);
    } else {
      auto within = [](double closed, const Estimate& e) { return std::abs(e.value - closed) <= 3.0 * e.std_error; };
      add_check(pre + "mean_terminal", p.c, ts.mean.value, ts.mean.std_error, within(p.c, ts.mean));
      add_check(pre + "var_terminal", mv.variance_opt, ts.variance.value, ts.variance.std_error,
                within(mv.variance_opt, ts.variance));
      const double se_closed = mv.terminal_square_error();
      add_check(pre + "square_error", se_closed, ts.square_error.value, ts.square_error.std_error,
                within(se_closed, ts.square_error));
    }
    if (track) {
      // M equals its upper bound where the clipped forward variance vanishes on [t, T].
      std::size_t bad = 0, attained = 0;
      double m0_mean = 0.0;
      for (std::size_t j = 0; j < b.n_paths; ++j) {
        for (std::size_t n = 0; n < N; ++n) {
          const double m = b.at(b.M, j, n);
          const double upper = 2.0 * std::exp(2.0 * p.rate.integral(b.grid.time(n), p.T));
          if (!(m > 0.0 && m <= upper)) ++bad;
          if (m == upper) ++attained;
        }
        if (b.at(b.M, j, N) != 2.0) ++bad;
        m0_mean += b.at(b.M, j, 0);
      }
      m0_mean /= static_cast<double>(b.n_paths);
      add_check(pre + "M_bound_violations", 0.0, static_cast<double>(bad), 0.0, bad == 0);
      add_check(pre + "M_upper_attained", 0.0, static_cast<double>(attained), 0.0, true);
      add_check(pre + "M_at_zero", mv.M0, m0_mean, 0.0, std::abs(m0_mean - mv.M0) <= 1e-4 * mv.M0);
    }
    out.tables.push_back(std::move(bands));
    out.tables.push_back(std::move(paths));
  }
  for (std::size_t r = 0; r < val.rows(); ++r)
    if (val.at(r, val.index("pass")) != 1.0) out.warnings.push_back("Monte Carlo check failed: " + val.labels[r]);
  out.tables.push_back(std::move(val));
  return out;
}

// ---------------------------------------------------------------- validate

struct ValidationRow {
  std::string check;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Exponent for the g checks: inside kappa^2 - 2 a sigma^2 > 0 so the comparison bound applies.
inline double validation_exponent(const ModelParams& p) {
  if (p.sigma == 0.0) return 1.0;
  return std::min(1.0, p.kappa * p.kappa / (4.0 * p.sigma * p.sigma));
}

inline std::vector<ValidationRow> validation_rows(const ModelParams& p, const std::string& label,
                                                  const SolverBlock& solver) {
  std::vector<ValidationRow> rows;
  auto add = [&](const std::string& name, double residual, double tol, bool pass) {
    rows.push_back({label + "/" + name, residual, tol, pass});
  };
  auto below = [&](const std::string& name, double residual, double tol) {
    add(name, residual, tol, residual <= tol);
  };
  const UniformGrid coarse(p.T, 50);
  below("resolvent_identity", oracle::resolvent_identity_residual(p.kernel, p.lambda(), coarse), 1e-6);
  below("first_kind_identity", oracle::first_kind_identity_residual(p.kernel, coarse), 1e-8);

  const UniformGrid grid(p.T, solver.steps);
  const SolverOptions opts = solver.options();
  const PsiSolution psi = solve_psi(p, grid, opts);
  below("adams_residual", psi.max_residual, solver.tolerance);

  const double a = validation_exponent(p);
  const LemmaCheck lc = lemma_violations(p, psi, a, opts);
  below("lemma_violations", static_cast<double>(lc.violations), 0.0);

  const M0Forms forms = m0_forms(p, psi);
  below("m0_dual_gap", forms.relative_gap, solver.dual_tolerance);
  const ExpMoment em = exp_moment(a, p, grid, opts, std::numeric_limits<double>::infinity());
  if (em.finite) below("exp_moment_gap", em.relative_gap, solver.dual_tolerance);
  else add("exp_moment_gap", std::numeric_limits<double>::infinity(), solver.dual_tolerance, false);
  below("u_identity", identity_Uequivalent_check(p, psi), 1e-4);

  const double mt = M_t(p, psi, xi0(p, grid));
  below("mt_vs_m0", std::abs(mt - forms.general) / forms.general, 1e-5);
  const double scaled = forms.general * std::exp(-2.0 * p.rate_integral()) / 2.0;
  add("m0_bounds", scaled, 1.0, scaled > 0.0 && scaled < 1.0);

  const bool constant = p.kernel.kind == KernelKind::Constant ||
                        (p.kernel.kind == KernelKind::Fractional && p.kernel.alpha == 1.0);
  if (constant) {
    const auto ode = oracle::heston_ode_solve(p, grid);
    double worst = 0.0;
    for (std::size_t n = 0; n < grid.size(); ++n) worst = std::max(worst, std::abs(psi.values[n] - ode.w[n]));
    below("heston_psi", worst, 1e-6);
    const double m0_ode = 2.0 * std::exp(2.0 * p.rate_integral() + ode.y.back() + p.V0 * ode.w.back() / p.kernel.c);
    below("heston_m0", std::abs(forms.general - m0_ode) / m0_ode, 1e-6);
  }
  return rows;
}

inline CommandResult cmd_validate(const RunConfig& cfg) {
  CommandResult out;
  ResultTable t = detail::make_table(cfg, "validate", "validate");
  t.label_column = "check";
  t.columns = {"residual", "tolerance", "pass"};
  bool all = true;
  for (const auto& v : detail::variants(cfg)) {
    for (const auto& r : validation_rows(v.params, v.label, cfg.solver)) {
      t.add_row(r.check, {r.residual, r.tolerance, r.pass ? 1.0 : 0.0});
      if (!r.pass) {
        all = false;
        std::ostringstream os;
        os << "check failed: " << r.check << " residual " << r.residual << " tolerance " << r.tolerance;
        out.warnings.push_back(os.str());
      }
    }
  }
  out.tables.push_back(std::move(t));
  if (!all) out.exit_code = kExitValidation;
  return out;
}

// ---------------------------------------------------------------- dispatch

struct CliOverrides {
  std::optional<std::string> config;
  std::optional<std::string> preset;
  std::optional<std::string> out;
  std::optional<OutputFormat> format;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
};

inline unsigned parse_threads(const std::string& s, const std::string& origin) {
  try {
    std::size_t used = 0;
    const unsigned long v = std::stoul(s, &used);
    if (used != s.size() || v == 0 || v > 4096) throw ConfigError("");
    return static_cast<unsigned>(v);
  } catch (const std::exception&) {
    throw ConfigError(origin + " must be a positive integer, got '" + s + "'");
  }
}

/// Flag over environment over config file; only the output directory and thread count read the environment.
inline RunConfig resolve_config(const std::string& command, const CliOverrides& o, const char* env_out,
                                const char* env_threads) {
  json j = json::object();
  if (o.config) {
    std::ifstream in(*o.config);
    if (!in) throw ConfigError("cannot open config file " + *o.config);
    std::ostringstream os;
    os << in.rdbuf();
    j = parse_json_text(os.str(), *o.config);
    if (!j.is_object()) throw ConfigError(*o.config + ": config must be a JSON object");
  }
  if (o.preset) {
    if (j.contains("preset") && j.at("preset") != *o.preset)
      throw ConfigError("--preset " + *o.preset + " conflicts with the preset in the config file");
    j["preset"] = *o.preset;
  }
  if (!o.config && !o.preset) {
    if (command != "validate") throw ConfigError(command + " needs --config or --preset");
    j["preset"] = "fig4";
  }
  RunConfig cfg = parse_config(j);
  if (o.out) cfg.output.dir = *o.out;
  else if (env_out && *env_out) cfg.output.dir = env_out;
  if (o.format) cfg.output.format = *o.format;
  if (o.threads) cfg.simulation.sim.threads = *o.threads;
  else if (env_threads && *env_threads) cfg.simulation.sim.threads = parse_threads(env_threads, "VHMV_THREADS");
  if (o.seed) {
    cfg.simulation.sim.seed = *o.seed;
    cfg.simulation.seed_given = true;
  }
  return cfg;
}

inline CommandResult run_on_config(const std::string& command, const RunConfig& cfg) {
  if (command == "psi") return cmd_psi(cfg);
  if (command == "strategy") return cmd_strategy(cfg);
  if (command == "frontier") return cmd_frontier(cfg);
  if (command == "simulate") return cmd_simulate(cfg);
  if (command == "validate") return cmd_validate(cfg);
  throw ConfigError("unknown command '" + command + "'");
}

/// Runs one command end to end, writes its tables and maps failures to exit codes.
inline int run_command(const std::string& command, const CliOverrides& o, std::ostream& log,
                       const char* env_out = std::getenv("VHMV_OUT"),
                       const char* env_threads = std::getenv("VHMV_THREADS")) {
  try {
    RunConfig cfg = resolve_config(command, o, env_out, env_threads);
    if (command == "simulate" && !cfg.simulation.seed_given) {
      std::random_device rd;
      cfg.simulation.sim.seed = (static_cast<std::uint64_t>(rd()) << 32) | rd();
      cfg.simulation.seed_given = true;
      log << "warning: no seed given; using generated seed " << cfg.simulation.sim.seed << '\n';
    }
    const CommandResult r = run_on_config(command, cfg);
    for (const auto& w : r.warnings) log << "warning: " << w << '\n';
    for (const auto& path : write_tables(r.tables, cfg.output.dir, cfg.output.format)) log << "wrote " << path << '\n';
    return r.exit_code;
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    log << "parameter error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ExplosionError& e) {
    log << "solver error: " << e.what() << "; blow-up time in (" << e.last_finite_time() << ", "
        << e.blow_up_time() << "]\n";
    return kExitNumeric;
  } catch (const NumericError& e) {
    log << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
}

}  // namespace vhmv
