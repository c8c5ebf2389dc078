#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "vhmv/commands.hpp"

namespace {

using namespace vhmv;
namespace fs = std::filesystem;

const std::string kConfigs = VHMV_CONFIG_DIR;

RunConfig parse(const std::string& text) { return parse_config(json::parse(text)); }

void expect_config_error(const std::string& text, const std::string& fragment) {
  try {
    parse(text);
    ADD_FAILURE() << "accepted: " << text;
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

const char* kModel = R"("model": {"V0": 0.04, "kappa": 0.1, "phi": 0.3, "sigma": 0.03, "rho": -0.7,
                                  "theta": 0.6, "T": 1, "x0": 1, "rate": 0.03, "c": 1.2})";

std::string with_model(const std::string& rest = "") {
  return "{" + std::string(kModel) + (rest.empty() ? "" : ", " + rest) + "}";
}

class TempDir {
public:
  TempDir() {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    path_ = fs::temp_directory_path() / (std::string("vhmv_cli_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(file(name)) << text;
    return file(name);
  }

private:
  fs::path path_;
};

struct RunResult {
  int code;
  std::string log;
};

RunResult run(const std::string& command, CliOverrides o, const char* env_out = nullptr, const char* env_threads = nullptr) {
  std::ostringstream log;
  const int code = run_command(command, o, log, env_out, env_threads);
  return {code, log.str()};
}

ResultTable load(const std::string& path) {
  std::ifstream in(path);
  EXPECT_TRUE(in.good()) << path;
  return read_csv(in, fs::path(path).stem().string());
}

std::string bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// ---------------------------------------------------------------- config parsing

TEST(Config, MinimalModelGetsDefaults) {
  const RunConfig cfg = parse(with_model());
  EXPECT_EQ(cfg.solver.steps, 500u);
  EXPECT_EQ(cfg.model.kernel.kind, KernelKind::Fractional);
  EXPECT_EQ(cfg.experiment.alphas, std::vector<double>{0.6});
  EXPECT_TRUE(cfg.target_given);
  EXPECT_FALSE(cfg.simulation.seed_given);
  EXPECT_EQ(cfg.output.format, OutputFormat::Csv);
  EXPECT_DOUBLE_EQ(cfg.model.rate(0.5), 0.03);
}

TEST(Config, UnknownKeysRejectedEverywhere) {
  expect_config_error(R"({"modle": {}})", "unknown key 'modle'");
  expect_config_error(with_model(R"("solver": {"step": 10})"), "unknown key 'step' in solver");
  expect_config_error(with_model(R"("kernel": {"type": "fractional", "H": 0.1})"), "unknown key 'H' in kernel");
  expect_config_error(with_model(R"("simulation": {"paths": 10})"), "unknown key 'paths'");
  expect_config_error(with_model(R"("experiment": {"strategy": {"W": 1}})"), "experiment.strategy");
  expect_config_error(with_model(R"("output": {"directory": "x"})"), "unknown key 'directory'");
  expect_config_error(R"({"preset": "fig4", "model": {"vol": 1}})", "unknown key 'vol' in model");
}

TEST(Config, ModelParametersHaveNoDefaults) {
  expect_config_error(R"({"model": {"V0": 0.04}})", "model.kappa is required");
  expect_config_error(R"({"solver": {"steps": 10}})", "model block or a preset");
}

TEST(Config, TypesAndRangesChecked) {
  expect_config_error(R"({"preset": "fig4", "model": {"sigma": "0.3"}})", "model.sigma must be a number");
  expect_config_error(R"({"preset": "fig4", "solver": {"steps": -5}})", "nonnegative integer");
  expect_config_error(R"({"preset": "fig4", "solver": {"steps": 2.5}})", "nonnegative integer");
  expect_config_error(R"({"preset": "fig4", "solver": {"steps": 0}})", "solver.steps must be positive");
  expect_config_error(R"({"preset": "fig4", "model": {"rho": 1.5}})", "rho");
  expect_config_error(R"({"preset": "fig4", "kernel": {"alpha": 0.4}})", "alpha");
  expect_config_error(R"({"preset": "fig4", "kernel": {"type": "power"}})", "kernel.type");
  expect_config_error(R"({"preset": "fig4", "kernel": {"type": "constant", "alpha": 0.6}})", "fractional kernel only");
  expect_config_error(R"({"preset": "fig4", "simulation": {"scheme": "milstein"}})", "simulation.scheme");
  expect_config_error(R"({"preset": "fig4", "simulation": {"level": 1.5}})", "simulation.level");
  expect_config_error(R"({"preset": "fig4", "output": {"format": "xml"}})", "csv or json");
  expect_config_error(R"({"preset": "fig4", "model": {"rate": {"knots": [0.1], "values": [0.02]}}})", "t = 0");
  expect_config_error(R"({"preset": "fig4", "experiment": {"alphas": [0.5]}})", "(0.5, 1]");
  expect_config_error(R"({"preset": "fig4", "kernel": {"type": "constant"}, "experiment": {"alphas": [0.6]}})",
                      "fractional kernel only");
}

TEST(Config, PresetsAndOverlay) {
  const RunConfig fig4 = parse(R"({"preset": "fig4"})");
  EXPECT_EQ(fig4.experiment.alphas, presets::fig4_alpha_grid());
  EXPECT_EQ(fig4.model.theta, 0.6);

  const RunConfig tweaked = parse(R"({"preset": "fig4", "model": {"sigma": 0.5}})");
  EXPECT_EQ(tweaked.model.sigma, 0.5);
  EXPECT_EQ(tweaked.model.kappa, 0.1);

  const RunConfig heston = parse(R"({"preset": "fig4", "kernel": {"type": "constant"}})");
  EXPECT_TRUE(heston.experiment.alphas.empty());

  const RunConfig single = parse(R"({"preset": "fig1a", "kernel": {"alpha": 0.8}})");
  EXPECT_EQ(single.experiment.alphas, std::vector<double>{0.8});

  const RunConfig fig2 = parse(R"({"preset": "fig2-big-sigma"})");
  EXPECT_EQ(fig2.model.sigma, 3.0);
  EXPECT_EQ(*fig2.experiment.strategy.V, 0.5);
  EXPECT_EQ(*fig2.experiment.strategy.X, 1.0);

  expect_config_error(R"({"preset": "fig9"})", "fig2-small-sigma");
  expect_config_error(R"({"preset": "fig3"})", "configs/fig3-example.json");
  expect_config_error(R"({"preset": "fig3", "model": {"V0": 0.02}})", "is required");
}

TEST(Config, Investors) {
  const RunConfig cfg = parse(with_model(
      R"("experiment": {"investors": [{"name": "rough"}, {"name": "smooth", "kernel": {"alpha": 1.0}, "model": {"sigma": 0.1}}]})"));
  ASSERT_EQ(cfg.experiment.investors.size(), 2u);
  EXPECT_EQ(cfg.experiment.investors[0].model.kernel.alpha, 0.6);
  EXPECT_EQ(cfg.experiment.investors[1].model.kernel.alpha, 1.0);
  EXPECT_EQ(cfg.experiment.investors[1].model.sigma, 0.1);
  EXPECT_EQ(cfg.experiment.investors[1].model.kappa, 0.1);
  expect_config_error(with_model(R"("experiment": {"investors": [{"name": "a"}, {"name": "a"}]})"), "duplicate");
  expect_config_error(with_model(R"("experiment": {"investors": [{"name": "a b"}]})"), "letters");
  expect_config_error(with_model(R"("experiment": {"investors": []})"), "nonempty");
}

TEST(Config, ShippedConfigsParse) {
  for (const auto& entry : fs::directory_iterator(kConfigs)) {
    if (entry.path().extension() != ".json") continue;
    EXPECT_NO_THROW(load_config(entry.path().string())) << entry.path();
  }
  const RunConfig fig3 = load_config(kConfigs + "/fig3-example.json");
  EXPECT_EQ(fig3.simulation.sim.n_paths, 3000u);
  EXPECT_EQ(fig3.simulation.sim.n_steps, 250u);
  EXPECT_EQ(fig3.model.kernel.alpha, 0.6);
}

TEST(Config, MalformedJsonIsConfigError) {
  EXPECT_THROW(parse_json_text("{\"model\": ", "inline"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(ParamsHash, StableAndSensitive) {
  const RunConfig a = parse(with_model());
  RunConfig b = a;
  b.output.dir = "elsewhere";
  b.output.format = OutputFormat::Json;
  b.simulation.sim.threads = 4;
  b.simulation.sim.seed = 99;
  EXPECT_EQ(params_hash(a), params_hash(b));
  EXPECT_EQ(params_hash(a).size(), 16u);
  RunConfig c = a;
  c.model.sigma = 0.0300000001;
  EXPECT_NE(params_hash(a), params_hash(c));
  RunConfig d = a;
  d.experiment.alphas = {0.7};
  EXPECT_NE(params_hash(a), params_hash(d));
}

// ---------------------------------------------------------------- tables

TEST(Table, CsvRoundTripIsBitIdentical) {
  ResultTable t;
  t.name = "values";
  t.columns = {"a", "b", "c"};
  t.metadata = {{"command", "test"}, {"seed", "1"}};
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  for (int i = 0; i < 500; ++i) t.add_row({std::exp(u(rng)), -std::exp(u(rng)) / 3.0, u(rng)});
  t.add_row({std::numeric_limits<double>::denorm_min(), std::numeric_limits<double>::max(), -0.0});
  t.add_row({std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity()});
  t.add_row({0.1, 1.0 / 3.0, 2.0 / 3.0});
  std::stringstream ss;
  write_csv(ss, t);
  const ResultTable back = read_csv(ss, "values");
  EXPECT_EQ(back.columns, t.columns);
  EXPECT_EQ(back.metadata, t.metadata);
  ASSERT_EQ(back.data.size(), t.data.size());
  for (std::size_t i = 0; i < t.data.size(); ++i) {
    if (std::isnan(t.data[i])) {
      EXPECT_TRUE(std::isnan(back.data[i]));
    } else {
      EXPECT_EQ(std::memcmp(&back.data[i], &t.data[i], sizeof(double)), 0) << i;
    }
  }
}

TEST(Table, LabelsRoundTrip) {
  ResultTable t;
  t.name = "checks";
  t.label_column = "check";
  t.columns = {"residual", "pass"};
  t.add_row("alpha_0.6/m0_dual_gap", {1e-7, 1.0});
  t.add_row("alpha_1/heston_psi", {2e-9, 1.0});
  std::stringstream ss;
  write_csv(ss, t);
  const ResultTable back = read_csv(ss);
  EXPECT_EQ(back.label_column, "check");
  EXPECT_EQ(back.labels, t.labels);
  EXPECT_EQ(back.data, t.data);
  EXPECT_THROW(t.add_row({1.0, 2.0}), DomainError);
  EXPECT_THROW(t.add_row("bad,label", {1.0}), DomainError);
}

TEST(Table, RejectsRaggedRows) {
  std::stringstream ss("a,b\n1,2\n3\n");
  EXPECT_THROW(read_csv(ss), ConfigError);
  std::stringstream bad("a\nx1\n");
  EXPECT_THROW(read_csv(bad), ConfigError);
}

TEST(Table, JsonHasNullForNonFinite) {
  ResultTable t;
  t.name = "j";
  t.columns = {"x"};
  t.add_row({std::numeric_limits<double>::quiet_NaN()});
  t.add_row({0.25});
  const json j = to_json(t);
  EXPECT_TRUE(j["rows"][0][0].is_null());
  EXPECT_EQ(j["rows"][1][0].get<double>(), 0.25);
}

// ---------------------------------------------------------------- commands

bool has_metadata(const ResultTable& t) {
  return !t.meta("params_hash").empty() && !t.meta("seed").empty() && t.meta("version") == VHMV_VERSION;
}

TEST(CmdPsi, ThetaZeroGivesZeroColumns) {
  RunConfig cfg = parse(R"({"preset": "fig1a", "model": {"theta": 0}})");
  const auto r = cmd_psi(cfg);
  const ResultTable& t = r.tables.at(0);
  ASSERT_EQ(t.columns.size(), 6u);
  for (std::size_t c = 1; c < t.columns.size(); ++c)
    for (double v : t.column(t.columns[c])) EXPECT_EQ(v, 0.0);
}

TEST(CmdPsi, Fig1aAllNegative) {
  const auto r = cmd_psi(parse(R"({"preset": "fig1a"})"));
  const ResultTable& t = r.tables.at(0);
  EXPECT_TRUE(has_metadata(t));
  EXPECT_EQ(t.columns.front(), "t");
  EXPECT_EQ(t.columns[1], "psi_alpha_0.6");
  for (std::size_t row = 1; row < t.rows(); ++row)
    for (std::size_t c = 1; c < t.columns.size(); ++c) EXPECT_LT(t.at(row, c), 0.0);
}

TEST(CmdPsi, Fig1bNotMonotoneInAlpha) {
  const auto r = cmd_psi(parse(R"({"preset": "fig1b"})"));
  const ResultTable& t = r.tables.at(0);
  const std::size_t cols = t.columns.size();
  auto increasing = [&](std::size_t row) {
    for (std::size_t c = 2; c < cols; ++c)
      if (!(t.at(row, c) > t.at(row, c - 1))) return false;
    return true;
  };
  auto decreasing = [&](std::size_t row) {
    for (std::size_t c = 2; c < cols; ++c)
      if (!(t.at(row, c) < t.at(row, c - 1))) return false;
    return true;
  };
  EXPECT_TRUE(increasing(1));
  EXPECT_TRUE(decreasing(t.rows() - 1));
  std::size_t mixed = 0;
  for (std::size_t row = 1; row < t.rows(); ++row) mixed += !increasing(row) && !decreasing(row);
  EXPECT_GT(mixed, 0u);
}

TEST(CmdStrategy, RisklessTargetGivesZeroControl) {
  RunConfig cfg = parse(R"({"preset": "fig4"})");
  cfg.model.c = cfg.model.riskless_terminal();
  const auto r = cmd_strategy(cfg);
  const ResultTable& t = r.tables.at(0);
  for (const auto& name : t.columns) {
    if (name.rfind("u_", 0) != 0) continue;
    for (double v : t.column(name)) EXPECT_NEAR(v, 0.0, 1e-14);
  }
}

TEST(CmdStrategy, InfeasibleTargetIsConfigExit) {
  TempDir dir;
  const std::string path = dir.write("low.json", R"({"preset": "fig4", "model": {"c": 0.5}})");
  const RunResult r = run("strategy", {.config = path, .out = dir.str()});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.log.find("riskless"), std::string::npos) << r.log;
}

TEST(CmdStrategy, NeedsTarget) {
  EXPECT_THROW(cmd_strategy(parse(R"({"model": {"V0": 0.04, "kappa": 0.1, "phi": 0.3, "sigma": 0.03, "rho": -0.7,
      "theta": 0.6, "T": 1, "x0": 1, "rate": 0.03}})")),
               ConfigError);
}

TEST(CmdStrategy, PointsAndStateOverride) {
  RunConfig cfg = parse(R"({"preset": "fig2-small-sigma", "experiment": {"strategy": {"points": 11}}})");
  const auto r = cmd_strategy(cfg);
  const ResultTable& t = r.tables.at(0);
  EXPECT_EQ(t.rows(), 11u);
  EXPECT_EQ(t.meta("V"), "0.5");
  EXPECT_DOUBLE_EQ(t.at(10, 0), 1.35);
}

TEST(CmdFrontier, ZeroRowAndQuadraticRatio) {
  RunConfig cfg = parse(R"({"preset": "fig4"})");
  const double floor = cfg.model.riskless_terminal();
  cfg.experiment.c_grid = {floor, 1.1, 1.2, 1.4};
  const auto r = cmd_frontier(cfg);
  const ResultTable& f = r.tables.at(0);
  ASSERT_EQ(r.tables.size(), 2u);
  for (std::size_t c = 1; c < f.columns.size(); ++c) {
    const double v = f.at(0, c);
    if (f.columns[c].rfind("ratio_", 0) == 0) EXPECT_TRUE(std::isnan(v));
    else EXPECT_EQ(v, 0.0);
  }
  for (const double a : cfg.experiment.alphas) {
    const auto ratio = f.column("ratio_alpha_" + detail::short_number(a));
    for (std::size_t i = 2; i < ratio.size(); ++i) EXPECT_NEAR(ratio[i] / ratio[1], 1.0, 1e-12);
  }
  const ResultTable& m = r.tables.at(1);
  EXPECT_EQ(m.label_column, "variant");
  for (double gap : m.column("relative_gap")) EXPECT_LE(gap, 1e-5);
}

TEST(CmdFrontier, VarianceIncreasesWithAlpha) {
  const auto r = cmd_frontier(parse(R"({"preset": "fig4"})"));
  const ResultTable& f = r.tables.at(0);
  EXPECT_EQ(f.rows(), 50u);
  for (std::size_t row = 0; row < f.rows(); ++row)
    for (std::size_t c = 2; c <= 6; ++c) EXPECT_GT(f.at(row, c), f.at(row, c - 1)) << row << " " << f.columns[c];
}

TEST(CmdSimulate, ZeroControlKeepsRisklessWealth) {
  RunConfig cfg = parse(R"({"preset": "fig4", "experiment": {"zero_control": true},
                            "simulation": {"n_paths": 200, "n_steps": 50, "seed": 3, "bootstrap_resamples": 50}})");
  const auto r = cmd_simulate(cfg);
  const ResultTable& paths = r.tables.at(1);
  const double riskless = cfg.model.riskless_terminal();
  for (std::size_t c = 1; c <= 10; ++c) EXPECT_NEAR(paths.at(paths.rows() - 1, c), riskless, 1e-13);
  const ResultTable& val = r.tables.back();
  ASSERT_EQ(val.labels.front(), "investor/riskless_terminal");
  EXPECT_EQ(val.at(0, val.index("pass")), 1.0);
}

TEST(CmdSimulate, ClosureRowsAndMetadata) {
  RunConfig cfg = parse(R"({"preset": "fig4",
                            "simulation": {"n_paths": 400, "n_steps": 100, "seed": 11, "bootstrap_resamples": 200}})");
  const auto r = cmd_simulate(cfg);
  ASSERT_EQ(r.tables.size(), 3u);
  EXPECT_EQ(r.tables[0].name, "investor_bands");
  EXPECT_EQ(r.tables[1].name, "investor_paths");
  const ResultTable& val = r.tables[2];
  for (const auto& t : r.tables) {
    EXPECT_TRUE(has_metadata(t));
    EXPECT_EQ(t.meta("seed"), "11");
  }
  for (std::size_t row = 0; row < val.rows(); ++row) EXPECT_EQ(val.at(row, val.index("pass")), 1.0) << val.labels[row];
  const auto& bands = r.tables[0];
  EXPECT_EQ(bands.at(0, bands.index("X_mean")), 1.0);
  EXPECT_NEAR(bands.at(bands.rows() - 1, bands.index("M_mean")), 2.0, 0.0);
}

TEST(CmdSimulate, MissingSeedIsGeneratedAndRecorded) {
  TempDir dir;
  const std::string path =
      dir.write("s.json", R"({"preset": "fig4", "simulation": {"n_paths": 20, "n_steps": 20, "bootstrap_resamples": 20}})");
  const RunResult r = run("simulate", {.config = path, .out = dir.str()});
  ASSERT_EQ(r.code, kExitOk) << r.log;
  EXPECT_NE(r.log.find("generated seed"), std::string::npos);
  const ResultTable t = load(dir.file("validation.csv"));
  EXPECT_NE(t.meta("seed"), "none");
  EXPECT_FALSE(t.meta("seed").empty());
}

TEST(CmdSimulate, ByteIdenticalAcrossRunsAndThreads) {
  TempDir dir;
  const std::string path = dir.write(
      "s.json", R"({"preset": "fig4", "experiment": {"investors": [{"name": "rough"}, {"name": "smooth", "kernel": {"alpha": 1}}]},
                   "simulation": {"n_paths": 100, "n_steps": 50, "seed": 8, "bootstrap_resamples": 100}})");
  ASSERT_EQ(run("simulate", {.config = path, .out = dir.file("a"), .threads = 1u}).code, kExitOk);
  ASSERT_EQ(run("simulate", {.config = path, .out = dir.file("b"), .threads = 3u}).code, kExitOk);
  for (const char* name : {"rough_bands.csv", "rough_paths.csv", "smooth_bands.csv", "smooth_paths.csv", "validation.csv"}) {
    const std::string a = bytes(dir.file(std::string("a/") + name));
    EXPECT_FALSE(a.empty()) << name;
    EXPECT_EQ(a, bytes(dir.file(std::string("b/") + name))) << name;
  }
}

TEST(CmdValidate, DefaultPasses) {
  TempDir dir;
  const RunResult r = run("validate", {.out = dir.str()});
  EXPECT_EQ(r.code, kExitOk) << r.log;
  const ResultTable t = load(dir.file("validate.csv"));
  EXPECT_EQ(t.meta("preset"), "fig4");
  EXPECT_GE(t.rows(), 6u * 9u);
  for (double p : t.column("pass")) EXPECT_EQ(p, 1.0);
}

TEST(CmdValidate, CoarseGridFails) {
  TempDir dir;
  const RunResult r = run("validate", {.config = kConfigs + "/coarse-grid.json", .out = dir.str()});
  EXPECT_EQ(r.code, kExitValidation);
  EXPECT_NE(r.log.find("check failed"), std::string::npos);
  const ResultTable t = load(dir.file("validate.csv"));
  std::size_t failed = 0;
  for (double p : t.column("pass")) failed += p == 0.0;
  EXPECT_GT(failed, 0u);
}

TEST(CmdValidate, ConstantKernelHasHestonRows) {
  const auto r = cmd_validate(parse(R"({"preset": "fig4", "kernel": {"type": "constant"}})"));
  const ResultTable& t = r.tables.at(0);
  EXPECT_EQ(r.exit_code, kExitOk);
  int heston = 0;
  for (std::size_t row = 0; row < t.rows(); ++row) {
    if (t.labels[row].find("heston") == std::string::npos) continue;
    ++heston;
    EXPECT_EQ(t.at(row, t.index("pass")), 1.0);
  }
  EXPECT_EQ(heston, 2);
}

// ---------------------------------------------------------------- dispatch and exit codes

TEST(ExitCodes, ConfigErrorIsOne) {
  TempDir dir;
  const std::string path = dir.write("bad.json", R"({"preset": "fig4", "extra": 1})");
  const RunResult r = run("psi", {.config = path, .out = dir.str()});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.log.find("unknown key 'extra'"), std::string::npos);
  EXPECT_EQ(run("psi", {.out = dir.str()}).code, kExitConfig);
  EXPECT_EQ(run("psi", {.preset = "nope", .out = dir.str()}).code, kExitConfig);
}

TEST(ExitCodes, ExplosionIsTwoWithBlowUpTime) {
  TempDir dir;
  const std::string path = dir.write(
      "boom.json", R"({"preset": "fig1a", "model": {"rho": -0.95, "sigma": 3, "theta": 5}, "experiment": {"alphas": [0.6]}})");
  const RunResult r = run("psi", {.config = path, .out = dir.str()});
  EXPECT_EQ(r.code, kExitNumeric);
  EXPECT_NE(r.log.find("blow-up time in ("), std::string::npos) << r.log;
}

TEST(ExitCodes, PresetFlagConflictsWithFile) {
  TempDir dir;
  const std::string path = dir.write("p.json", R"({"preset": "fig4"})");
  EXPECT_EQ(run("psi", {.config = path, .preset = "fig1a", .out = dir.str()}).code, kExitConfig);
  EXPECT_EQ(run("psi", {.config = path, .preset = "fig4", .out = dir.str()}).code, kExitOk);
}

TEST(Overrides, FlagBeatsEnvBeatsConfig) {
  TempDir dir;
  const std::string path = dir.write("o.json", R"({"preset": "fig1a", "output": {"dir": ")" + dir.file("cfg") + R"("}})");
  const std::string env = dir.file("env");
  ASSERT_EQ(run("psi", {.config = path}).code, kExitOk);
  EXPECT_TRUE(fs::exists(dir.file("cfg/psi.csv")));
  ASSERT_EQ(run("psi", {.config = path}, env.c_str()).code, kExitOk);
  EXPECT_TRUE(fs::exists(dir.file("env/psi.csv")));
  ASSERT_EQ(run("psi", {.config = path, .out = dir.file("flag")}, env.c_str()).code, kExitOk);
  EXPECT_TRUE(fs::exists(dir.file("flag/psi.csv")));

  const RunConfig t = resolve_config("simulate", {.config = path}, nullptr, "3");
  EXPECT_EQ(t.simulation.sim.threads, 3u);
  const RunConfig f = resolve_config("simulate", {.config = path, .threads = 2u}, nullptr, "3");
  EXPECT_EQ(f.simulation.sim.threads, 2u);
  EXPECT_EQ(run("psi", {.config = path}, nullptr, "zero").code, kExitConfig);
}

TEST(Overrides, JsonFormatWritesJson) {
  TempDir dir;
  ASSERT_EQ(run("psi", {.preset = "fig1a", .out = dir.str(), .format = OutputFormat::Json}).code, kExitOk);
  std::ifstream in(dir.file("psi.json"));
  const json j = json::parse(in);
  EXPECT_EQ(j["columns"][0], "t");
  EXPECT_EQ(j["metadata"]["command"], "psi");
  EXPECT_EQ(j["rows"].size(), 501u);
}

TEST(Output, EmittedCsvReparsesToSameValues) {
  const auto r = cmd_frontier(parse(R"({"preset": "fig4"})"));
  for (const auto& t : r.tables) {
    std::stringstream ss;
    write_csv(ss, t);
    const ResultTable back = read_csv(ss, t.name);
    ASSERT_EQ(back.data.size(), t.data.size());
    for (std::size_t i = 0; i < t.data.size(); ++i) {
      if (std::isnan(t.data[i])) EXPECT_TRUE(std::isnan(back.data[i]));
      else EXPECT_EQ(back.data[i], t.data[i]);
    }
    EXPECT_EQ(back.metadata, t.metadata);
  }
}

}  // namespace
