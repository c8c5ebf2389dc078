#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "vhmv/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mean-variance investment under Volterra Heston volatility", "vhmv"};
  app.set_version_flag("--version", VHMV_VERSION);
  app.require_subcommand(1);

  std::string config, preset, out, format;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  app.add_option("--config", config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--preset", preset, "named figure preset (fig1a, fig1b, fig2-small-sigma, fig2-big-sigma, fig4, fig3)");
  app.add_option("--out", out, "output directory (env VHMV_OUT)");
  app.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--seed", seed, "random seed for simulate");
  app.add_option("--threads", threads, "worker threads for path simulation (env VHMV_THREADS)")
      ->check(CLI::Range(1u, 4096u));

  const char* help[] = {"psi for each alpha", "optimal strategy u* for each alpha",
                        "efficient frontier and M0 for each alpha", "Monte Carlo paths, bands and closed-form checks",
                        "invariant battery with residuals"};
  for (std::size_t i = 0; i < vhmv::command_names().size(); ++i) {
    app.add_subcommand(vhmv::command_names()[i], help[i])->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return vhmv::kExitConfig;
  }

  vhmv::CliOverrides o;
  if (app.count("--config")) o.config = config;
  if (app.count("--preset")) o.preset = preset;
  if (app.count("--out")) o.out = out;
  if (app.count("--format")) o.format = vhmv::parse_format(format);
  if (app.count("--seed")) o.seed = seed;
  if (app.count("--threads")) o.threads = threads;
  const std::string command = app.get_subcommands().front()->get_name();
  return vhmv::run_command(command, o, std::cerr);
}
