#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rydyn/commands.hpp"
#include "rydyn/config.hpp"
#include "rydyn/errors.hpp"
#include "rydyn/io.hpp"

namespace {

void apply_override(rydyn::RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw rydyn::ConfigError("--set '" + assignment + "': expected section.key=value");
  cfg.set(assignment.substr(0, dot), assignment.substr(dot + 1, eq - dot - 1), assignment.substr(eq + 1));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rydberg gas kinetics, superradiant cascade and probe-scan fitting"};
  app.set_version_flag("--version", rydyn::tool_version());
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool plot = false;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "config file, or any output file with an embedded config");
  app.add_option("--out", out_dir, "output directory (overrides output.directory)");
  auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides run.seed)");
  app.add_flag("--plot", plot, "also write SVG plots");
  app.add_option("--set", overrides, "override one key, section.key=value (repeatable)");

  const std::vector<std::pair<std::string, std::string>> verbs = {
      {"scan", "two-photon detuning scan of trap loss and cascade counts"},
      {"probe-scan", "trap loss and probe counts against the probe rate R3"},
      {"cascade", "superradiant cascade: time series, steady state and transfer rate"},
      {"fit", "fit gamma and loss parameters to probe-scan datasets"},
      {"tables", "computed rates against the reference tables"},
      {"synth", "synthetic probe-scan dataset"},
  };
  for (const auto& [name, help] : verbs) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : rydyn::kExitConfig;
  }

  rydyn::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = rydyn::RunConfig::load(config_path);
    for (const auto& o : overrides) apply_override(cfg, o);
    if (!out_dir.empty()) cfg.set("output", "directory", out_dir);
    if (*seed_opt) cfg.set("run", "seed", std::to_string(seed));
    if (plot) cfg.set("output", "plot", "true");
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return rydyn::exit_code_for(e);
  }
  return rydyn::run_command(app.get_subcommands().front()->get_name(), cfg, std::cout, std::cerr);
}
