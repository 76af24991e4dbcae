// alarm-taxis-sim: runs simulations and studies, re-audits saved trajectories.

#include <CLI11.hpp>
#include <iostream>

#include "alarm_taxis/config.hpp"
#include "alarm_taxis/study.hpp"

using namespace alarm_taxis;

int main(int argc, char** argv) {
  CLI::App app{"Finite-volume simulator and audit harness for the alarm-taxis predator-prey system"};
  app.require_subcommand(1);

  std::string config_path, preset, output;
  bool quiet = false;
  auto* run_cmd = app.add_subcommand("run", "Run the study described by a config file or preset");
  run_cmd->add_option("config", config_path, "key = value configuration file");
  run_cmd->add_option("--preset", preset, "use a built-in preset instead of a file");
  run_cmd->add_option("--output", output, "output directory (overrides output.dir)");
  run_cmd->add_flag("--quiet", quiet, "suppress progress messages");

  std::string dir;
  auto* audit_cmd = app.add_subcommand("audit", "Re-run the bound audits on a saved run directory");
  audit_cmd->add_option("dir", dir, "run directory")->required();
  auto* res_cmd = app.add_subcommand("residuals", "Evaluate weak-form residuals of a saved run directory");
  res_cmd->add_option("dir", dir, "run directory")->required();

  std::string show;
  auto* presets_cmd = app.add_subcommand("presets", "List presets, or print one");
  presets_cmd->add_option("name", show, "preset to print");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfigError;
  }

  if (*presets_cmd) {
    try {
      if (show.empty())
        for (const auto& n : preset_names()) std::cout << n << '\n';
      else
        std::cout << preset_text(show);
    } catch (const ConfigError& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return kExitConfigError;
    }
    return kExitOk;
  }
  if (*audit_cmd) return audit_directory(dir, std::cout);
  if (*res_cmd) return residuals_directory(dir, std::cout);

  RunConfig cfg;
  try {
    if (!preset.empty() && !config_path.empty()) throw ConfigError("give either a config file or --preset, not both");
    if (!preset.empty())
      cfg = parse_config_text(preset_text(preset), "preset:" + preset);
    else if (!config_path.empty())
      cfg = parse_config(config_path);
    else
      throw ConfigError("run needs a config file or --preset");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }

  StudyOptions opts;
  opts.quiet = quiet;
  if (!output.empty()) opts.output_override = output;
  try {
    const StudyResult res = run_study(cfg, opts);
    if (!quiet) std::cerr << "status " << res.exit_code << ", artifacts in " << res.output_dir.string() << '\n';
    return res.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const SolverAbort& e) {
    std::cerr << "solver abort: " << e.what() << '\n';
    return kExitSolverAbort;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfigError;
  }
}
