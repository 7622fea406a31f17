// Command-line front end: runs the experiment pipeline phase by phase or end
// to end from a JSON config.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "transferlab/errors.hpp"
#include "transferlab/experiment.hpp"
#include "transferlab/manifest.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<std::string> out_override;
  bool trace = false;
  int jobs = 1;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "Experiment config (JSON)")->required();
  cmd->add_option("--seed", opts.seed_override, "Override the config's root_seed");
  cmd->add_option("--out", opts.out_override, "Override the config's output_dir");
  cmd->add_flag("--trace", opts.trace, "Dump per-attack JSON-lines traces");
  cmd->add_option("--jobs", opts.jobs, "Worker threads (outputs do not depend on this)")
      ->check(CLI::PositiveNumber);
}

transferlab::ExperimentConfig resolve_config(const CommonOptions& opts) {
  transferlab::ExperimentConfig cfg = transferlab::load_config(opts.config_path);
  if (opts.seed_override) cfg.root_seed = *opts.seed_override;
  if (opts.out_override) cfg.output_dir = *opts.out_override;
  cfg.validate();
  return cfg;
}

void print_summary(const transferlab::MetricsReport& report) {
  for (const auto& grid : report.grids) {
    std::cout << "grid s" << grid.surrogate << "/e" << grid.ensemble << ": records "
              << grid.records_within_epsilon << "/" << grid.records_generated
              << " within budget, failures " << grid.attack_failures
              << ", mean E[T_T] = " << grid.targeted.mean_expectation
              << ", mean E[T_N] = " << grid.nontargeted.mean_expectation << "\n";
  }
  for (const auto& agreement : report.agreement) {
    std::cout << "agreement e" << agreement.ensemble << ": targeted overall "
              << agreement.targeted.overall << ", nontargeted overall "
              << agreement.nontargeted.overall << "\n";
  }
  for (const auto& cross : report.cross_family) {
    std::cout << "cross-family s" << cross.surrogate << ": pearson(targeted) "
              << (cross.pearson_targeted ? std::to_string(*cross.pearson_targeted) : "n/a")
              << ", pearson(nontargeted) "
              << (cross.pearson_nontargeted ? std::to_string(*cross.pearson_nontargeted) : "n/a")
              << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Boundary-traversal attacks and transferability measurement"};
  app.require_subcommand(1);

  CommonOptions opts;
  CLI::App* cmd_train = app.add_subcommand("train", "Train surrogate and target models");
  CLI::App* cmd_attack = app.add_subcommand("attack", "Generate perturbation sets");
  CLI::App* cmd_evaluate = app.add_subcommand("evaluate", "Evaluate transfer grids");
  CLI::App* cmd_report = app.add_subcommand("report", "Compute metrics and figures");
  CLI::App* cmd_run = app.add_subcommand("run", "All phases end to end");
  for (CLI::App* cmd : {cmd_train, cmd_attack, cmd_evaluate, cmd_report, cmd_run}) {
    add_common(cmd, opts);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const transferlab::ExperimentConfig cfg = resolve_config(opts);
    if (cmd_train->parsed()) {
      transferlab::phase_train(cfg, opts.jobs);
      std::cout << "models written to " << cfg.output_dir << "/models\n";
    } else if (cmd_attack->parsed()) {
      transferlab::phase_attack(cfg, opts.jobs, opts.trace);
      std::cout << "perturbations written to " << cfg.output_dir << "/perturbations\n";
    } else if (cmd_evaluate->parsed()) {
      transferlab::phase_evaluate(cfg, opts.jobs);
      std::cout << "grids written to " << cfg.output_dir << "/grids\n";
    } else if (cmd_report->parsed()) {
      print_summary(transferlab::phase_report(cfg));
      std::cout << "report written to " << cfg.output_dir << "/report.json\n";
    } else if (cmd_run->parsed()) {
      print_summary(transferlab::run_experiment(cfg, opts.jobs, opts.trace));
      const auto check = transferlab::verify_manifest(cfg.output_dir);
      if (!check.ok) {
        std::cerr << "manifest verification failed\n";
        return 1;
      }
      std::cout << "artifacts written to " << cfg.output_dir << "\n";
    }
  } catch (const transferlab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
