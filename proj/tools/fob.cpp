// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "fob/cli/commands.hpp"

namespace {

std::string self_path(const char* argv0) {
  std::error_code ec;
  auto p = std::filesystem::read_symlink("/proc/self/exe", ec);
  if (!ec) return p.string();
  return std::filesystem::absolute(argv0).string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fob: optimizer benchmark runner"};
  app.require_subcommand(1);

  std::string file;
  fob::cli::RunFlags run_flags;
  std::int64_t run_index = -1, stop_after = -1;
  auto* run = app.add_subcommand("run", "train every run of an experiment file");
  run->add_option("experiment", file, "experiment YAML")->required();
  run->add_option("--workers", run_flags.workers, "concurrent runs")->default_val(1);
  auto* idx = run->add_option("--run-index", run_index, "execute only this run (0-based)");
  run->add_flag("--dry-run", run_flags.dry_run, "print the run table and exit");
  auto* stop = run->add_option("--stop-after-epoch", stop_after,
                               "stop every run once this epoch is checkpointed");

  auto* resume = app.add_subcommand("resume", "continue interrupted runs");
  resume->add_option("experiment", file, "experiment YAML")->required();

  auto* plot = app.add_subcommand("plot", "rebuild tables and heatmaps from stored results");
  plot->add_option("target", file, "experiment YAML or experiment output directory")->required();

  auto* list = app.add_subcommand("list", "show run status below an output directory");
  list->add_option("dir", file, "output or experiment directory")->default_val("outputs");

  auto* hpo = app.add_subcommand("hpo", "random search with Hyperband over epoch budgets");
  hpo->add_option("hpo_file", file, "hpo YAML")->required();

  fob::cli::SlurmFlags slurm_flags;
  auto* slurm = app.add_subcommand("slurm-script", "print a SLURM array job for the grid");
  slurm->add_option("experiment", file, "experiment YAML")->required();
  slurm->add_option("--partition", slurm_flags.partition, "SLURM partition");
  slurm->add_option("--time", slurm_flags.time, "SLURM time limit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : fob::cli::kConfigError;
  }

  fob::cli::Console con{std::cout, std::cerr, {}};
  if (*run) {
    if (*idx) run_flags.run_index = run_index;
    if (*stop) run_flags.stop_after_epoch = stop_after;
    return fob::cli::cmd_run(file, run_flags, con);
  }
  if (*resume) return fob::cli::cmd_resume(file, con);
  if (*plot) return fob::cli::cmd_plot(file, con);
  if (*list) return fob::cli::cmd_list(file, con);
  if (*hpo) return fob::cli::cmd_hpo(file, con);
  if (*slurm) {
    slurm_flags.exe = self_path(argv[0]);
    return fob::cli::cmd_slurm_script(file, slurm_flags, con);
  }
  return fob::cli::kConfigError;
}
