// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fob/config.hpp"
#include "fob/engine/engine.hpp"
#include "fob/evaluation/report.hpp"
#include "fob/hpo/hpo_file.hpp"

namespace fob::cli {

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kConfigError = 2 };

/// Output sinks; writes go through `line` so concurrent runs never
/// interleave within a line.
struct Console {
  std::ostream& out;
  std::ostream& err;
  std::mutex mu;

  void line(const std::string& s) {
    std::lock_guard lock(mu);
    out << s << '\n' << std::flush;
  }
  void error(const std::string& s) {
    std::lock_guard lock(mu);
    err << "error: " << s << '\n' << std::flush;
  }
};

/// Runs `fn`, mapping library errors onto exit codes.
template <class F>
int guarded(Console& con, F&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    con.error(e.what());
    return kConfigError;
  } catch (const Error& e) {
    con.error(e.what());
    return kRuntimeFailure;
  } catch (const std::exception& e) {
    con.error(e.what());
    return kRuntimeFailure;
  }
}

struct RunFlags {
  std::int64_t workers = 1;
  std::optional<std::int64_t> run_index;
  bool dry_run = false;
  std::optional<std::int64_t> stop_after_epoch;
};

struct SlurmFlags {
  std::string partition;
  std::string time;
  std::string exe = "fob";
};

struct Experiment {
  std::filesystem::path file;
  ExperimentSpec spec;
  std::vector<ResolvedRunConfig> runs;
  PlotSettings plots;

  /// `<output_dir>/<experiment_name>`.
  std::filesystem::path dir() const {
    return std::filesystem::path(spec.root.at_path("engine.output_dir")->as_string()) /
           spec.root.at_path("engine.experiment_name")->as_string();
  }
};

/// Parses, expands and validates every run of an experiment file.
inline Experiment open_experiment(const std::filesystem::path& file) {
  Experiment e;
  e.file = file;
  e.spec = load_experiment_file(file);
  e.runs = expand_grid(e.spec);
  for (const auto& rc : e.runs) validate_run(rc);
  e.plots = plot_settings(e.spec.evaluation());
  return e;
}

/// Leaves that differ between runs, in path order.
inline std::vector<std::string> varying_keys(const std::vector<ResolvedRunConfig>& runs) {
  std::map<std::string, std::set<std::string>> seen;
  std::set<std::string> paths;
  for (const auto& rc : runs) {
    std::vector<std::pair<std::string, Node>> flat;
    flatten(identity_tree(rc), flat);
    for (const auto& [k, v] : flat) {
      seen[k].insert(canonical_json(v));
      paths.insert(k);
    }
  }
  std::vector<std::string> out;
  for (const auto& p : paths) {
    if (seen[p].size() > 1) out.push_back(p);
  }
  return out;
}

inline std::string run_table(const std::vector<ResolvedRunConfig>& runs) {
  const auto keys = varying_keys(runs);
  std::ostringstream s;
  s << "index\trun_id\toverrides\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    s << i << '\t' << run_id(runs[i]) << '\t';
    bool first = true;
    for (const auto& k : keys) {
      const Node* v = runs[i].root.at_path(k);
      if (!v) continue;
      s << (first ? "" : " ") << k << '=' << scalar_text(*v);
      first = false;
    }
    if (first) s << '-';
    s << '\n';
  }
  return s.str();
}

namespace detail {

inline std::string describe(const RunResult& r) {
  std::ostringstream s;
  s << to_string(r.status) << " epochs=" << r.history.size();
  if (r.best_val) s << " best_val=" << format_double(r.best_val->value) << "@" << r.best_val->epoch;
  if (r.test_best) s << " test_best=" << format_double(*r.test_best);
  if (r.test_last) s << " test_last=" << format_double(*r.test_last);
  if (!r.error.empty()) s << " (" << r.error << ")";
  return s.str();
}

inline bool is_cached(const ResolvedRunConfig& rc) {
  auto r = load_result(RunPaths{run_directory(rc)}.result());
  return r && r->run_id == run_id(rc) && r->status == RunStatus::completed;
}

// Exit code of one run: 0 completed, 1 otherwise.
inline int execute(Console& con, const ResolvedRunConfig& rc, std::size_t index, std::size_t total,
                   const TrainOptions& opts) {
  const std::string tag = "[" + std::to_string(index) + "/" + std::to_string(total) + "] " +
                          run_id(rc) + " ";
  return guarded(con, [&] {
    const bool cached = is_cached(rc);
    RunResult r = train_run(rc, run_directory(rc), opts);
    con.line(tag + (cached ? "cached " : "") + describe(r));
    if (r.status == RunStatus::completed) return int(kOk);
    if (r.status == RunStatus::incomplete && opts.stop_after_epoch) return int(kOk);
    return int(kRuntimeFailure);
  });
}

inline std::optional<std::int64_t> env_run_index() {
  const char* v = std::getenv("SLURM_ARRAY_TASK_ID");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  const long long k = std::strtoll(v, &end, 10);
  if (*end != '\0') throw BadParameter(std::string("SLURM_ARRAY_TASK_ID is not an integer: ") + v);
  return k;
}

inline int report(Console& con, const Experiment& e) {
  auto entries = collect_results(e.runs);
  auto rep = write_report(entries, e.plots, e.dir());
  for (const auto& p : rep.written) con.line("wrote " + p.string());
  return int(kOk);
}

}  // namespace detail

inline int cmd_run(const std::filesystem::path& file, const RunFlags& flags, Console& con) {
  return guarded(con, [&] {
    Experiment e = open_experiment(file);
    if (flags.dry_run) {
      con.out << run_table(e.runs) << std::flush;
      return int(kOk);
    }
    if (flags.workers < 1) throw BadParameter("--workers must be >= 1");
    TrainOptions opts;
    opts.stop_after_epoch = flags.stop_after_epoch;
    std::optional<std::int64_t> index = flags.run_index ? flags.run_index : detail::env_run_index();
    if (index) {
      if (*index < 0 || *index >= static_cast<std::int64_t>(e.runs.size()))
        throw BadParameter("run index " + std::to_string(*index) + " outside 0.." +
                           std::to_string(e.runs.size() - 1));
      return detail::execute(con, e.runs[*index], *index, e.runs.size(), opts);
    }

    std::vector<int> codes(e.runs.size(), 0);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (std::size_t i = next++; i < e.runs.size(); i = next++)
        codes[i] = detail::execute(con, e.runs[i], i, e.runs.size(), opts);
    };
    const auto n_threads =
        std::min<std::size_t>(static_cast<std::size_t>(flags.workers), e.runs.size());
    if (n_threads <= 1) {
      work();
    } else {
      std::vector<std::jthread> pool;
      for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(work);
    }
    int code = kOk;
    for (int c : codes) code = std::max(code, c);
    // plots cover whatever completed, even when some runs failed
    const bool any_ok = std::find(codes.begin(), codes.end(), int(kOk)) != codes.end();
    if (any_ok && !flags.stop_after_epoch) code = std::max(code, detail::report(con, e));
    return code;
  });
}

/// Continues every run of the experiment that has a checkpoint but no final
/// result.
inline int cmd_resume(const std::filesystem::path& file, Console& con) {
  return guarded(con, [&] {
    Experiment e = open_experiment(file);
    int code = kOk;
    std::size_t resumed = 0;
    for (std::size_t i = 0; i < e.runs.size(); ++i) {
      RunPaths paths{run_directory(e.runs[i])};
      if (!std::filesystem::exists(paths.last())) continue;
      auto r = load_result(paths.result());
      if (r && r->status != RunStatus::incomplete) continue;
      ++resumed;
      code = std::max(code, detail::execute(con, e.runs[i], i, e.runs.size(), {}));
    }
    con.line("resumed " + std::to_string(resumed) + " run(s)");
    return code;
  });
}

/// Rebuilds the aggregate table and heatmaps from stored results. `target`
/// is an experiment file or an experiment output directory.
inline int cmd_plot(const std::filesystem::path& target, Console& con) {
  return guarded(con, [&] {
    if (std::filesystem::is_directory(target)) {
      auto entries = collect_results(target);
      if (entries.empty()) throw EmptyGrid("no results under " + target.string());
      auto settings = plot_settings(entries.front().config.evaluation());
      auto rep = write_report(entries, settings, target);
      for (const auto& p : rep.written) con.line("wrote " + p.string());
      return int(kOk);
    }
    return detail::report(con, open_experiment(target));
  });
}

namespace detail {

inline void list_runs(Console& con, const std::filesystem::path& experiment_dir) {
  std::vector<std::filesystem::path> dirs;
  for (const auto& d : std::filesystem::directory_iterator(experiment_dir / "runs"))
    if (d.is_directory()) dirs.push_back(d.path());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    RunPaths paths{d};
    std::string status = "pending", epoch = "0", best = "-";
    if (auto r = load_result(paths.result())) {
      status = to_string(r->status);
      epoch = std::to_string(r->history.size());
      if (r->best_val) best = format_double(r->best_val->value);
    } else if (std::filesystem::exists(paths.last())) {
      Checkpoint c = load_checkpoint(paths.last());
      status = "incomplete";
      epoch = std::to_string(c.epoch);
      if (c.best_val) best = format_double(c.best_val->value);
    }
    con.line(experiment_dir.filename().string() + "\t" + d.filename().string() + "\t" + status +
             "\t" + epoch + "\t" + best);
  }
}

}  // namespace detail

/// Status of every run below `dir`, which is an output directory or a
/// single experiment directory.
inline int cmd_list(const std::filesystem::path& dir, Console& con) {
  return guarded(con, [&] {
    con.line("experiment\trun_id\tstatus\tepoch\tbest_val");
    if (!std::filesystem::is_directory(dir)) return int(kOk);
    if (std::filesystem::is_directory(dir / "runs")) {
      detail::list_runs(con, dir);
      return int(kOk);
    }
    std::vector<std::filesystem::path> experiments;
    for (const auto& d : std::filesystem::directory_iterator(dir))
      if (std::filesystem::is_directory(d.path() / "runs")) experiments.push_back(d.path());
    std::sort(experiments.begin(), experiments.end());
    for (const auto& x : experiments) detail::list_runs(con, x);
    return int(kOk);
  });
}

/// Array job with one element per expanded run. Logs land in the
/// submission directory as `<experiment>_<job>_<index>.out`.
inline std::string slurm_script(const Experiment& e, const SlurmFlags& flags) {
  const auto file = std::filesystem::absolute(e.file).lexically_normal();
  const std::string name = e.spec.root.at_path("engine.experiment_name")->as_string();
  std::ostringstream s;
  s << "#!/bin/bash\n";
  s << "#SBATCH --job-name=" << name << '\n';
  s << "#SBATCH --array=0-" << e.runs.size() - 1 << '\n';
  if (!flags.partition.empty()) s << "#SBATCH --partition=" << flags.partition << '\n';
  if (!flags.time.empty()) s << "#SBATCH --time=" << flags.time << '\n';
  s << "#SBATCH --ntasks=1\n";
  s << "#SBATCH --cpus-per-task=1\n";
  s << "#SBATCH --output=" << name << "_%A_%a.out\n";
  s << '\n';
  s << "cd '" << std::filesystem::current_path().string() << "'\n";
  s << "'" << flags.exe << "' run '" << file.string() << "' --run-index \"$SLURM_ARRAY_TASK_ID\"\n";
  return s.str();
}

inline int cmd_slurm_script(const std::filesystem::path& file, const SlurmFlags& flags,
                            Console& con) {
  return guarded(con, [&] {
    con.out << slurm_script(open_experiment(file), flags) << std::flush;
    return int(kOk);
  });
}

inline int cmd_hpo(const std::filesystem::path& file, Console& con) {
  return guarded(con, [&] {
    HpoFile f = load_hpo_file(file);
    HpoResult res = run_hpo(f.base, f.settings, f.workdir);
    std::size_t failed = 0;
    for (const auto& t : res.log) failed += t.status != "completed";
    con.line("trials log: " + (f.workdir / "trials.jsonl").string() + " (" +
             std::to_string(res.log.size()) + " evaluations, " + std::to_string(failed) +
             " failed)");
    if (res.best_trial < 0) {
      con.error("no trial completed at the full budget");
      return int(kRuntimeFailure);
    }
    std::string overlay;
    for (const auto& [k, v] : res.best_overlay.entries())
      overlay += " " + k + "=" + scalar_text(v);
    con.line("best trial " + std::to_string(res.best_trial) +
             " objective=" + format_double(res.best_objective) + (overlay.empty() ? " (defaults)" : overlay));
    if (!f.retrain_seeds.empty()) {
      auto cells = retrain_best(res.best_config, f.retrain_seeds, f.workdir);
      export_table(cells, "csv", f.workdir / "retrain.csv");
      for (const auto& c : cells)
        con.line("retrained n=" + std::to_string(c.n) + " test_best=" + format_double(c.mean_best) +
                 "+-" + format_double(c.std_best) + " test_last=" + format_double(c.mean_last) +
                 "+-" + format_double(c.std_last));
    }
    return int(kOk);
  });
}

}  // namespace fob::cli
