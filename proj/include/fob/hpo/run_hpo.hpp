// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fob/engine/engine.hpp"
#include "fob/evaluation/aggregate.hpp"
#include "fob/hpo/hyperband.hpp"
#include "fob/hpo/search_space.hpp"

namespace fob {

/// Trains `config` (whose task.max_epochs is the budget) in `dir`. With
/// `promote` set the directory already holds the same trial at a lower
/// budget and training continues from it.
using TrialRunner =
    std::function<RunResult(const ResolvedRunConfig& config, const std::filesystem::path& dir,
                            std::int64_t budget, bool promote)>;

inline RunResult engine_trial_runner(const ResolvedRunConfig& config,
                                     const std::filesystem::path& dir, std::int64_t budget,
                                     bool promote) {
  return promote ? extend_budget(config, dir, budget) : train_run(config, dir);
}

struct HpoSettings {
  SearchSpace space;
  std::int64_t n_trials = 10;
  double init_fraction = 0.1;
  std::int64_t R = 0;  // 0: the base task's max_epochs
  std::int64_t eta = 3;
  std::uint64_t seed = 0;
};

/// One evaluation of one trial at one budget.
struct TrialRecord {
  std::int64_t trial_id = 0;
  std::int64_t iteration = 0;  // pass over the bracket list
  std::int64_t bracket = -1;    // s; -1 for the initial design
  std::int64_t rung = 0;
  std::int64_t budget = 0;
  Node config_overlay;
  std::optional<double> objective;  // lower is better; empty when failed
  std::string status;               // completed | failed

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

inline nlohmann::json to_json(const TrialRecord& t) {
  nlohmann::json overlay = nlohmann::json::object();
  for (const auto& [k, v] : t.config_overlay.entries()) overlay[k] = detail::node_to_json(v);
  return {{"trial_id", t.trial_id},
          {"iteration", t.iteration},
          {"bracket", t.bracket},
          {"rung", t.rung},
          {"budget", t.budget},
          {"config_overlay", overlay},
          {"objective", t.objective ? nlohmann::json(*t.objective) : nlohmann::json(nullptr)},
          {"status", t.status}};
}

struct HpoResult {
  std::int64_t best_trial = -1;
  Node best_overlay;
  ResolvedRunConfig best_config;
  double best_objective = std::numeric_limits<double>::infinity();
  std::vector<TrialRecord> log;
};

/// Last-epoch validation metric, negated for maximized metrics.
inline std::optional<double> trial_objective(const RunResult& r) {
  if (r.status != RunStatus::completed || r.history.empty()) return std::nullopt;
  const double v = r.history.back().val_metric;
  if (!std::isfinite(v)) return std::nullopt;
  return r.metric.direction == Direction::maximize ? -v : v;
}

inline ResolvedRunConfig apply_overlay(const ResolvedRunConfig& base, const Node& overlay,
                                       std::int64_t budget) {
  ResolvedRunConfig rc = base;
  for (const auto& [path, v] : overlay.entries()) rc.root.set_path(path, v);
  rc.root.set_path("task.max_epochs", Node(budget));
  return rc;
}

namespace detail {

struct HpoTrial {
  std::int64_t id;
  Node overlay;
  std::optional<double> objective;
};

class HpoDriver {
 public:
  HpoDriver(const ResolvedRunConfig& base, const HpoSettings& settings,
            const std::filesystem::path& workdir, TrialRunner runner)
      : base_(base), settings_(settings), workdir_(workdir), runner_(std::move(runner)),
        rng_(settings.seed) {
    for (const auto& [path, _] : settings.space.entries)
      if (!base.root.at_path(path))
        throw SchemaError("search space path '" + path + "' is not in the base config");
    if (settings_.R == 0) settings_.R = base.task().at_path("max_epochs")->as_int();
    if (settings_.n_trials < 1) throw BadParameter("n_trials must be >= 1");
    if (!(settings_.init_fraction > 0 && settings_.init_fraction <= 1))
      throw BadParameter("init_fraction must lie in (0, 1]");
    plan_ = hyperband_schedule(settings_.R, settings_.eta);
  }

  HpoResult run() {
    std::filesystem::create_directories(workdir_);
    log_path_ = workdir_ / "trials.jsonl";
    write_file_atomic(log_path_, "");

    // initial design: drawn before any promotion decision, trained at R
    const auto n_init = std::clamp<std::int64_t>(
        std::llround(settings_.init_fraction * static_cast<double>(settings_.n_trials)), 1,
        settings_.n_trials);
    std::vector<HpoTrial> init;
    for (std::int64_t i = 0; i < n_init; ++i) init.push_back(new_trial(i == 0));
    for (auto& t : init) evaluate(t, -1, 0, settings_.R, false);

    std::size_t b = 0;
    while (next_id_ < settings_.n_trials) {
      iteration_ = static_cast<std::int64_t>(b / plan_.size());
      const BracketPlan& full = plan_[b++ % plan_.size()];
      const std::int64_t left = settings_.n_trials - next_id_;
      const BracketPlan bracket = left < full.rungs[0].n_configs
                                      ? truncate_bracket(full, left, settings_.eta)
                                      : full;
      run_bracket(bracket);
    }
    return finish();
  }

 private:
  HpoTrial new_trial(bool use_defaults) {
    HpoTrial t{next_id_++, use_defaults ? Node::map() : sample(settings_.space, rng_), {}};
    return t;
  }

  void run_bracket(const BracketPlan& bracket) {
    std::vector<HpoTrial> live;
    for (std::int64_t i = 0; i < bracket.rungs[0].n_configs; ++i) live.push_back(new_trial(false));
    for (std::size_t r = 0; r < bracket.rungs.size(); ++r) {
      const auto& rung = bracket.rungs[r];
      for (auto& t : live)
        evaluate(t, bracket.s, static_cast<std::int64_t>(r), rung.budget, r > 0);
      if (r + 1 == bracket.rungs.size()) break;
      // barrier: keep the best, ties to the lower trial id; failures never advance
      std::vector<HpoTrial> ok;
      for (auto& t : live)
        if (t.objective) ok.push_back(std::move(t));
      std::stable_sort(ok.begin(), ok.end(), [](const HpoTrial& a, const HpoTrial& b) {
        if (*a.objective != *b.objective) return *a.objective < *b.objective;
        return a.id < b.id;
      });
      const auto keep = static_cast<std::size_t>(bracket.rungs[r + 1].n_configs);
      if (ok.size() > keep) ok.resize(keep);
      live = std::move(ok);
      if (live.empty()) break;
    }
  }

  void evaluate(HpoTrial& t, std::int64_t bracket, std::int64_t rung, std::int64_t budget,
                bool promote) {
    TrialRecord rec{t.id, iteration_, bracket, rung, budget, t.overlay, std::nullopt, "failed"};
    try {
      const auto config = apply_overlay(base_, t.overlay, budget);
      const auto dir = workdir_ / "trials" / std::to_string(t.id);
      rec.objective = trial_objective(runner_(config, dir, budget, promote));
      if (rec.objective) rec.status = "completed";
    } catch (const Error&) {
      rec.objective.reset();
    }
    t.objective = rec.objective;
    if (budget == settings_.R && t.objective) {
      if (best_trial_ < 0 || *t.objective < best_objective_ ||
          (*t.objective == best_objective_ && t.id < best_trial_)) {
        best_trial_ = t.id;
        best_objective_ = *t.objective;
        best_overlay_ = t.overlay;
      }
    }
    append_line(log_path_, to_json(rec).dump() + "\n");
    log_.push_back(std::move(rec));
  }

  static void append_line(const std::filesystem::path& p, const std::string& line) {
    std::ofstream out(p, std::ios::app | std::ios::binary);
    out << line;
    if (!out) throw IoError("cannot append to " + p.string());
  }

  HpoResult finish() {
    HpoResult r;
    r.log = log_;
    r.best_trial = best_trial_;
    if (best_trial_ >= 0) {
      r.best_overlay = best_overlay_;
      r.best_objective = best_objective_;
      r.best_config = apply_overlay(base_, best_overlay_, settings_.R);
      write_file_atomic(workdir_ / "best.yaml", to_yaml(r.best_config.root));
    }
    return r;
  }

  ResolvedRunConfig base_;
  HpoSettings settings_;
  std::filesystem::path workdir_, log_path_;
  TrialRunner runner_;
  Xoshiro256 rng_;
  std::vector<BracketPlan> plan_;
  std::int64_t next_id_ = 0;
  std::int64_t iteration_ = 0;
  std::int64_t best_trial_ = -1;
  double best_objective_ = std::numeric_limits<double>::infinity();
  Node best_overlay_ = Node::map();
  std::vector<TrialRecord> log_;
};

}  // namespace detail

/// Random sampling with a Hyperband intensifier over epoch budgets. Trial 0
/// is the base config itself. The first round(init_fraction * n_trials)
/// trials form an initial design trained at the full budget R; the rest go
/// through Hyperband brackets (cycled s_max..0, the last one cut short if
/// trials run out). The best trial is the lowest objective at budget R.
inline HpoResult run_hpo(const ResolvedRunConfig& base, const HpoSettings& settings,
                         const std::filesystem::path& workdir,
                         TrialRunner runner = engine_trial_runner) {
  return detail::HpoDriver(base, settings, workdir, std::move(runner)).run();
}

/// Trains `best` once per seed at its full budget under `workdir/retrain`
/// and aggregates the test performance.
inline std::vector<AggregateCell> retrain_best(const ResolvedRunConfig& best,
                                               const std::vector<std::int64_t>& seeds,
                                               const std::filesystem::path& workdir) {
  std::vector<ResultEntry> entries;
  for (std::int64_t seed : seeds) {
    ResolvedRunConfig rc = best;
    rc.root.set_path("engine.seed", Node(seed));
    const auto dir = workdir / "retrain" / run_id(rc);
    entries.push_back({rc, train_run(rc, dir)});
  }
  return aggregate(entries);
}

}  // namespace fob
