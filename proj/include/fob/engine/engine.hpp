// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "fob/config.hpp"
#include "fob/engine/checkpoint.hpp"
#include "fob/optim/registry.hpp"
#include "fob/rng.hpp"
#include "fob/sched.hpp"
#include "fob/tasks/registry.hpp"
#include "fob/yaml_io.hpp"

namespace fob {

enum class RunStatus { completed, incomplete, aborted };

inline std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::completed: return "completed";
    case RunStatus::incomplete: return "incomplete";
    case RunStatus::aborted: return "aborted";
  }
  return "aborted";
}

inline RunStatus run_status_from(const std::string& s) {
  if (s == "completed") return RunStatus::completed;
  if (s == "incomplete") return RunStatus::incomplete;
  if (s == "aborted") return RunStatus::aborted;
  throw SchemaError("unknown run status '" + s + "'");
}

struct RunResult {
  std::string run_id;
  std::vector<EpochRecord> history;
  std::optional<double> test_best;
  std::optional<double> test_last;
  std::optional<BestRecord> best_val;
  std::map<std::string, std::uint64_t> seeds_used;
  RunStatus status = RunStatus::incomplete;
  MetricSpec metric;
  std::vector<std::int64_t> budgets;
  std::int64_t total_steps = 0;
  std::int64_t warmup_steps = 0;
  bool warmup_clamped = false;
  std::string error;

  friend bool operator==(const RunResult&, const RunResult&) = default;
};

inline nlohmann::json to_json(const RunResult& r) {
  using nlohmann::json;
  json j;
  j["run_id"] = r.run_id;
  j["status"] = to_string(r.status);
  j["metric"] = {{"kind", to_string(r.metric.kind)}, {"direction", to_string(r.metric.direction)}};
  json hist = json::array();
  for (const auto& h : r.history)
    hist.push_back({{"epoch", h.epoch},
                    {"lr_last", h.lr_last},
                    {"train_loss", h.train_loss},
                    {"val_metric", h.val_metric}});
  j["history"] = hist;
  j["test_best"] = r.test_best ? json(*r.test_best) : json(nullptr);
  j["test_last"] = r.test_last ? json(*r.test_last) : json(nullptr);
  j["best_val"] = r.best_val ? json{{"value", r.best_val->value}, {"epoch", r.best_val->epoch}}
                             : json(nullptr);
  j["seeds_used"] = r.seeds_used;
  j["budgets"] = r.budgets;
  j["total_steps"] = r.total_steps;
  j["warmup_steps"] = r.warmup_steps;
  j["warmup_clamped"] = r.warmup_clamped;
  j["error"] = r.error;
  return j;
}

inline RunResult run_result_from_json(const nlohmann::json& j) {
  RunResult r;
  try {
    r.run_id = j.at("run_id").get<std::string>();
    r.status = run_status_from(j.at("status").get<std::string>());
    r.metric.kind = metric_kind_from(j.at("metric").at("kind").get<std::string>());
    r.metric.direction = j.at("metric").at("direction").get<std::string>() == "maximize"
                             ? Direction::maximize
                             : Direction::minimize;
    for (const auto& h : j.at("history"))
      r.history.push_back({h.at("epoch").get<std::int64_t>(), h.at("lr_last").get<double>(),
                           h.at("train_loss").get<double>(), h.at("val_metric").get<double>()});
    if (!j.at("test_best").is_null()) r.test_best = j["test_best"].get<double>();
    if (!j.at("test_last").is_null()) r.test_last = j["test_last"].get<double>();
    if (!j.at("best_val").is_null())
      r.best_val = BestRecord{j["best_val"].at("value").get<double>(),
                              j["best_val"].at("epoch").get<std::int64_t>()};
    r.seeds_used = j.at("seeds_used").get<std::map<std::string, std::uint64_t>>();
    r.budgets = j.at("budgets").get<std::vector<std::int64_t>>();
    r.total_steps = j.at("total_steps").get<std::int64_t>();
    r.warmup_steps = j.at("warmup_steps").get<std::int64_t>();
    r.warmup_clamped = j.at("warmup_clamped").get<bool>();
    r.error = j.value("error", std::string());
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed result: ") + e.what());
  }
  return r;
}

/// Files of one run directory.
struct RunPaths {
  std::filesystem::path dir;

  std::filesystem::path config() const { return dir / "config.resolved.yaml"; }
  std::filesystem::path metrics() const { return dir / "metrics.jsonl"; }
  std::filesystem::path result() const { return dir / "result.json"; }
  std::filesystem::path last() const { return dir / "checkpoints" / "last.ckpt"; }
  std::filesystem::path best() const { return dir / "checkpoints" / "best.ckpt"; }
};

/// `<output_dir>/<experiment_name>/runs/<run_id>`.
inline std::filesystem::path run_directory(const ResolvedRunConfig& config) {
  const Node& engine = config.engine();
  std::string out = "outputs", experiment = "experiment";
  if (const Node* n = engine.find("output_dir")) out = n->as_string("engine.output_dir");
  if (const Node* n = engine.find("experiment_name"))
    experiment = n->as_string("engine.experiment_name");
  return std::filesystem::path(out) / experiment / "runs" / run_id(config);
}

inline std::optional<RunResult> load_result(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("unreadable " + path.string() + ": " + e.what());
  }
  return run_result_from_json(j);
}

struct TrainOptions {
  /// Stop (status incomplete) once this epoch's checkpoint is written.
  std::optional<std::int64_t> stop_after_epoch;
};

namespace detail {

inline std::uint64_t engine_seed(const ResolvedRunConfig& config) {
  const Node* n = config.engine().find("seed");
  if (!n) return 42;
  std::int64_t s = n->as_int("engine.seed");
  if (s < 0) throw BadParameter("engine.seed must be non-negative");
  return static_cast<std::uint64_t>(s);
}

// Everything about a run that follows from its resolved config.
struct RunSetup {
  ResolvedRunConfig config;
  TaskPtr task;
  OptimizerConfig opt_config;
  ScheduleSpec schedule;
  std::int64_t max_epochs = 0;
  std::int64_t batches_per_epoch = 0;
  std::map<std::string, std::uint64_t> seeds;
  std::string id;
  std::string free_id;
};

inline RunSetup make_setup(const ResolvedRunConfig& config) {
  RunSetup s;
  s.config = config;
  s.task = build_task(config.task());
  s.opt_config = OptimizerConfig::from_node(config.optimizer());
  s.max_epochs = s.task->max_epochs();
  const auto n = static_cast<std::int64_t>(s.task->train().n);
  s.batches_per_epoch = (n + s.task->batch_size() - 1) / s.task->batch_size();
  s.schedule = s.opt_config.schedule(s.max_epochs * s.batches_per_epoch);
  s.seeds = derive_seeds(engine_seed(config));
  s.id = run_id(config);
  s.free_id = budget_free_id(config);
  return s;
}

inline OptimizerPtr make_optimizer(const RunSetup& s) {
  return fob::make_optimizer(s.task->groups(), s.opt_config, s.schedule.warmup_steps());
}

inline Checkpoint fresh_checkpoint(const RunSetup& s) {
  Checkpoint c;
  c.run_id = s.id;
  c.budget_free_id = s.free_id;
  Xoshiro256 init(s.seeds.at("init"));
  c.params = s.task->init_params(init);
  c.rng_states["init"] = init.state();
  c.rng_states["shuffle"] = Xoshiro256(s.seeds.at("shuffle")).state();
  GroupedModel model{c.params, s.task->groups()};
  c.optimizer_state =
      configure_optimizer(model, s.opt_config, s.schedule.warmup_steps()).state;
  c.budgets = {s.max_epochs};
  return c;
}

inline void write_metrics_line(const RunPaths& paths, const EpochRecord& e, double wall) {
  std::ofstream out(paths.metrics(), std::ios::app);
  if (!out) throw IoError("cannot append to " + paths.metrics().string());
  nlohmann::json j{{"epoch", e.epoch},
                   {"lr_last", e.lr_last},
                   {"train_loss", e.train_loss},
                   {"val_metric", e.val_metric},
                   {"wall_time_s", wall}};
  out << j.dump() << "\n";
}

// Keeps only the lines for epochs already covered by the checkpoint.
inline void truncate_metrics(const RunPaths& paths, std::int64_t upto) {
  if (!std::filesystem::exists(paths.metrics())) return;
  std::ifstream in(paths.metrics());
  std::string line, kept;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      if (j.at("epoch").get<std::int64_t>() <= upto) kept += line + "\n";
    } catch (const nlohmann::json::exception&) {
      // a torn trailing line from an interrupted write
    }
  }
  in.close();
  write_file_atomic(paths.metrics(), kept);
}

inline RunResult base_result(const RunSetup& s, const Checkpoint& c) {
  RunResult r;
  r.run_id = s.id;
  r.history = c.history;
  r.best_val = c.best_val;
  r.seeds_used = s.seeds;
  r.metric = s.task->metric();
  r.budgets = c.budgets;
  r.total_steps = s.schedule.total_steps;
  r.warmup_steps = s.schedule.warmup_steps();
  r.warmup_clamped = s.schedule.warmup_clamped();
  return r;
}

inline void write_result(const RunPaths& paths, const RunResult& r) {
  write_file_atomic(paths.result(), to_json(r).dump(2) + "\n");
}

// Trains from checkpoint `c` up to the configured budget.
inline RunResult continue_from(const RunSetup& s, Checkpoint c, const RunPaths& paths,
                               const TrainOptions& opts) {
  const TaskInstance& task = *s.task;
  auto optimizer = make_optimizer(s);
  Xoshiro256 shuffle(c.rng_states.at("shuffle"));
  const DataSplit& train = task.train();
  const auto bs = static_cast<std::size_t>(task.batch_size());
  std::vector<std::size_t> order(train.n);

  while (c.epoch < s.max_epochs) {
    const auto started = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0, lr = 0;
    std::int64_t batches = 0;
    try {
      for (std::size_t start = 0; start < train.n; start += bs) {
        const std::size_t end = std::min(train.n, start + bs);
        std::span<const std::size_t> batch(order.data() + start, end - start);
        auto lg = task.forward_backward(c.params, train, batch);
        if (!std::isfinite(lg.loss))
          throw NonFinite("non-finite training loss at step " + std::to_string(c.step_count));
        lr = lr_at(s.schedule, c.step_count);
        optimizer->step(c.params, lg.grad, c.optimizer_state, lr);
        loss_sum += lg.loss;
        ++batches;
        ++c.step_count;
      }
    } catch (const NonFinite& e) {
      RunResult r = base_result(s, c);
      r.status = RunStatus::aborted;
      r.error = e.what();
      write_result(paths, r);
      return r;
    }
    const double val = task.evaluate(c.params, SplitName::val);
    if (!std::isfinite(val)) {
      RunResult r = base_result(s, c);
      r.status = RunStatus::aborted;
      r.error = "non-finite validation metric in epoch " + std::to_string(c.epoch + 1);
      write_result(paths, r);
      return r;
    }
    ++c.epoch;
    EpochRecord rec{c.epoch, lr, loss_sum / static_cast<double>(batches), val};
    c.history.push_back(rec);
    c.rng_states["shuffle"] = shuffle.state();
    const bool improved = !c.best_val || task.metric().better(val, c.best_val->value);
    if (improved) c.best_val = BestRecord{val, c.epoch};

    if (improved) save_checkpoint(c, paths.best());
    save_checkpoint(c, paths.last());
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_metrics_line(paths, rec, wall);

    if (opts.stop_after_epoch && c.epoch >= *opts.stop_after_epoch && c.epoch < s.max_epochs) {
      RunResult r = base_result(s, c);
      r.status = RunStatus::incomplete;
      return r;
    }
  }

  RunResult r = base_result(s, c);
  r.test_last = task.evaluate(c.params, SplitName::test);
  Checkpoint best = load_checkpoint(paths.best());
  r.test_best = task.evaluate(best.params, SplitName::test);
  r.status = RunStatus::completed;
  write_result(paths, r);
  return r;
}

inline Checkpoint load_matching(const RunPaths& paths, const RunSetup& s) {
  Checkpoint c = load_checkpoint(paths.last());
  if (c.run_id != s.id)
    throw RunIdMismatch("checkpoint in " + paths.dir.string() + " belongs to run " + c.run_id +
                        ", config hashes to " + s.id);
  return c;
}

}  // namespace detail

/// Builds the task, optimizer and schedule of `config` without training, so
/// every config error surfaces before any run starts.
inline void validate_run(const ResolvedRunConfig& config) {
  auto s = detail::make_setup(config);
  detail::make_optimizer(s);
}

/// Runs `config` in `workdir`: returns the stored result if the run already
/// finished, continues from `last.ckpt` if one exists, else starts fresh.
inline RunResult train_run(const ResolvedRunConfig& config, const std::filesystem::path& workdir,
                           const TrainOptions& opts = {}) {
  auto s = detail::make_setup(config);
  RunPaths paths{workdir};
  if (std::filesystem::exists(paths.last())) {
    Checkpoint probe = detail::load_matching(paths, s);
    if (auto done = load_result(paths.result()); done && done->run_id == s.id &&
                                                  done->status != RunStatus::incomplete)
      return *done;
    detail::truncate_metrics(paths, probe.epoch);
    return detail::continue_from(s, std::move(probe), paths, opts);
  }
  std::filesystem::create_directories(workdir / "checkpoints");
  write_file_atomic(paths.config(), to_yaml(config.root));
  write_file_atomic(paths.metrics(), "");
  std::filesystem::remove(paths.result());
  Checkpoint start = detail::fresh_checkpoint(s);
  save_checkpoint(start, paths.last());
  return detail::continue_from(s, std::move(start), paths, opts);
}

/// Continues an interrupted run; requires `last.ckpt` from the same config.
inline RunResult resume_run(const ResolvedRunConfig& config, const std::filesystem::path& workdir,
                            const TrainOptions& opts = {}) {
  RunPaths paths{workdir};
  if (!std::filesystem::exists(paths.last()))
    throw IoError("no checkpoint to resume in " + workdir.string());
  return train_run(config, workdir, opts);
}

/// Trains an existing run further, to `new_max_epochs` in total. The cosine
/// schedule is recomputed over the longer horizon; finished steps stay as
/// they were.
inline RunResult extend_budget(const ResolvedRunConfig& config,
                               const std::filesystem::path& workdir, std::int64_t new_max_epochs,
                               const TrainOptions& opts = {}) {
  RunPaths paths{workdir};
  ResolvedRunConfig extended = config;
  extended.root.set_path("task.max_epochs", Node(new_max_epochs));
  auto s = detail::make_setup(extended);
  Checkpoint c = load_checkpoint(paths.last());
  if (c.budget_free_id != s.free_id)
    throw RunIdMismatch("checkpoint in " + workdir.string() +
                        " belongs to a different configuration");
  if (c.run_id == s.id) {
    // already extended to this budget, possibly interrupted
    if (auto done = load_result(paths.result());
        done && done->run_id == s.id && done->status != RunStatus::incomplete)
      return *done;
  } else {
    if (new_max_epochs <= c.epoch)
      throw BadParameter("new budget " + std::to_string(new_max_epochs) +
                         " must exceed the " + std::to_string(c.epoch) + " epochs already trained");
    c.run_id = s.id;
    c.budgets.push_back(new_max_epochs);
    save_checkpoint(c, paths.last());
    write_file_atomic(paths.config(), to_yaml(extended.root));
    std::filesystem::remove(paths.result());
  }
  detail::truncate_metrics(paths, c.epoch);
  return detail::continue_from(s, std::move(c), paths, opts);
}

}  // namespace fob
