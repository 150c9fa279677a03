// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fob/tasks/analytic.hpp"
#include "fob/tasks/classification.hpp"

namespace fob {

using TaskPtr = std::shared_ptr<const TaskInstance>;
using TaskFactory = std::function<TaskPtr(const Node& cfg, std::uint64_t data_seed)>;

inline std::map<std::string, TaskFactory>& task_registry() {
  static std::map<std::string, TaskFactory> registry{
      {"quadratic", [](const Node& c, std::uint64_t s) { return std::make_shared<QuadraticTask>(c, s); }},
      {"rosenbrock", [](const Node& c, std::uint64_t s) { return std::make_shared<RosenbrockTask>(c, s); }},
      {"blobs_logreg", [](const Node& c, std::uint64_t s) { return std::make_shared<BlobsLogregTask>(c, s); }},
      {"mlp_synth", [](const Node& c, std::uint64_t s) { return std::make_shared<MlpSynthTask>(c, s); }},
  };
  return registry;
}

inline constexpr std::uint64_t kDefaultDataSeed = 42;

/// Builds a task from its resolved config subtree. The data seed comes from
/// the argument if given, else from `data_seed` in the subtree, else 42.
inline TaskPtr build_task(const Node& task_config, std::optional<std::uint64_t> data_seed = {}) {
  const Node* name = task_config.find("name");
  if (!name) throw SchemaError("task config has no name");
  auto& reg = task_registry();
  auto it = reg.find(name->as_string("task.name"));
  if (it == reg.end()) throw UnknownName("unknown task '" + name->as_string() + "'");
  std::uint64_t seed = kDefaultDataSeed;
  if (data_seed) {
    seed = *data_seed;
  } else if (const Node* s = task_config.find("data_seed")) {
    auto v = s->as_int("task.data_seed");
    if (v < 0) throw BadParameter("'task.data_seed' must be non-negative");
    seed = static_cast<std::uint64_t>(v);
  }
  return it->second(task_config, seed);
}

inline std::vector<ParamGroup> parameter_groups(const TaskInstance& task) { return task.groups(); }

}  // namespace fob
