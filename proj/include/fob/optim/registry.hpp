// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>

#include "fob/optim/adafactor.hpp"
#include "fob/optim/adamcpr.hpp"
#include "fob/optim/adamw.hpp"
#include "fob/optim/sgd.hpp"

namespace fob {

using OptimizerPtr = std::shared_ptr<const Optimizer>;

/// A plugin builds its optimizer from the groups and config; warmup_steps is
/// the schedule's warmup length for rules that key off it.
using OptimizerFactory = std::function<OptimizerPtr(
    const std::vector<ParamGroup>& groups, const OptimizerConfig& config, std::int64_t warmup_steps)>;

inline std::map<std::string, OptimizerFactory>& optimizer_registry() {
  static std::map<std::string, OptimizerFactory> registry{
      {"sgd_baseline",
       [](const auto& g, const auto& c, std::int64_t) { return std::make_shared<SgdMomentum>(c, g); }},
      {"adamw_baseline",
       [](const auto& g, const auto& c, std::int64_t) { return std::make_shared<AdamW>(c, g); }},
      {"adamcpr",
       [](const auto& g, const auto& c, std::int64_t w) { return std::make_shared<AdamCpr>(c, g, w); }},
      {"adafactor",
       [](const auto& g, const auto& c, std::int64_t) { return std::make_shared<Adafactor>(c, g); }},
  };
  return registry;
}

inline const std::map<std::string, std::string>& optimizer_aliases() {
  static const std::map<std::string, std::string> aliases{{"adamcpr_fast", "adamcpr"}};
  return aliases;
}

inline void register_optimizer(const std::string& name, OptimizerFactory factory) {
  optimizer_registry()[name] = std::move(factory);
}

struct ConfiguredOptimizer {
  OptimizerPtr optimizer;
  OptimizerState state;
};

/// Looks up `config.name` (aliases resolved) and builds the rule, which
/// validates its hyperparameters.
inline OptimizerPtr make_optimizer(const std::vector<ParamGroup>& groups,
                                   const OptimizerConfig& config, std::int64_t warmup_steps) {
  std::string name = config.name;
  if (auto a = optimizer_aliases().find(name); a != optimizer_aliases().end()) name = a->second;
  auto& reg = optimizer_registry();
  auto it = reg.find(name);
  if (it == reg.end()) throw UnknownName("unknown optimizer '" + config.name + "'");
  return it->second(groups, config, warmup_steps);
}

/// The rule together with a freshly initialized state.
inline ConfiguredOptimizer configure_optimizer(const GroupedModel& model,
                                               const OptimizerConfig& config,
                                               std::int64_t warmup_steps) {
  ConfiguredOptimizer out;
  out.optimizer = make_optimizer(model.groups, config, warmup_steps);
  out.state = out.optimizer->init_state(model.params);
  return out;
}

}  // namespace fob
