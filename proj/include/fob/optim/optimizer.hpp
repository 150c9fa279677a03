// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fob/error.hpp"
#include "fob/node.hpp"
#include "fob/sched.hpp"
#include "fob/tasks/task.hpp"

namespace fob {

/// Hyperparameters of every baseline. Each optimizer reads and validates only
/// the fields it uses; β₁ is stored as 1 - β₁.
struct OptimizerConfig {
  std::string name = "adamw_baseline";
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  double one_minus_beta1 = 0.1;
  double beta2 = 0.999;
  double momentum = 0.9;
  double epsilon = 1e-8;
  double kappa_init_param = 1.0;
  std::string kappa_init_method = "warm_start";
  double lr_warmup = 0.01;
  double lr_min_factor = 0.01;
  double clip_threshold = 1.0;
  double decay_rate = -0.8;

  double beta1() const { return 1.0 - one_minus_beta1; }

  ScheduleSpec schedule(std::int64_t total_steps) const {
    return ScheduleSpec::make(learning_rate, total_steps, lr_warmup, lr_min_factor);
  }

  static OptimizerConfig from_node(const Node& n) {
    OptimizerConfig c;
    if (!n.is_map()) throw SchemaError("optimizer config must be a mapping");
    auto real = [&](const char* key, double& into) {
      if (const Node* v = n.find(key)) into = v->as_double(std::string("optimizer.") + key);
    };
    if (const Node* v = n.find("name")) c.name = v->as_string("optimizer.name");
    real("learning_rate", c.learning_rate);
    real("weight_decay", c.weight_decay);
    real("one_minus_beta1", c.one_minus_beta1);
    real("beta2", c.beta2);
    real("momentum", c.momentum);
    real("epsilon", c.epsilon);
    real("kappa_init_param", c.kappa_init_param);
    real("lr_warmup", c.lr_warmup);
    real("lr_min_factor", c.lr_min_factor);
    real("clip_threshold", c.clip_threshold);
    real("decay_rate", c.decay_rate);
    if (const Node* v = n.find("kappa_init_method"))
      c.kappa_init_method = v->as_string("optimizer.kappa_init_method");
    return c;
  }
};

/// Per-group CPR multiplier state. `kappa` is unset until the fix step.
struct CprState {
  double lambda = 0.0;
  std::optional<double> kappa;
  std::int64_t fix_step = 0;

  friend bool operator==(const CprState&, const CprState&) = default;
};

/// Named buffers per group ("velocity", "m", "v", "row", "col").
struct GroupState {
  std::map<std::string, std::vector<double>> buffers;
  std::optional<CprState> cpr;

  std::vector<double>& buffer(const std::string& key) { return buffers.at(key); }
  const std::vector<double>& buffer(const std::string& key) const { return buffers.at(key); }

  friend bool operator==(const GroupState&, const GroupState&) = default;
};

struct OptimizerState {
  std::string name;
  std::int64_t step_count = 0;
  std::vector<GroupState> groups;

  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

/// Parameters together with their grouping, as handed to an optimizer.
struct GroupedModel {
  std::span<const double> params;
  std::vector<ParamGroup> groups;
};

/// An update rule. Implementations supply the state layout and the step;
/// shape and finiteness checks happen here.
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, std::vector<ParamGroup> groups)
      : config_(std::move(config)), groups_(std::move(groups)) {}
  virtual ~Optimizer() = default;

  const OptimizerConfig& config() const { return config_; }
  const std::vector<ParamGroup>& groups() const { return groups_; }

  virtual OptimizerState init_state(std::span<const double> params) const = 0;

  void step(std::span<double> params, std::span<const double> grads, OptimizerState& state,
            double lr) const {
    const std::size_t total = groups_.empty() ? 0 : groups_.back().end;
    if (params.size() != total || grads.size() != total)
      throw ShapeMismatch("optimizer expects " + std::to_string(total) + " parameters");
    if (state.groups.size() != groups_.size())
      throw ShapeMismatch("optimizer state has the wrong number of groups");
    if (!(lr > 0) || !std::isfinite(lr)) throw BadHyperparameter("step learning rate must be positive");
    for (std::size_t i = 0; i < grads.size(); ++i)
      if (!std::isfinite(grads[i]))
        throw NonFinite("non-finite gradient at index " + std::to_string(i) + " (step " +
                        std::to_string(state.step_count + 1) + ")");
    apply(params, grads, state, lr);
    for (std::size_t i = 0; i < params.size(); ++i)
      if (!std::isfinite(params[i]))
        throw NonFinite("non-finite parameter at index " + std::to_string(i) + " after step " +
                        std::to_string(state.step_count));
  }

 protected:
  virtual void apply(std::span<double> params, std::span<const double> grads,
                     OptimizerState& state, double lr) const = 0;

  OptimizerState zero_state(std::initializer_list<const char*> buffers) const {
    OptimizerState s;
    s.name = config_.name;
    for (const auto& g : groups_) {
      GroupState gs;
      for (const char* b : buffers) gs.buffers[b].assign(g.size(), 0.0);
      s.groups.push_back(std::move(gs));
    }
    return s;
  }

  OptimizerConfig config_;
  std::vector<ParamGroup> groups_;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw BadHyperparameter(what);
}

inline void check_schedule(const OptimizerConfig& c) {
  require(c.learning_rate > 0 && std::isfinite(c.learning_rate), "learning_rate must be positive");
  require(c.lr_warmup > 0 && c.lr_warmup <= 1, "lr_warmup must lie in (0, 1]");
  require(c.lr_min_factor > 0 && c.lr_min_factor < 1, "lr_min_factor must lie in (0, 1)");
}

inline void check_adam(const OptimizerConfig& c) {
  require(c.one_minus_beta1 > 0 && c.one_minus_beta1 < 1, "one_minus_beta1 must lie in (0, 1)");
  require(c.beta2 > 0 && c.beta2 < 1, "beta2 must lie in (0, 1)");
  require(c.epsilon > 0, "epsilon must be positive");
}

}  // namespace detail

}  // namespace fob
