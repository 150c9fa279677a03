// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include "fob/optim/optimizer.hpp"

namespace fob {

/// Heavy-ball SGD with L2 decay added to the gradient of eligible groups.
class SgdMomentum final : public Optimizer {
 public:
  SgdMomentum(OptimizerConfig config, std::vector<ParamGroup> groups)
      : Optimizer(std::move(config), std::move(groups)) {
    detail::check_schedule(config_);
    detail::require(config_.weight_decay >= 0, "weight_decay must be non-negative");
    detail::require(config_.momentum >= 0 && config_.momentum <= 1, "momentum must lie in [0, 1]");
  }

  OptimizerState init_state(std::span<const double>) const override { return zero_state({"velocity"}); }

 protected:
  void apply(std::span<double> p, std::span<const double> g, OptimizerState& state,
             double lr) const override {
    ++state.step_count;
    const double mu = config_.momentum;
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      const auto& grp = groups_[gi];
      const double wd = grp.weight_decay_eligible ? config_.weight_decay : 0.0;
      auto& v = state.groups[gi].buffer("velocity");
      for (std::size_t k = 0; k < grp.size(); ++k) {
        const std::size_t i = grp.start + k;
        const double grad = g[i] + wd * p[i];
        v[k] = mu * v[k] + grad;
        p[i] -= lr * v[k];
      }
    }
  }
};

}  // namespace fob
