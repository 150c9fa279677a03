// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <cmath>

#include "fob/optim/optimizer.hpp"

namespace fob {

namespace detail {

// One bias-corrected Adam update with decoupled decay over all groups.
// `wd` is applied to eligible groups only; wd == 0 leaves the decay factor
// at exactly 1.
inline void adam_update(std::span<double> p, std::span<const double> g,
                        const std::vector<ParamGroup>& groups, OptimizerState& state,
                        const OptimizerConfig& c, double wd, double lr) {
  const std::int64_t t = ++state.step_count;
  const double b1 = c.beta1(), b2 = c.beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& grp = groups[gi];
    const double decay = 1.0 - lr * (grp.weight_decay_eligible ? wd : 0.0);
    auto& m = state.groups[gi].buffer("m");
    auto& v = state.groups[gi].buffer("v");
    for (std::size_t k = 0; k < grp.size(); ++k) {
      const std::size_t i = grp.start + k;
      m[k] = b1 * m[k] + (1.0 - b1) * g[i];
      v[k] = b2 * v[k] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      p[i] = p[i] * decay - lr * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
}

}  // namespace detail

/// Adam with decoupled weight decay.
class AdamW final : public Optimizer {
 public:
  AdamW(OptimizerConfig config, std::vector<ParamGroup> groups)
      : Optimizer(std::move(config), std::move(groups)) {
    detail::check_schedule(config_);
    detail::check_adam(config_);
    detail::require(config_.weight_decay >= 0, "weight_decay must be non-negative");
  }

  OptimizerState init_state(std::span<const double>) const override { return zero_state({"m", "v"}); }

 protected:
  void apply(std::span<double> p, std::span<const double> g, OptimizerState& state,
             double lr) const override {
    detail::adam_update(p, g, groups_, state, config_, config_.weight_decay, lr);
  }
};

}  // namespace fob
