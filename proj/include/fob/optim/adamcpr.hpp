// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <cmath>

#include "fob/optim/adamw.hpp"

namespace fob {

/// Adam with constrained parameter regularization, warm-start variant.
///
/// Each eligible group carries a Lagrange multiplier λ on the constraint
/// mean(θ²) <= κ. Until step `fix_step` the update is plain Adam; at that
/// step κ is fixed to the current statistic, and from then on λ follows
/// λ <- max(0, λ + (mean(θ²) - κ)) and θ <- θ - lr λ 2θ/n.
class AdamCpr final : public Optimizer {
 public:
  AdamCpr(OptimizerConfig config, std::vector<ParamGroup> groups, std::int64_t warmup_steps)
      : Optimizer(std::move(config), std::move(groups)) {
    detail::check_schedule(config_);
    detail::check_adam(config_);
    detail::require(config_.kappa_init_param >= 0 && std::isfinite(config_.kappa_init_param),
                    "kappa_init_param must be non-negative");
    detail::require(config_.kappa_init_method == "warm_start",
                    "kappa_init_method must be 'warm_start'");
    detail::require(warmup_steps >= 0, "warmup_steps must be non-negative");
    fix_step_ = std::llround(config_.kappa_init_param * static_cast<double>(warmup_steps));
  }

  std::int64_t fix_step() const { return fix_step_; }

  static double statistic(std::span<const double> theta) {
    double s = 0;
    for (double x : theta) s += x * x;
    return s / static_cast<double>(theta.size());
  }

  /// With fix_step == 0, κ comes from the initial parameters.
  OptimizerState init_state(std::span<const double> params) const override {
    OptimizerState s = zero_state({"m", "v"});
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      const auto& grp = groups_[gi];
      if (!grp.weight_decay_eligible) continue;
      CprState cpr;
      cpr.fix_step = fix_step_;
      if (fix_step_ == 0) {
        if (params.size() < grp.end)
          throw ShapeMismatch("initial parameters required to fix kappa at step 0");
        cpr.kappa = statistic(params.subspan(grp.start, grp.size()));
      }
      s.groups[gi].cpr = cpr;
    }
    return s;
  }

 protected:
  void apply(std::span<double> p, std::span<const double> g, OptimizerState& state,
             double lr) const override {
    detail::adam_update(p, g, groups_, state, config_, 0.0, lr);
    const std::int64_t t = state.step_count;
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      const auto& grp = groups_[gi];
      auto& slot = state.groups[gi].cpr;
      if (!grp.weight_decay_eligible || !slot) continue;
      CprState& cpr = *slot;
      if (t < cpr.fix_step) continue;
      auto theta = p.subspan(grp.start, grp.size());
      const double s = statistic(theta);
      if (!cpr.kappa) cpr.kappa = s;
      cpr.lambda = std::max(0.0, cpr.lambda + (s - *cpr.kappa));
      const double scale = lr * cpr.lambda * 2.0 / static_cast<double>(grp.size());
      for (double& x : theta) x -= scale * x;
    }
  }

 private:
  std::int64_t fix_step_ = 0;
};

}  // namespace fob
