// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>

#include "fob/error.hpp"

namespace fob {

/// Linear warmup followed by cosine annealing to `min_lr_fraction * base_lr`,
/// stepped once per optimizer step.
struct ScheduleSpec {
  double base_lr = 1e-3;
  std::int64_t total_steps = 2;
  double warmup_fraction = 0.01;
  double min_lr_fraction = 0.01;

  static ScheduleSpec make(double base_lr, std::int64_t total_steps, double warmup_fraction,
                           double min_lr_fraction) {
    ScheduleSpec s{base_lr, total_steps, warmup_fraction, min_lr_fraction};
    s.validate();
    return s;
  }

  void validate() const {
    if (!(base_lr > 0) || !std::isfinite(base_lr))
      throw BadHyperparameter("learning rate must be positive");
    if (total_steps < 2) throw BadParameter("schedule needs at least 2 steps");
    if (!(warmup_fraction > 0 && warmup_fraction <= 1))
      throw BadHyperparameter("lr_warmup must lie in (0, 1]");
    if (!(min_lr_fraction > 0 && min_lr_fraction < 1))
      throw BadHyperparameter("lr_min_factor must lie in (0, 1)");
  }

  std::int64_t requested_warmup_steps() const {
    return std::max<std::int64_t>(
        1, std::llround(warmup_fraction * static_cast<double>(total_steps)));
  }

  /// Warmup length, clamped so at least one annealing step remains.
  std::int64_t warmup_steps() const {
    return std::min(requested_warmup_steps(), total_steps - 1);
  }

  bool warmup_clamped() const { return requested_warmup_steps() > total_steps - 1; }

  double eta_min() const { return min_lr_fraction * base_lr; }
};

/// Learning rate for 0-based optimizer step `step`.
///
/// Warmup rises as base_lr * (step + 1) / w, so the peak sits at step w - 1.
/// The cosine phase runs from that peak (step w - 1) to the floor at step
/// T - 1 over T - w intervals.
inline double lr_at(const ScheduleSpec& spec, std::int64_t step) {
  if (step < 0 || step >= spec.total_steps)
    throw OutOfRange("step " + std::to_string(step) + " outside schedule of " +
                     std::to_string(spec.total_steps) + " steps");
  const std::int64_t w = spec.warmup_steps();
  if (step < w) return spec.base_lr * static_cast<double>(step + 1) / static_cast<double>(w);
  if (step == spec.total_steps - 1) return spec.eta_min();
  const double eta_min = spec.eta_min();
  const double progress =
      static_cast<double>(step - (w - 1)) / static_cast<double>(spec.total_steps - w);
  return eta_min + 0.5 * (spec.base_lr - eta_min) * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace fob
