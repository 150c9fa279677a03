// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <algorithm>
#include <cmath>

#include "fob/optim/optimizer.hpp"

namespace fob {

/// Adafactor without first moment, driven by the shared schedule's lr (no
/// relative step sizing or parameter scaling). Matrix-shaped groups keep
/// row and column means of g²; other groups keep a full second moment.
class Adafactor final : public Optimizer {
 public:
  Adafactor(OptimizerConfig config, std::vector<ParamGroup> groups)
      : Optimizer(std::move(config), std::move(groups)) {
    detail::check_schedule(config_);
    detail::require(config_.weight_decay >= 0, "weight_decay must be non-negative");
    detail::require(config_.epsilon > 0, "epsilon must be positive");
    detail::require(config_.clip_threshold > 0, "clip_threshold must be positive");
    detail::require(config_.decay_rate < 0, "decay_rate must be negative");
  }

  OptimizerState init_state(std::span<const double>) const override {
    OptimizerState s;
    s.name = config_.name;
    for (const auto& g : groups_) {
      GroupState gs;
      if (g.is_matrix()) {
        gs.buffers["row"].assign(g.rows, 0.0);
        gs.buffers["col"].assign(g.cols, 0.0);
      } else {
        gs.buffers["v"].assign(g.size(), 0.0);
      }
      s.groups.push_back(std::move(gs));
    }
    return s;
  }

 protected:
  void apply(std::span<double> p, std::span<const double> g, OptimizerState& state,
             double lr) const override {
    const std::int64_t t = ++state.step_count;
    const double beta = 1.0 - std::pow(static_cast<double>(t), config_.decay_rate);
    std::vector<double> u;
    for (std::size_t gi = 0; gi < groups_.size(); ++gi) {
      const auto& grp = groups_[gi];
      auto grad = g.subspan(grp.start, grp.size());
      u.assign(grp.size(), 0.0);
      if (grp.is_matrix()) {
        const std::size_t rows = grp.rows, cols = grp.cols;
        auto& r = state.groups[gi].buffer("row");
        auto& c = state.groups[gi].buffer("col");
        for (std::size_t i = 0; i < rows; ++i) {
          double s = 0;
          for (std::size_t j = 0; j < cols; ++j) s += grad[i * cols + j] * grad[i * cols + j];
          r[i] = beta * r[i] + (1.0 - beta) * (s / static_cast<double>(cols));
        }
        for (std::size_t j = 0; j < cols; ++j) {
          double s = 0;
          for (std::size_t i = 0; i < rows; ++i) s += grad[i * cols + j] * grad[i * cols + j];
          c[j] = beta * c[j] + (1.0 - beta) * (s / static_cast<double>(rows));
        }
        double rmean = 0;
        for (double x : r) rmean += x;
        rmean /= static_cast<double>(rows);
        for (std::size_t i = 0; i < rows; ++i)
          for (std::size_t j = 0; j < cols; ++j) {
            const double vhat = rmean > 0 ? r[i] * c[j] / rmean : 0.0;
            u[i * cols + j] = grad[i * cols + j] / std::sqrt(vhat + config_.epsilon);
          }
      } else {
        auto& v = state.groups[gi].buffer("v");
        for (std::size_t k = 0; k < grp.size(); ++k) {
          v[k] = beta * v[k] + (1.0 - beta) * grad[k] * grad[k];
          u[k] = grad[k] / std::sqrt(v[k] + config_.epsilon);
        }
      }
      double ms = 0;
      for (double x : u) ms += x * x;
      const double rms = std::sqrt(ms / static_cast<double>(u.size()));
      const double denom = std::max(1.0, rms / config_.clip_threshold);
      const double decay = 1.0 - lr * (grp.weight_decay_eligible ? config_.weight_decay : 0.0);
      for (std::size_t k = 0; k < grp.size(); ++k) {
        const std::size_t i = grp.start + k;
        p[i] = p[i] * decay - lr * (u[k] / denom);
      }
    }
  }
};

}  // namespace fob
