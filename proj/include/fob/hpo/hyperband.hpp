// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fob/error.hpp"

namespace fob {

struct RungPlan {
  std::int64_t n_configs;
  std::int64_t budget;

  friend bool operator==(const RungPlan&, const RungPlan&) = default;
};

struct BracketPlan {
  std::int64_t s;
  std::vector<RungPlan> rungs;

  friend bool operator==(const BracketPlan&, const BracketPlan&) = default;
};

/// floor(log_eta R) computed with integers.
inline std::int64_t hyperband_s_max(std::int64_t R, std::int64_t eta) {
  std::int64_t s = 0;
  for (std::int64_t p = eta; p <= R; p *= eta) ++s;
  return s;
}

/// Brackets s = s_max..0. Bracket s starts n = ceil((s_max+1) eta^s / (s+1))
/// configs at budget R eta^-s; rung i keeps floor(n eta^-i) configs at
/// budget round(R eta^(i-s)), never below one epoch.
inline std::vector<BracketPlan> hyperband_schedule(std::int64_t R, std::int64_t eta) {
  if (R < 1) throw BadParameter("Hyperband needs R >= 1");
  if (eta < 2) throw BadParameter("Hyperband needs eta >= 2");
  const std::int64_t s_max = hyperband_s_max(R, eta);
  std::vector<BracketPlan> out;
  for (std::int64_t s = s_max; s >= 0; --s) {
    std::int64_t pow_s = 1;
    for (std::int64_t k = 0; k < s; ++k) pow_s *= eta;
    const std::int64_t n = ((s_max + 1) * pow_s + s) / (s + 1);
    BracketPlan b{s, {}};
    std::int64_t keep = n, pow_i = 1;
    for (std::int64_t i = 0; i <= s; ++i) {
      const double r = static_cast<double>(R) * static_cast<double>(pow_i) / static_cast<double>(pow_s);
      b.rungs.push_back({keep, std::max<std::int64_t>(1, std::llround(r))});
      keep /= eta;
      pow_i *= eta;
    }
    out.push_back(std::move(b));
  }
  return out;
}

/// Same bracket started with only `n` configs (used when the trial budget
/// runs out mid-iteration). Rung sizes shrink by eta but never reach zero.
inline BracketPlan truncate_bracket(const BracketPlan& b, std::int64_t n, std::int64_t eta) {
  BracketPlan t = b;
  std::int64_t keep = n;
  for (auto& rung : t.rungs) {
    rung.n_configs = std::min(rung.n_configs, std::max<std::int64_t>(1, keep));
    keep /= eta;
  }
  return t;
}

}  // namespace fob
