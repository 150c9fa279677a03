// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <cmath>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "fob/error.hpp"
#include "fob/node.hpp"
#include "fob/rng.hpp"

namespace fob {

struct LogUniform {
  double lo, hi;
};
struct Uniform {
  double lo, hi;
};
struct Categorical {
  std::vector<Node> values;
};

using Distribution = std::variant<LogUniform, Uniform, Categorical>;

/// Hyperparameter path -> distribution. Paths are dotted config paths such
/// as `optimizer.learning_rate`; iteration (and so sampling) is in path order.
struct SearchSpace {
  std::map<std::string, Distribution> entries;

  void add(const std::string& path, Distribution d) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, Categorical>) {
            if (x.values.empty()) throw EmptyList(path + ": categorical needs values");
          } else {
            if (!(x.lo < x.hi)) throw BadParameter(path + ": need lo < hi");
            if constexpr (std::is_same_v<T, LogUniform>)
              if (!(x.lo > 0)) throw BadParameter(path + ": log range must be positive");
          }
        },
        d);
    entries[path] = std::move(d);
  }
};

/// One draw per entry. Returns a flat map of dotted path -> value.
inline Node sample(const SearchSpace& space, Xoshiro256& rng) {
  Node overlay = Node::map();
  for (const auto& [path, dist] : space.entries) {
    Node v = std::visit(
        [&](const auto& d) -> Node {
          using T = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<T, LogUniform>) {
            return Node(std::exp(rng.uniform(std::log(d.lo), std::log(d.hi))));
          } else if constexpr (std::is_same_v<T, Uniform>) {
            return Node(rng.uniform(d.lo, d.hi));
          } else {
            return d.values[rng.below(d.values.size())];
          }
        },
        dist);
    overlay.set(path, std::move(v));
  }
  return overlay;
}

inline bool contains(const Distribution& d, const Node& v) {
  return std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Categorical>) {
          for (const auto& c : x.values)
            if (c == v) return true;
          return false;
        } else {
          return v.is_number() && v.as_double() >= x.lo && v.as_double() <= x.hi;
        }
      },
      d);
}

/// Parses `{log_uniform: [lo, hi]}`, `{uniform: [lo, hi]}` or
/// `{categorical: [a, b, ...]}` per path.
inline SearchSpace parse_search_space(const Node& n) {
  if (!n.is_map()) throw SchemaError("space must be a mapping of path -> distribution");
  SearchSpace space;
  for (const auto& [path, spec] : n.entries()) {
    if (!spec.is_map() || spec.entries().size() != 1)
      throw SchemaError("space." + path + " must have exactly one distribution key");
    const auto& [kind, args] = spec.entries().front();
    if (!args.is_list()) throw SchemaError("space." + path + "." + kind + " must be a list");
    if (kind == "categorical") {
      space.add(path, Categorical{args.items()});
      continue;
    }
    if (args.items().size() != 2)
      throw SchemaError("space." + path + "." + kind + " needs [lo, hi]");
    const double lo = args.items()[0].as_double(path), hi = args.items()[1].as_double(path);
    if (kind == "log_uniform")
      space.add(path, LogUniform{lo, hi});
    else if (kind == "uniform")
      space.add(path, Uniform{lo, hi});
    else
      throw UnknownName("unknown distribution '" + kind + "' for " + path);
  }
  return space;
}

/// The per-optimizer search spaces of the reference SMAC study. Percentages
/// map to the schedule fractions (0.1% -> 0.001).
inline SearchSpace preset_space(const std::string& optimizer) {
  SearchSpace s;
  s.add("optimizer.learning_rate", LogUniform{1e-5, 1e-1});
  s.add("optimizer.lr_min_factor", LogUniform{1e-3, 1e-1});
  s.add("optimizer.lr_warmup", LogUniform{1e-3, 1.0});
  if (optimizer == "adamw_baseline") {
    s.add("optimizer.weight_decay", LogUniform{1e-5, 1.0});
    s.add("optimizer.one_minus_beta1", LogUniform{1e-2, 2e-1});
    s.add("optimizer.beta2", Uniform{0.9, 0.999});
  } else if (optimizer == "adamcpr") {
    s.add("optimizer.one_minus_beta1", LogUniform{1e-2, 2e-1});
    s.add("optimizer.beta2", Uniform{0.9, 0.999});
    s.add("optimizer.kappa_init_param", LogUniform{1.0, 19550.0});
    s.add("optimizer.kappa_init_method", Categorical{{Node("warm_start")}});
  } else if (optimizer == "sgd_baseline") {
    s.add("optimizer.weight_decay", LogUniform{1e-5, 1.0});
    s.add("optimizer.momentum", Uniform{0.0, 1.0});
  } else {
    throw UnknownName("no preset search space for optimizer '" + optimizer + "'");
  }
  return s;
}

}  // namespace fob
