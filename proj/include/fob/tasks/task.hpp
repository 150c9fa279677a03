// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fob/error.hpp"
#include "fob/node.hpp"
#include "fob/rng.hpp"

namespace fob {

using ParamVector = std::vector<double>;

enum class MetricKind { accuracy, rmse, loss };
enum class Direction { maximize, minimize };

struct MetricSpec {
  MetricKind kind = MetricKind::loss;
  Direction direction = Direction::minimize;

  static MetricSpec of(MetricKind kind) {
    return {kind, kind == MetricKind::accuracy ? Direction::maximize : Direction::minimize};
  }

  /// True when `a` is strictly better than `b`.
  bool better(double a, double b) const {
    return direction == Direction::maximize ? a > b : a < b;
  }

  friend bool operator==(const MetricSpec&, const MetricSpec&) = default;
};

inline std::string to_string(MetricKind k) {
  switch (k) {
    case MetricKind::accuracy: return "accuracy";
    case MetricKind::rmse: return "rmse";
    case MetricKind::loss: return "loss";
  }
  return "loss";
}

inline std::string to_string(Direction d) {
  return d == Direction::maximize ? "maximize" : "minimize";
}

inline MetricKind metric_kind_from(const std::string& s) {
  if (s == "accuracy") return MetricKind::accuracy;
  if (s == "rmse") return MetricKind::rmse;
  if (s == "loss") return MetricKind::loss;
  throw SchemaError("unknown metric kind '" + s + "'");
}

/// A contiguous slice of the parameter vector sharing regularization
/// eligibility. `rows x cols` is the slice's logical shape; vectors have
/// cols == 1.
struct ParamGroup {
  std::string name;
  std::size_t start = 0;
  std::size_t end = 0;
  bool weight_decay_eligible = true;
  std::size_t rows = 0;
  std::size_t cols = 1;

  std::size_t size() const { return end - start; }
  bool is_matrix() const { return rows > 1 && cols > 1; }

  friend bool operator==(const ParamGroup&, const ParamGroup&) = default;
};

/// Row-major inputs [n x d] with one target per row. `source_index` records
/// which generated example each row came from.
struct DataSplit {
  std::size_t n = 0;
  std::size_t d = 0;
  std::vector<double> inputs;
  std::vector<double> targets;
  std::vector<std::size_t> source_index;

  std::span<const double> row(std::size_t i) const { return {inputs.data() + i * d, d}; }

  friend bool operator==(const DataSplit&, const DataSplit&) = default;
};

enum class SplitName { train, val, test };

struct LossGrad {
  double loss = 0;
  ParamVector grad;
};

/// A model with its fixed train/val/test data and metric. Immutable once
/// built, so one instance may serve many concurrent runs.
class TaskInstance {
 public:
  virtual ~TaskInstance() = default;

  const std::string& name() const { return name_; }
  const std::vector<ParamGroup>& groups() const { return groups_; }
  const MetricSpec& metric() const { return metric_; }
  std::int64_t max_epochs() const { return max_epochs_; }
  std::int64_t batch_size() const { return batch_size_; }
  std::size_t num_params() const { return groups_.empty() ? 0 : groups_.back().end; }

  const DataSplit& split(SplitName s) const {
    switch (s) {
      case SplitName::train: return train_;
      case SplitName::val: return val_;
      case SplitName::test: return test_;
    }
    return train_;
  }
  const DataSplit& train() const { return train_; }
  const DataSplit& val() const { return val_; }
  const DataSplit& test() const { return test_; }

  /// Initial parameters drawn from the run's init stream.
  virtual ParamVector init_params(Xoshiro256& rng) const = 0;

  ParamVector initial_params(std::uint64_t init_seed) const {
    Xoshiro256 rng(init_seed);
    return init_params(rng);
  }

  /// Parameters built along with the instance, drawn with the data seed.
  const ParamVector& params() const { return params_; }

  /// Mean per-example loss over `batch` (row indices into `data`) and its
  /// exact gradient.
  LossGrad forward_backward(std::span<const double> params, const DataSplit& data,
                            std::span<const std::size_t> batch) const {
    check_params(params);
    if (batch.empty()) throw ShapeMismatch("empty batch");
    for (auto i : batch)
      if (i >= data.n) throw ShapeMismatch("batch index out of range");
    return loss_and_grad(params, data, batch);
  }

  LossGrad forward_backward(std::span<const double> params, const DataSplit& data) const {
    std::vector<std::size_t> all(data.n);
    for (std::size_t i = 0; i < data.n; ++i) all[i] = i;
    return forward_backward(params, data, all);
  }

  /// Metric value over a whole split.
  double evaluate(std::span<const double> params, SplitName s) const {
    check_params(params);
    return metric_value(params, split(s));
  }

 protected:
  virtual LossGrad loss_and_grad(std::span<const double> params, const DataSplit& data,
                                 std::span<const std::size_t> batch) const = 0;
  virtual double metric_value(std::span<const double> params, const DataSplit& data) const = 0;

  void check_params(std::span<const double> params) const {
    if (params.size() != num_params())
      throw ShapeMismatch("task '" + name_ + "' expects " + std::to_string(num_params()) +
                          " parameters, got " + std::to_string(params.size()));
  }

  std::string name_;
  std::vector<ParamGroup> groups_;
  MetricSpec metric_;
  std::int64_t max_epochs_ = 1;
  std::int64_t batch_size_ = 1;
  DataSplit train_, val_, test_;
  ParamVector params_;
};

namespace detail {

inline std::int64_t positive_int(const Node& cfg, const char* key, std::int64_t fallback) {
  const Node* n = cfg.find(key);
  std::int64_t v = n ? n->as_int(key) : fallback;
  if (v <= 0) throw BadParameter(std::string("'") + key + "' must be positive");
  return v;
}

inline double real_param(const Node& cfg, const char* key, double fallback) {
  const Node* n = cfg.find(key);
  return n ? n->as_double(key) : fallback;
}

// Rows of zeros for tasks whose loss does not depend on data.
inline DataSplit dummy_split(std::size_t n, std::size_t first_index) {
  DataSplit s;
  s.n = n;
  s.d = 1;
  s.inputs.assign(n, 0.0);
  s.targets.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) s.source_index.push_back(first_index + i);
  return s;
}

}  // namespace detail

}  // namespace fob
