// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fob/rng.hpp"
#include "fob/tasks/task.hpp"

namespace fob {

namespace detail {

// Softmax cross-entropy for one example. Writes dloss/dlogits into `dlogits`
// and returns the loss.
inline double softmax_xent(std::span<const double> logits, std::size_t label,
                           std::span<double> dlogits) {
  double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    dlogits[k] = std::exp(logits[k] - mx);
    sum += dlogits[k];
  }
  for (std::size_t k = 0; k < logits.size(); ++k) dlogits[k] /= sum;
  double loss = -(logits[label] - mx - std::log(sum));
  dlogits[label] -= 1.0;
  return loss;
}

// First index of the maximum, so exact ties go to class 0.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < v.size(); ++k)
    if (v[k] > v[best]) best = k;
  return best;
}

struct SplitSizes {
  std::size_t train, val, test;
};

// Generates the three splits in sequence from one stream; labels alternate
// 0, 1, 0, ... so each split is balanced up to one example.
template <class Sampler>
void generate_splits(Xoshiro256& rng, SplitSizes sizes, std::size_t d, Sampler&& sample,
                     DataSplit& train, DataSplit& val, DataSplit& test) {
  std::size_t counter = 0;
  auto fill = [&](DataSplit& s, std::size_t n) {
    s.n = n;
    s.d = d;
    s.inputs.resize(n * d);
    s.targets.resize(n);
    s.source_index.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t label = i % 2;
      sample(rng, label, std::span<double>(s.inputs.data() + i * d, d));
      s.targets[i] = static_cast<double>(label);
      s.source_index[i] = counter++;
    }
  };
  fill(train, sizes.train);
  fill(val, sizes.val);
  fill(test, sizes.test);
}

inline SplitSizes read_sizes(const Node& cfg, SplitSizes fallback) {
  return {static_cast<std::size_t>(positive_int(cfg, "num_train", fallback.train)),
          static_cast<std::size_t>(positive_int(cfg, "num_val", fallback.val)),
          static_cast<std::size_t>(positive_int(cfg, "num_test", fallback.test))};
}

}  // namespace detail

/// Shared pieces of the softmax classifiers: accuracy metric over a split
/// and mean cross-entropy with backprop over a batch.
class ClassifierTask : public TaskInstance {
 protected:
  static constexpr std::size_t kClasses = 2;

  // Fills `logits` for one input, keeping whatever activations backward needs
  // in `scratch`.
  virtual void forward_one(std::span<const double> p, std::span<const double> x,
                           std::span<double> logits, std::vector<double>& scratch) const = 0;
  // Accumulates the gradient contribution of one example given dloss/dlogits.
  virtual void backward_one(std::span<const double> p, std::span<const double> x,
                            std::span<const double> dlogits, const std::vector<double>& scratch,
                            std::span<double> grad) const = 0;

  LossGrad loss_and_grad(std::span<const double> p, const DataSplit& data,
                         std::span<const std::size_t> batch) const override {
    LossGrad out;
    out.grad.assign(num_params(), 0.0);
    double logits[kClasses], dlogits[kClasses];
    std::vector<double> scratch;
    for (auto i : batch) {
      auto x = data.row(i);
      forward_one(p, x, logits, scratch);
      out.loss += detail::softmax_xent(logits, static_cast<std::size_t>(data.targets[i]), dlogits);
      backward_one(p, x, dlogits, scratch, out.grad);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    out.loss *= inv;
    for (auto& g : out.grad) g *= inv;
    return out;
  }

  double metric_value(std::span<const double> p, const DataSplit& data) const override {
    double logits[kClasses];
    std::vector<double> scratch;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.n; ++i) {
      forward_one(p, data.row(i), logits, scratch);
      if (detail::argmax(logits) == static_cast<std::size_t>(data.targets[i])) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.n);
  }
};

/// Logistic (softmax) regression on two Gaussian blobs whose centres sit at
/// +/- separation/2 along the diagonal.
class BlobsLogregTask final : public ClassifierTask {
 public:
  BlobsLogregTask(const Node& cfg, std::uint64_t data_seed) {
    name_ = "blobs_logreg";
    metric_ = MetricSpec::of(MetricKind::accuracy);
    dim_ = static_cast<std::size_t>(detail::positive_int(cfg, "dim", 2));
    max_epochs_ = detail::positive_int(cfg, "max_epochs", 30);
    batch_size_ = detail::positive_int(cfg, "batch_size", 32);
    double sep = detail::real_param(cfg, "separation", 4.0);
    double spread = detail::real_param(cfg, "spread", 1.0);
    if (!(spread > 0)) throw BadParameter("'spread' must be positive");
    auto sizes = detail::read_sizes(cfg, {512, 128, 128});

    const std::size_t w = kClasses * dim_;
    groups_ = {{"weight", 0, w, true, kClasses, dim_},
               {"bias", w, w + kClasses, false, kClasses, 1}};

    Xoshiro256 rng(data_seed);
    const double offset = 0.5 * sep / std::sqrt(static_cast<double>(dim_));
    auto sample = [&](Xoshiro256& r, std::size_t label, std::span<double> x) {
      const double sign = label == 0 ? -1.0 : 1.0;
      for (auto& xi : x) xi = sign * offset + spread * r.normal();
    };
    detail::generate_splits(rng, sizes, dim_, sample, train_, val_, test_);
    params_ = initial_params(data_seed);
  }

  ParamVector init_params(Xoshiro256& rng) const override {
    ParamVector p(num_params(), 0.0);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim_));
    for (std::size_t i = 0; i < kClasses * dim_; ++i) p[i] = 0.1 * scale * rng.normal();
    return p;
  }

 protected:
  void forward_one(std::span<const double> p, std::span<const double> x, std::span<double> logits,
                   std::vector<double>&) const override {
    const double* b = p.data() + kClasses * dim_;
    for (std::size_t k = 0; k < kClasses; ++k) {
      double s = b[k];
      for (std::size_t j = 0; j < dim_; ++j) s += p[k * dim_ + j] * x[j];
      logits[k] = s;
    }
  }

  void backward_one(std::span<const double>, std::span<const double> x,
                    std::span<const double> dlogits, const std::vector<double>&,
                    std::span<double> grad) const override {
    for (std::size_t k = 0; k < kClasses; ++k) {
      for (std::size_t j = 0; j < dim_; ++j) grad[k * dim_ + j] += dlogits[k] * x[j];
      grad[kClasses * dim_ + k] += dlogits[k];
    }
  }

 private:
  std::size_t dim_ = 2;
};

/// Two-layer tanh MLP on two interleaved 2-D spirals.
class MlpSynthTask final : public ClassifierTask {
 public:
  MlpSynthTask(const Node& cfg, std::uint64_t data_seed) {
    name_ = "mlp_synth";
    metric_ = MetricSpec::of(MetricKind::accuracy);
    const Node* model = cfg.find("model");
    hidden_ = static_cast<std::size_t>(
        detail::positive_int(model ? *model : Node::map(), "num_hidden", 32));
    max_epochs_ = detail::positive_int(cfg, "max_epochs", 20);
    batch_size_ = detail::positive_int(cfg, "batch_size", 32);
    const double turns = detail::real_param(cfg, "turns", 1.0);
    const double noise = detail::real_param(cfg, "noise", 0.05);
    if (!(turns > 0)) throw BadParameter("'turns' must be positive");
    if (!(noise >= 0)) throw BadParameter("'noise' must be non-negative");
    auto sizes = detail::read_sizes(cfg, {1024, 256, 256});

    const std::size_t h = hidden_;
    w1_ = 0;
    b1_ = w1_ + h * kIn;
    w2_ = b1_ + h;
    b2_ = w2_ + kClasses * h;
    groups_ = {{"W1", w1_, b1_, true, h, kIn},
               {"b1", b1_, w2_, false, h, 1},
               {"W2", w2_, b2_, true, kClasses, h},
               {"b2", b2_, b2_ + kClasses, false, kClasses, 1}};

    Xoshiro256 rng(data_seed);
    auto sample = [&](Xoshiro256& r, std::size_t label, std::span<double> x) {
      const double t = r.uniform();
      const double angle =
          2.0 * std::numbers::pi * turns * t + (label == 0 ? 0.0 : std::numbers::pi);
      const double radius = 0.1 + 0.9 * t;
      x[0] = radius * std::cos(angle) + noise * r.normal();
      x[1] = radius * std::sin(angle) + noise * r.normal();
    };
    detail::generate_splits(rng, sizes, kIn, sample, train_, val_, test_);
    params_ = initial_params(data_seed);
  }

  std::size_t num_hidden() const { return hidden_; }

  /// Glorot-normal weights, zero biases.
  ParamVector init_params(Xoshiro256& rng) const override {
    ParamVector p(num_params(), 0.0);
    const double s1 = std::sqrt(2.0 / static_cast<double>(kIn + hidden_));
    const double s2 = std::sqrt(2.0 / static_cast<double>(hidden_ + kClasses));
    for (std::size_t i = w1_; i < b1_; ++i) p[i] = s1 * rng.normal();
    for (std::size_t i = w2_; i < b2_; ++i) p[i] = s2 * rng.normal();
    return p;
  }

 protected:
  void forward_one(std::span<const double> p, std::span<const double> x, std::span<double> logits,
                   std::vector<double>& hidden) const override {
    hidden.resize(hidden_);
    for (std::size_t j = 0; j < hidden_; ++j) {
      double z = p[b1_ + j];
      for (std::size_t i = 0; i < kIn; ++i) z += p[w1_ + j * kIn + i] * x[i];
      hidden[j] = std::tanh(z);
    }
    for (std::size_t k = 0; k < kClasses; ++k) {
      double z = p[b2_ + k];
      for (std::size_t j = 0; j < hidden_; ++j) z += p[w2_ + k * hidden_ + j] * hidden[j];
      logits[k] = z;
    }
  }

  void backward_one(std::span<const double> p, std::span<const double> x,
                    std::span<const double> dlogits, const std::vector<double>& hidden,
                    std::span<double> grad) const override {
    for (std::size_t k = 0; k < kClasses; ++k) {
      grad[b2_ + k] += dlogits[k];
      for (std::size_t j = 0; j < hidden_; ++j) grad[w2_ + k * hidden_ + j] += dlogits[k] * hidden[j];
    }
    for (std::size_t j = 0; j < hidden_; ++j) {
      double dh = 0;
      for (std::size_t k = 0; k < kClasses; ++k) dh += p[w2_ + k * hidden_ + j] * dlogits[k];
      const double dz = dh * (1.0 - hidden[j] * hidden[j]);
      grad[b1_ + j] += dz;
      for (std::size_t i = 0; i < kIn; ++i) grad[w1_ + j * kIn + i] += dz * x[i];
    }
  }

 private:
  static constexpr std::size_t kIn = 2;
  std::size_t hidden_ = 32;
  std::size_t w1_ = 0, b1_ = 0, w2_ = 0, b2_ = 0;
};

}  // namespace fob
