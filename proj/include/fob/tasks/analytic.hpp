// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#pragma once

#include <cmath>
#include <memory>

#include "fob/rng.hpp"
#include "fob/tasks/task.hpp"

namespace fob {

/// loss(theta) = 1/2 theta^T A theta with a fixed SPD matrix A whose
/// eigenvalues are log-spaced on [1, condition_number].
///
/// The data splits hold dummy rows: every row carries the same loss, so
/// batch size only controls how many optimizer steps an epoch contains.
class QuadraticTask final : public TaskInstance {
 public:
  QuadraticTask(const Node& cfg, std::uint64_t data_seed) {
    name_ = "quadratic";
    metric_ = MetricSpec::of(MetricKind::loss);
    dim_ = static_cast<std::size_t>(detail::positive_int(cfg, "dim", 10));
    max_epochs_ = detail::positive_int(cfg, "max_epochs", 10);
    batch_size_ = detail::positive_int(cfg, "batch_size", 1);
    auto num_train = static_cast<std::size_t>(detail::positive_int(cfg, "num_train", 20));
    double cond = detail::real_param(cfg, "condition_number", 10.0);
    init_scale_ = detail::real_param(cfg, "init_scale", 1.0);
    if (!(cond >= 1.0)) throw BadParameter("'condition_number' must be >= 1");
    if (!(init_scale_ > 0)) throw BadParameter("'init_scale' must be positive");

    groups_ = {{"theta", 0, dim_, true, dim_, 1}};
    train_ = detail::dummy_split(num_train, 0);
    val_ = detail::dummy_split(1, num_train);
    test_ = detail::dummy_split(1, num_train + 1);

    // A = Q diag(lambda) Q^T with Q from Gram-Schmidt on a Gaussian matrix.
    Xoshiro256 rng(data_seed);
    std::vector<double> q(dim_ * dim_);
    for (auto& x : q) x = rng.normal();
    for (std::size_t i = 0; i < dim_; ++i) {
      double* qi = &q[i * dim_];
      for (std::size_t j = 0; j < i; ++j) {
        const double* qj = &q[j * dim_];
        double dot = 0;
        for (std::size_t k = 0; k < dim_; ++k) dot += qi[k] * qj[k];
        for (std::size_t k = 0; k < dim_; ++k) qi[k] -= dot * qj[k];
      }
      double norm = 0;
      for (std::size_t k = 0; k < dim_; ++k) norm += qi[k] * qi[k];
      norm = std::sqrt(norm);
      for (std::size_t k = 0; k < dim_; ++k) qi[k] /= norm;
    }
    std::vector<double> lambda(dim_);
    for (std::size_t i = 0; i < dim_; ++i)
      lambda[i] = dim_ == 1 ? 1.0 : std::pow(cond, static_cast<double>(i) / (dim_ - 1));
    a_.assign(dim_ * dim_, 0.0);
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = 0; c < dim_; ++c) {
        double s = 0;
        for (std::size_t k = 0; k < dim_; ++k) s += q[k * dim_ + r] * lambda[k] * q[k * dim_ + c];
        a_[r * dim_ + c] = s;
      }
    // exact symmetry
    for (std::size_t r = 0; r < dim_; ++r)
      for (std::size_t c = r + 1; c < dim_; ++c) a_[c * dim_ + r] = a_[r * dim_ + c];
    params_ = initial_params(data_seed);
  }

  ParamVector init_params(Xoshiro256& rng) const override {
    ParamVector p(dim_);
    for (auto& x : p) x = init_scale_ * rng.normal();
    return p;
  }

  const std::vector<double>& matrix() const { return a_; }

 protected:
  LossGrad loss_and_grad(std::span<const double> p, const DataSplit&,
                         std::span<const std::size_t>) const override {
    LossGrad out;
    out.grad.assign(dim_, 0.0);
    for (std::size_t r = 0; r < dim_; ++r) {
      double s = 0;
      for (std::size_t c = 0; c < dim_; ++c) s += a_[r * dim_ + c] * p[c];
      out.grad[r] = s;
      out.loss += 0.5 * p[r] * s;
    }
    return out;
  }

  double metric_value(std::span<const double> p, const DataSplit& data) const override {
    return loss_and_grad(p, data, {}).loss;
  }

 private:
  std::size_t dim_ = 10;
  double init_scale_ = 1.0;
  std::vector<double> a_;
};

/// f(x, y) = (a - x)^2 + b (y - x^2)^2, started near (-1.2, 1).
class RosenbrockTask final : public TaskInstance {
 public:
  RosenbrockTask(const Node& cfg, std::uint64_t data_seed) {
    name_ = "rosenbrock";
    metric_ = MetricSpec::of(MetricKind::loss);
    a_ = detail::real_param(cfg, "a", 1.0);
    b_ = detail::real_param(cfg, "b", 100.0);
    if (!(b_ > 0)) throw BadParameter("'b' must be positive");
    max_epochs_ = detail::positive_int(cfg, "max_epochs", 10);
    batch_size_ = detail::positive_int(cfg, "batch_size", 1);
    auto num_train = static_cast<std::size_t>(detail::positive_int(cfg, "num_train", 20));
    init_scale_ = detail::real_param(cfg, "init_scale", 0.1);
    if (!(init_scale_ >= 0)) throw BadParameter("'init_scale' must be non-negative");
    groups_ = {{"theta", 0, 2, true, 2, 1}};
    train_ = detail::dummy_split(num_train, 0);
    val_ = detail::dummy_split(1, num_train);
    test_ = detail::dummy_split(1, num_train + 1);
    params_ = initial_params(data_seed);
  }

  ParamVector init_params(Xoshiro256& rng) const override {
    double dx = init_scale_ * rng.normal();
    double dy = init_scale_ * rng.normal();
    return {-1.2 + dx, 1.0 + dy};
  }

 protected:
  LossGrad loss_and_grad(std::span<const double> p, const DataSplit&,
                         std::span<const std::size_t>) const override {
    const double x = p[0], y = p[1];
    const double u = a_ - x, v = y - x * x;
    return {u * u + b_ * v * v, {-2.0 * u - 4.0 * b_ * x * v, 2.0 * b_ * v}};
  }

  double metric_value(std::span<const double> p, const DataSplit& data) const override {
    return loss_and_grad(p, data, {}).loss;
  }

 private:
  double a_ = 1.0, b_ = 100.0, init_scale_ = 0.1;
};

}  // namespace fob
