// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#include <gtest/gtest.h>

#include <cmath>

#include "fob/optim/registry.hpp"
#include "support/optim_cases.hpp"
#include "support/oracles.hpp"

using namespace fob;
using testing_support::random_case;

namespace {

std::vector<ParamGroup> one_group(std::size_t n, bool eligible = true) {
  return {{"w", 0, n, eligible, n, 1}};
}

OptimizerConfig cfg(const std::string& name) {
  OptimizerConfig c;
  c.name = name;
  return c;
}

void expect_close(const std::vector<double>& a, const std::vector<double>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LT(oracle::rel_err(a[i], b[i]), 1e-12) << i;
}

}  // namespace

TEST(Configure, AdamwZeroState) {
  std::vector<ParamGroup> groups{{"a", 0, 2, true, 2, 1}, {"b", 2, 5, true, 3, 1},
                                 {"c", 5, 6, false, 1, 1}, {"d", 6, 10, true, 2, 2}};
  std::vector<double> p(10, 1.0);
  auto co = configure_optimizer({p, groups}, cfg("adamw_baseline"), 1);
  EXPECT_EQ(co.state.step_count, 0);
  ASSERT_EQ(co.state.groups.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(co.state.groups[i].buffer("m"), std::vector<double>(groups[i].size(), 0.0));
    EXPECT_EQ(co.state.groups[i].buffer("v"), std::vector<double>(groups[i].size(), 0.0));
  }
}

TEST(Configure, KappaFixStepFromWarmup) {
  auto c = cfg("adamcpr");
  c.kappa_init_param = 4;
  std::vector<double> p(3, 1.0);
  auto co = configure_optimizer({p, one_group(3)}, c, 10);
  ASSERT_TRUE(co.state.groups[0].cpr);
  EXPECT_EQ(co.state.groups[0].cpr->fix_step, 40);
  EXPECT_FALSE(co.state.groups[0].cpr->kappa);
}

TEST(Configure, UnknownNameAndBadValues) {
  std::vector<double> p(1, 1.0);
  EXPECT_THROW(configure_optimizer({p, one_group(1)}, cfg("adamx"), 1), UnknownName);
  auto c = cfg("adamw_baseline");
  c.beta2 = 1.5;
  EXPECT_THROW(configure_optimizer({p, one_group(1)}, c, 1), BadHyperparameter);
  c = cfg("sgd_baseline");
  c.momentum = -0.1;
  EXPECT_THROW(configure_optimizer({p, one_group(1)}, c, 1), BadHyperparameter);
  c = cfg("adamcpr");
  c.kappa_init_method = "dependent";
  EXPECT_THROW(configure_optimizer({p, one_group(1)}, c, 1), BadHyperparameter);
}

TEST(Configure, AliasResolves) {
  std::vector<double> p(1, 1.0);
  auto co = configure_optimizer({p, one_group(1)}, cfg("adamcpr_fast"), 1);
  EXPECT_TRUE(co.state.groups[0].cpr.has_value());
}

TEST(Sgd, ScalarExample) {
  auto c = cfg("sgd_baseline");
  c.momentum = 0.9;
  std::vector<double> p{1.0};
  auto co = configure_optimizer({p, one_group(1)}, c, 1);
  std::vector<double> g{0.5};
  co.optimizer->step(p, g, co.state, 0.1);
  EXPECT_DOUBLE_EQ(co.state.groups[0].buffer("velocity")[0], 0.5);
  EXPECT_DOUBLE_EQ(p[0], 0.95);
}

TEST(Sgd, ZeroGradFixedPointAndPlainSgd) {
  auto c = cfg("sgd_baseline");
  std::vector<double> p{1.5, -2.0};
  auto co = configure_optimizer({p, one_group(2)}, c, 1);
  co.optimizer->step(p, std::vector<double>{0.0, 0.0}, co.state, 0.1);
  EXPECT_EQ(p, (std::vector<double>{1.5, -2.0}));
  c.momentum = 0.0;
  auto co2 = configure_optimizer({p, one_group(2)}, c, 1);
  co2.optimizer->step(p, std::vector<double>{1.0, 2.0}, co2.state, 0.1);
  EXPECT_DOUBLE_EQ(p[0], 1.4);
  EXPECT_DOUBLE_EQ(p[1], -2.2);
}

TEST(AdamW, ScalarExample) {
  std::vector<double> p{1.0};
  auto co = configure_optimizer({p, one_group(1)}, cfg("adamw_baseline"), 1);
  co.optimizer->step(p, std::vector<double>{1.0}, co.state, 1e-3);
  EXPECT_LT(std::abs((1.0 - p[0]) - 1e-3), 1e-8 * 1e-3);
  EXPECT_EQ(co.state.step_count, 1);
}

TEST(AdamW, PureDecayOnEligibleOnly) {
  auto c = cfg("adamw_baseline");
  c.weight_decay = 0.5;
  std::vector<ParamGroup> groups{{"w", 0, 2, true, 2, 1}, {"b", 2, 3, false, 1, 1}};
  std::vector<double> p{2.0, -4.0, 3.0};
  auto co = configure_optimizer({p, groups}, c, 1);
  co.optimizer->step(p, std::vector<double>{0, 0, 0}, co.state, 0.1);
  EXPECT_DOUBLE_EQ(p[0], 2.0 * 0.95);
  EXPECT_DOUBLE_EQ(p[1], -4.0 * 0.95);
  EXPECT_EQ(p[2], 3.0);
}

TEST(AdamCpr, StatisticAtFixStep) {
  // fix_step 1: κ is set after the first Adam step from the updated θ.
  auto c = cfg("adamcpr");
  c.kappa_init_param = 1;
  std::vector<double> p{3.0, 4.0};
  auto co = configure_optimizer({p, one_group(2)}, c, 1);
  co.optimizer->step(p, std::vector<double>{0.0, 0.0}, co.state, 0.01);
  ASSERT_TRUE(co.state.groups[0].cpr->kappa);
  EXPECT_DOUBLE_EQ(*co.state.groups[0].cpr->kappa, 12.5);
  EXPECT_EQ(co.state.groups[0].cpr->lambda, 0.0);
  EXPECT_EQ(p, (std::vector<double>{3.0, 4.0}));
}

TEST(AdamCpr, ZeroFixStepUsesInitialParams) {
  auto c = cfg("adamcpr");
  c.kappa_init_param = 0;
  std::vector<double> p{1.0, 1.0};
  auto co = configure_optimizer({p, one_group(2)}, c, 10);
  ASSERT_TRUE(co.state.groups[0].cpr->kappa);
  EXPECT_EQ(*co.state.groups[0].cpr->kappa, 1.0);
}

TEST(AdamCpr, MatchesAdamwBeforeFixStep) {
  Xoshiro256 rng(11);
  auto cpr_cfg = cfg("adamcpr");
  cpr_cfg.kappa_init_param = 4;
  auto w_cfg = cfg("adamw_baseline");
  w_cfg.weight_decay = 0.0;
  std::vector<ParamGroup> groups{{"w", 0, 6, true, 2, 3}, {"b", 6, 8, false, 2, 1}};
  std::vector<double> p(8);
  for (auto& x : p) x = rng.normal();
  auto q = p;
  auto a = configure_optimizer({p, groups}, cpr_cfg, 10);
  auto b = configure_optimizer({q, groups}, w_cfg, 10);
  for (int t = 1; t < 40; ++t) {
    std::vector<double> g(8);
    for (auto& x : g) x = rng.normal();
    a.optimizer->step(p, g, a.state, 1e-2);
    b.optimizer->step(q, g, b.state, 1e-2);
    ASSERT_EQ(p, q) << "step " << t;
    ASSERT_FALSE(a.state.groups[0].cpr->kappa);
  }
  std::vector<double> g(8, 0.1);
  a.optimizer->step(p, g, a.state, 1e-2);
  EXPECT_TRUE(a.state.groups[0].cpr->kappa);
}

TEST(AdamCpr, LambdaNeverNegative) {
  Xoshiro256 rng(5);
  auto c = cfg("adamcpr");
  c.kappa_init_param = 1;
  std::vector<double> p(4);
  for (auto& x : p) x = rng.normal();
  auto co = configure_optimizer({p, one_group(4)}, c, 2);
  std::optional<double> kappa;
  for (int t = 0; t < 200; ++t) {
    std::vector<double> g(4);
    for (auto& x : g) x = rng.normal();
    co.optimizer->step(p, g, co.state, 0.05);
    EXPECT_GE(co.state.groups[0].cpr->lambda, 0.0);
    if (co.state.groups[0].cpr->kappa) {
      if (kappa) EXPECT_EQ(*kappa, *co.state.groups[0].cpr->kappa);
      kappa = co.state.groups[0].cpr->kappa;
    }
  }
}

TEST(Adafactor, ScalarFirstStep) {
  std::vector<double> p{1.0};
  auto c = cfg("adafactor");
  c.epsilon = 1e-30;
  auto co = configure_optimizer({p, one_group(1)}, c, 1);
  co.optimizer->step(p, std::vector<double>{0.5}, co.state, 0.01);
  EXPECT_DOUBLE_EQ(p[0], 0.99);
}

TEST(Adafactor, RankOneMatchesUnfactored) {
  // g = a b^T makes R_i C_j / mean(R) equal g_ij^2 exactly in exact
  // arithmetic, so the matrix group must track a full accumulator.
  const std::vector<double> a{0.5, -2.0}, b{1.5, 0.25};
  std::vector<double> g(4);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) g[i * 2 + j] = a[i] * b[j];
  std::vector<double> pm{1, 2, 3, 4}, pv = pm;
  auto c = cfg("adafactor");
  std::vector<ParamGroup> mat{{"m", 0, 4, true, 2, 2}};
  std::vector<ParamGroup> vec{{"m", 0, 4, true, 4, 1}};
  auto m = configure_optimizer({pm, mat}, c, 1);
  auto v = configure_optimizer({pv, vec}, c, 1);
  for (int t = 0; t < 5; ++t) {
    m.optimizer->step(pm, g, m.state, 0.01);
    v.optimizer->step(pv, g, v.state, 0.01);
  }
  for (std::size_t i = 0; i < 4; ++i) EXPECT_LT(oracle::rel_err(pm[i], pv[i]), 1e-12);
}

TEST(Adafactor, ZeroGradFixedPoint) {
  std::vector<ParamGroup> mat{{"m", 0, 4, true, 2, 2}};
  std::vector<double> p{1, 2, 3, 4};
  auto co = configure_optimizer({p, mat}, cfg("adafactor"), 1);
  co.optimizer->step(p, std::vector<double>(4, 0.0), co.state, 0.01);
  EXPECT_EQ(p, (std::vector<double>{1, 2, 3, 4}));
}

TEST(Step, RejectsBadShapesAndNonFinite) {
  std::vector<double> p{1.0, 2.0};
  auto co = configure_optimizer({p, one_group(2)}, cfg("adamw_baseline"), 1);
  EXPECT_THROW(co.optimizer->step(p, std::vector<double>{1.0}, co.state, 0.1), ShapeMismatch);
  EXPECT_THROW(co.optimizer->step(p, std::vector<double>{NAN, 1.0}, co.state, 0.1), NonFinite);
  EXPECT_THROW(co.optimizer->step(p, std::vector<double>{1.0, INFINITY}, co.state, 0.1), NonFinite);
  std::vector<double> wrong(3, 0.0);
  EXPECT_THROW(co.optimizer->step(wrong, std::vector<double>(3, 0.0), co.state, 0.1), ShapeMismatch);
}

// Randomized agreement with the straight-line references.

TEST(Oracle, SgdRandomized) {
  Xoshiro256 rng(101);
  for (int k = 0; k < 100; ++k) {
    auto cs = random_case(rng);
    auto c = cfg("sgd_baseline");
    c.momentum = rng.uniform();
    c.weight_decay = rng.below(2) ? rng.uniform(0, 0.1) : 0.0;
    auto p = cs.p;
    auto co = configure_optimizer({p, cs.groups}, c, 1);
    oracle::SgdRef ref{c.momentum, c.weight_decay, {}};
    auto q = cs.p;
    for (std::size_t s = 0; s < cs.grads.size(); ++s) {
      co.optimizer->step(p, cs.grads[s], co.state, cs.lrs[s]);
      ref.step(q, cs.grads[s], cs.ref_groups, cs.lrs[s]);
    }
    expect_close(p, q);
    EXPECT_EQ(co.state.step_count, static_cast<std::int64_t>(cs.grads.size()));
  }
}

TEST(Oracle, AdamwRandomized) {
  Xoshiro256 rng(202);
  for (int k = 0; k < 100; ++k) {
    auto cs = random_case(rng);
    auto c = cfg("adamw_baseline");
    c.one_minus_beta1 = std::pow(10.0, rng.uniform(-2, -0.5));
    c.beta2 = 1.0 - std::pow(10.0, rng.uniform(-4, -1));
    c.weight_decay = rng.below(2) ? std::pow(10.0, rng.uniform(-3, 1)) : 0.0;
    auto p = cs.p;
    auto co = configure_optimizer({p, cs.groups}, c, 1);
    oracle::AdamRef ref{c.beta1(), c.beta2, c.epsilon, c.weight_decay, {}, {}};
    auto q = cs.p;
    for (std::size_t s = 0; s < cs.grads.size(); ++s) {
      co.optimizer->step(p, cs.grads[s], co.state, cs.lrs[s]);
      ref.step(q, cs.grads[s], cs.ref_groups, cs.lrs[s]);
    }
    expect_close(p, q);
  }
}

TEST(Oracle, AdamCprRandomized) {
  Xoshiro256 rng(303);
  for (int k = 0; k < 100; ++k) {
    auto cs = random_case(rng);
    auto c = cfg("adamcpr");
    c.kappa_init_param = static_cast<double>(rng.below(4));
    const std::int64_t warm = static_cast<std::int64_t>(rng.below(3));
    auto p = cs.p;
    auto co = configure_optimizer({p, cs.groups}, c, warm);
    oracle::CprRef ref{{c.beta1(), c.beta2, c.epsilon, 0.0, {}, {}},
                       std::lround(c.kappa_init_param * static_cast<double>(warm)), {}, {}};
    auto q = cs.p;
    ref.prime(q, cs.ref_groups);
    for (std::size_t s = 0; s < cs.grads.size(); ++s) {
      co.optimizer->step(p, cs.grads[s], co.state, cs.lrs[s]);
      ref.step(q, cs.grads[s], cs.ref_groups, cs.lrs[s]);
    }
    expect_close(p, q);
  }
}

TEST(Oracle, AdafactorRandomized) {
  Xoshiro256 rng(404);
  for (int k = 0; k < 100; ++k) {
    auto cs = random_case(rng);
    auto c = cfg("adafactor");
    c.weight_decay = rng.below(2) ? rng.uniform(0, 0.1) : 0.0;
    auto p = cs.p;
    auto co = configure_optimizer({p, cs.groups}, c, 1);
    oracle::AdafactorRef ref{c.epsilon, c.clip_threshold, c.decay_rate, c.weight_decay, 0, {}, {}, {}};
    auto q = cs.p;
    for (std::size_t s = 0; s < cs.grads.size(); ++s) {
      co.optimizer->step(p, cs.grads[s], co.state, cs.lrs[s]);
      ref.step(q, cs.grads[s], cs.ref_groups, cs.lrs[s]);
    }
    expect_close(p, q);
  }
}

TEST(Determinism, IdenticalInputsIdenticalTrajectories) {
  for (const char* name : {"sgd_baseline", "adamw_baseline", "adamcpr", "adafactor"}) {
    Xoshiro256 r1(9), r2(9);
    auto c1 = random_case(r1), c2 = random_case(r2);
    auto p = c1.p, q = c2.p;
    auto a = configure_optimizer({p, c1.groups}, cfg(name), 1);
    auto b = configure_optimizer({q, c2.groups}, cfg(name), 1);
    for (std::size_t s = 0; s < c1.grads.size(); ++s) {
      a.optimizer->step(p, c1.grads[s], a.state, c1.lrs[s]);
      b.optimizer->step(q, c2.grads[s], b.state, c2.lrs[s]);
    }
    EXPECT_EQ(p, q) << name;
    EXPECT_EQ(a.state, b.state) << name;
  }
}
