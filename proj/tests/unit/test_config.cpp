// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#include <gtest/gtest.h>

#include <set>

#include "fob/config.hpp"
#include "fob/rng.hpp"
#include "support/stub_defaults.hpp"

using namespace fob;
using testing_support::fixture_text;
using testing_support::stub_defaults;

namespace {

std::vector<ResolvedRunConfig> expand_text(const std::string& yaml) {
  return expand_grid(load_experiment(yaml, stub_defaults()));
}

}  // namespace

TEST(Yaml, PlainScalarsAreTyped) {
  Node n = parse_yaml("a: 1\nb: 1.e-1\nc: true\nd: hello\ne: '1'\nf: ~\ng: -3.5e2\nh: .inf\n");
  EXPECT_EQ(n.find("a")->kind(), Node::Kind::Int);
  EXPECT_EQ(n.find("b")->kind(), Node::Kind::Float);
  EXPECT_DOUBLE_EQ(n.find("b")->as_double(), 0.1);
  EXPECT_EQ(n.find("c")->kind(), Node::Kind::Bool);
  EXPECT_EQ(n.find("d")->kind(), Node::Kind::String);
  EXPECT_EQ(n.find("e")->kind(), Node::Kind::String);
  EXPECT_TRUE(n.find("f")->is_null());
  EXPECT_DOUBLE_EQ(n.find("g")->as_double(), -350.0);
  EXPECT_TRUE(std::isinf(n.find("h")->as_double()));
}

TEST(Yaml, SyntaxErrorsAndDuplicates) {
  EXPECT_THROW(parse_yaml("a: [1, 2"), SyntaxError);
  EXPECT_THROW(parse_yaml("a: 1\na: 2\n"), SyntaxError);
}

TEST(Yaml, EmitterRoundTrips) {
  Node n = parse_yaml(
      "task:\n  name: quadratic\n  s: 'true'\n  t: '12'\n  x: 1.0\n  y: 1.0e-10\n"
      "  z: [1, 2.5, abc]\n  e: ''\nengine:\n  seed: 3\n");
  Node back = parse_yaml(to_yaml(n));
  EXPECT_EQ(back, n);
  EXPECT_EQ(back.at_path("task.x")->kind(), Node::Kind::Float);
  EXPECT_EQ(back.at_path("task.s")->kind(), Node::Kind::String);
  EXPECT_EQ(back.at_path("task.t")->kind(), Node::Kind::String);
}

TEST(ParseExperiment, RejectsUnknownTopLevelKey) {
  EXPECT_THROW(parse_experiment(std::string("trainer:\n  x: 1\n")), SchemaError);
}

TEST(ParseExperiment, EmptyFileGivesEmptySubtrees) {
  auto spec = parse_experiment(std::string(""));
  EXPECT_TRUE(spec.task().is_map());
  EXPECT_TRUE(spec.optimizer().is_map());
  auto runs = expand_grid(merge_defaults(spec, shipped_defaults()));
  ASSERT_EQ(runs.size(), 1u);
  EXPECT_EQ(runs[0].at("task.name").as_string(), "quadratic");
  EXPECT_EQ(runs[0].at("optimizer.name").as_string(), "adamw_baseline");
}

TEST(ParseExperiment, ProgrammaticTreeMatchesText) {
  Node root = Node::map();
  root.set_path("task.name", Node("mnist"));
  root.set_path("task.max_epochs", Node(10));
  root.set_path("task.model.num_hidden", Node(42));
  root.set_path("optimizer.name", Node("adamw_baseline"));
  root.set_path("optimizer.learning_rate", Node(1.0e-2));
  auto a = expand_grid(merge_defaults(parse_experiment(root), stub_defaults()));
  auto b = expand_text(fixture_text("small_mnist.yaml"));
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(run_id(a[0]), run_id(b[0]));
}

TEST(MergeDefaults, ExperimentValuesWinAndDefaultsFill) {
  auto runs = expand_text(fixture_text("small_mnist.yaml"));
  ASSERT_EQ(runs.size(), 1u);
  const auto& rc = runs[0];
  EXPECT_EQ(rc.at("task.model.num_hidden").as_int(), 42);
  EXPECT_EQ(rc.at("task.batch_size").as_int(), 64);
  EXPECT_DOUBLE_EQ(rc.at("optimizer.learning_rate").as_double(), 1e-2);
  EXPECT_DOUBLE_EQ(rc.at("optimizer.beta2").as_double(), 0.999);
  EXPECT_EQ(rc.at("engine.seed").as_int(), 42);
}

TEST(MergeDefaults, UnknownKeysRejected) {
  EXPECT_THROW(expand_text("task:\n  name: quadratic\n  bogus: 1\n"), SchemaError);
  EXPECT_THROW(expand_text("optimizer:\n  learnin_rate: 1\n"), SchemaError);
  EXPECT_THROW(expand_text("task:\n  name: nope\n"), UnknownName);
  EXPECT_THROW(expand_text("optimizer:\n  name: adamx\n"), UnknownName);
}

TEST(MergeDefaults, AliasKeepsWrittenName) {
  auto runs = expand_text("optimizer:\n  name: adamcpr_fast\n");
  ASSERT_EQ(runs.size(), 1u);
  EXPECT_EQ(runs[0].at("optimizer.name").as_string(), "adamcpr_fast");
  EXPECT_TRUE(runs[0].optimizer().contains("kappa_init_param"));
}

TEST(MergeDefaults, NameListSplitsIntoBranches) {
  auto runs = expand_text("optimizer:\n  name: [adamw_baseline, sgd_baseline]\n");
  ASSERT_EQ(runs.size(), 2u);
  EXPECT_TRUE(runs[0].optimizer().contains("beta2"));
  EXPECT_FALSE(runs[0].optimizer().contains("momentum"));
  EXPECT_TRUE(runs[1].optimizer().contains("momentum"));
}

TEST(ExpandGrid, MnistGridGivesEight) {
  auto runs = expand_text(fixture_text("grid_mnist.yaml"));
  ASSERT_EQ(runs.size(), 8u);
  std::set<std::string> ids;
  for (const auto& r : runs) ids.insert(run_id(r));
  EXPECT_EQ(ids.size(), 8u);
  std::set<std::string> names;
  for (const auto& r : runs) names.insert(r.at("optimizer.name").as_string());
  EXPECT_EQ(names, (std::set<std::string>{"adamw_baseline", "sgd_baseline"}));
}

TEST(ExpandGrid, ClassificationSmallGridGivesOneHundredTwenty) {
  auto runs = expand_text(fixture_text("grid_classification_small.yaml"));
  ASSERT_EQ(runs.size(), 120u);
  std::set<std::string> ids;
  std::map<std::string, int> per_opt;
  for (const auto& r : runs) {
    ids.insert(run_id(r));
    per_opt[r.at("optimizer.name").as_string()]++;
  }
  EXPECT_EQ(ids.size(), 120u);
  EXPECT_EQ(per_opt["adamcpr_fast"], 60);
  EXPECT_EQ(per_opt["adamw_baseline"], 60);
  // evaluation lists are plot settings, not axes
  EXPECT_TRUE(runs[0].evaluation().at_path("plot.x_axis")->is_list());
}

TEST(ExpandGrid, LeftmostAxisSlowest) {
  // merged key order follows the default file, where batch_size precedes dim
  auto runs = expand_text("task:\n  dim: [2, 3]\n  batch_size: [1, 2, 4]\n");
  ASSERT_EQ(runs.size(), 6u);
  std::vector<std::pair<long, long>> got;
  for (const auto& r : runs) got.emplace_back(r.at("task.batch_size").as_int(), r.at("task.dim").as_int());
  std::vector<std::pair<long, long>> want{{1, 2}, {1, 3}, {2, 2}, {2, 3}, {4, 2}, {4, 3}};
  EXPECT_EQ(got, want);
}

TEST(ExpandGrid, CountEqualsProductOfAxisLengths) {
  // brute-force count over a handful of random axis shapes
  Xoshiro256 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::string yaml = "task:\n";
    std::size_t expect = 1;
    const char* keys[] = {"dim", "batch_size", "num_train"};
    for (const char* k : keys) {
      std::size_t len = 1 + rng.below(3);
      expect *= len;
      yaml += std::string("  ") + k + ": [";
      for (std::size_t i = 0; i < len; ++i) yaml += (i ? ", " : "") + std::to_string(i + 1);
      yaml += "]\n";
    }
    std::size_t seeds = 1 + rng.below(3);
    expect *= seeds;
    yaml += "engine:\n  seed: [";
    for (std::size_t i = 0; i < seeds; ++i) yaml += (i ? ", " : "") + std::to_string(i);
    yaml += "]\n";
    EXPECT_EQ(expand_text(yaml).size(), expect) << yaml;
  }
}

TEST(ExpandGrid, EmptyListRejected) {
  EXPECT_THROW(expand_text("task:\n  dim: []\n"), EmptyList);
  EXPECT_THROW(expand_text("optimizer: []\n"), EmptyList);
}

TEST(ExpandGrid, NestedListsRejected) {
  EXPECT_THROW(expand_text("task:\n  dim: [[1, 2]]\n"), SchemaError);
}

TEST(RunId, StableAndSixteenHex) {
  auto a = expand_text("task:\n  name: quadratic\n");
  auto b = expand_text("task:\n  name: quadratic\n");
  EXPECT_EQ(run_id(a[0]), run_id(b[0]));
  EXPECT_EQ(run_id(a[0]).size(), 16u);
  EXPECT_EQ(run_id(a[0]).find_first_not_of("0123456789abcdef"), std::string::npos);
}

TEST(RunId, IgnoresEvaluationAndOutputLocation) {
  auto a = expand_text("engine:\n  output_dir: /tmp/a\nevaluation:\n  output_types: [svg]\n");
  auto b = expand_text("engine:\n  output_dir: /tmp/b\n  experiment_name: other\n");
  EXPECT_EQ(run_id(a[0]), run_id(b[0]));
}

TEST(RunId, SeedAndHyperparametersMatter) {
  auto runs = expand_text("engine:\n  seed: [1, 2]\n");
  EXPECT_NE(run_id(runs[0]), run_id(runs[1]));
  auto a = expand_text("optimizer:\n  learning_rate: 0.1\n");
  auto b = expand_text("optimizer:\n  learning_rate: 0.2\n");
  EXPECT_NE(run_id(a[0]), run_id(b[0]));
}

TEST(RunId, NumberFormattingNormalized) {
  auto a = expand_text("optimizer:\n  learning_rate: 1\n");
  auto b = expand_text("optimizer:\n  learning_rate: 1.0\n");
  EXPECT_EQ(run_id(a[0]), run_id(b[0]));
}

TEST(RunId, KeyOrderIrrelevant) {
  auto a = expand_text("optimizer:\n  learning_rate: 0.3\n  beta2: 0.9\n");
  auto b = expand_text("optimizer:\n  beta2: 0.9\n  learning_rate: 0.3\n");
  EXPECT_EQ(run_id(a[0]), run_id(b[0]));
}

TEST(RunId, BudgetFreeIdIgnoresMaxEpochs) {
  auto a = expand_text("task:\n  max_epochs: 3\n");
  auto b = expand_text("task:\n  max_epochs: 9\n");
  EXPECT_NE(run_id(a[0]), run_id(b[0]));
  EXPECT_EQ(budget_free_id(a[0]), budget_free_id(b[0]));
}

TEST(ResolvedConfig, YamlRoundTripPreservesId) {
  for (const auto& rc : expand_text(fixture_text("grid_classification_small.yaml"))) {
    auto back = parse_resolved(to_yaml(rc.root));
    ASSERT_EQ(back, rc);
    ASSERT_EQ(run_id(back), run_id(rc));
  }
}

TEST(CanonicalJson, SortedKeys) {
  Node n = parse_yaml("b: 1\na: {d: 2.5, c: x}\n");
  EXPECT_EQ(canonical_json(n), R"({"a":{"c":"x","d":2.5},"b":1})");
}
