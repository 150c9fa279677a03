// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The FOB Authors

#include <gtest/gtest.h>

#include <map>
#include <set>

#include "fob/hpo/run_hpo.hpp"
#include "support/oracles.hpp"

using namespace fob;
using oracle::TempDir;

namespace {

ResolvedRunConfig base_config(const std::string& yaml = "") {
  return expand_grid(load_experiment(yaml, shipped_defaults())).at(0);
}

// Objective is a fixed function of the overlay and budget; epochs are tallied.
struct FakeRunner {
  std::map<std::string, std::int64_t> trained;  // dir -> epochs trained so far
  std::int64_t epochs = 0;
  std::set<std::string> fail_dirs;

  RunResult operator()(const ResolvedRunConfig& rc, const std::filesystem::path& dir,
                       std::int64_t budget, bool promote) {
    auto& have = trained[dir.string()];
    EXPECT_EQ(promote, have > 0) << dir;
    EXPECT_GT(budget, have);
    epochs += budget - have;
    have = budget;
    if (fail_dirs.count(dir.filename().string())) throw NonFinite("boom");
    RunResult r;
    r.status = RunStatus::completed;
    r.metric = MetricSpec::of(MetricKind::loss);
    const double lr = rc.at("optimizer.learning_rate").as_double();
    r.history.push_back({budget, 0.0, 0.0, std::abs(std::log10(lr) + 3) + 1.0 / budget});
    return r;
  }
};

HpoSettings settings(std::int64_t n, double init, std::int64_t R, std::int64_t eta,
                     std::uint64_t seed = 1) {
  HpoSettings s;
  s.space.add("optimizer.learning_rate", LogUniform{1e-5, 1e-1});
  s.n_trials = n;
  s.init_fraction = init;
  s.R = R;
  s.eta = eta;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(Hyperband, R27Eta3Brackets) {
  auto plan = hyperband_schedule(27, 3);
  ASSERT_EQ(plan.size(), 4u);
  EXPECT_EQ(plan[0].s, 3);
  EXPECT_EQ(plan[0].rungs,
            (std::vector<RungPlan>{{27, 1}, {9, 3}, {3, 9}, {1, 27}}));
  EXPECT_EQ(plan[3].rungs, (std::vector<RungPlan>{{4, 27}}));
}

TEST(Hyperband, DegenerateAndInvalid) {
  auto plan = hyperband_schedule(1, 3);
  ASSERT_EQ(plan.size(), 1u);
  EXPECT_EQ(plan[0].rungs, (std::vector<RungPlan>{{1, 1}}));
  EXPECT_THROW(hyperband_schedule(0, 3), BadParameter);
  EXPECT_THROW(hyperband_schedule(9, 1), BadParameter);
}

TEST(Hyperband, MatchesPseudocodeOracle) {
  for (long R = 1; R <= 100; ++R)
    for (long eta : {2L, 3L, 4L}) {
      auto plan = hyperband_schedule(R, eta);
      auto ref = oracle::hyperband_brackets(R, eta);
      ASSERT_EQ(plan.size(), ref.size()) << R << " " << eta;
      for (std::size_t b = 0; b < ref.size(); ++b) {
        ASSERT_EQ(plan[b].rungs.size(), ref[b].size());
        for (std::size_t i = 0; i < ref[b].size(); ++i) {
          EXPECT_EQ(plan[b].rungs[i].n_configs, ref[b][i].n) << R << " " << eta << " " << b;
          EXPECT_EQ(plan[b].rungs[i].budget, ref[b][i].r) << R << " " << eta << " " << b;
        }
      }
    }
}

TEST(Sample, LogUniformMedian) {
  SearchSpace s;
  s.add("optimizer.learning_rate", LogUniform{1e-5, 1e-1});
  Xoshiro256 rng(99);
  std::vector<double> xs;
  for (int i = 0; i < 100000; ++i)
    xs.push_back(sample(s, rng).find("optimizer.learning_rate")->as_double());
  std::nth_element(xs.begin(), xs.begin() + xs.size() / 2, xs.end());
  const double median = xs[xs.size() / 2];
  EXPECT_GE(median, 0.8e-3);
  EXPECT_LE(median, 1.25e-3);
}

TEST(Sample, SingletonAndDeterminism) {
  SearchSpace s = preset_space("adamcpr");
  Xoshiro256 a(4), b(4);
  for (int i = 0; i < 50; ++i) {
    Node x = sample(s, a);
    EXPECT_EQ(x, sample(s, b));
    EXPECT_EQ(x.find("optimizer.kappa_init_method")->as_string(), "warm_start");
  }
}

TEST(Sample, PresetSpacesContainDraws) {
  for (const char* opt : {"adamw_baseline", "adamcpr", "sgd_baseline"}) {
    SearchSpace s = preset_space(opt);
    Xoshiro256 rng(8);
    for (int i = 0; i < 1000; ++i) {
      Node x = sample(s, rng);
      for (const auto& [path, dist] : s.entries) ASSERT_TRUE(contains(dist, *x.find(path))) << path;
    }
  }
  EXPECT_THROW(preset_space("adafactor"), UnknownName);
}

TEST(Sample, SpaceValidation) {
  SearchSpace s;
  EXPECT_THROW(s.add("a", LogUniform{0.0, 1.0}), BadParameter);
  EXPECT_THROW(s.add("a", Uniform{1.0, 1.0}), BadParameter);
  EXPECT_THROW(s.add("a", Categorical{}), EmptyList);
  auto parsed = parse_search_space(parse_yaml(
      "optimizer.learning_rate: {log_uniform: [1.e-5, 1.e-1]}\n"
      "optimizer.beta2: {uniform: [0.9, 0.999]}\n"
      "optimizer.kappa_init_method: {categorical: [warm_start]}\n"));
  EXPECT_EQ(parsed.entries.size(), 3u);
  EXPECT_THROW(parse_search_space(parse_yaml("x: {normal: [0, 1]}\n")), UnknownName);
  TempDir dir("hpo_space");
  auto bad = settings(3, 1.0, 3, 3);
  bad.space.add("optimizer.learnin_rate", Uniform{0, 1});
  EXPECT_THROW(run_hpo(base_config(), bad, dir.path, FakeRunner{}), SchemaError);
}

TEST(RunHpo, BudgetAccountingMatchesClosedForm) {
  for (long R : {3L, 9L, 27L})
    for (long eta : {2L, 3L}) {
      auto ref = oracle::hyperband_brackets(R, eta);
      long expect = R;  // the single initial-design trial at R
      std::int64_t trials = 1;
      for (const auto& b : ref) {
        expect += oracle::bracket_epochs(b);
        trials += b[0].n;
      }
      FakeRunner runner;
      TempDir dir("hpo_acct");
      auto s = settings(trials, 0.5 / static_cast<double>(trials), R, eta);
      auto res = run_hpo(base_config(), s, dir.path, std::ref(runner));
      EXPECT_EQ(runner.epochs, expect) << R << " " << eta;
      // per bracket, from the log
      std::map<std::int64_t, long> per_bracket;
      std::map<std::int64_t, std::int64_t> prev;
      for (const auto& t : res.log) {
        per_bracket[t.bracket] += t.budget - prev[t.trial_id];
        prev[t.trial_id] = t.budget;
      }
      for (const auto& b : ref) {
        const auto s_b = static_cast<std::int64_t>(b.size()) - 1;
        EXPECT_EQ(per_bracket[s_b], oracle::bracket_epochs(b)) << R << " " << eta << " s=" << s_b;
      }
    }
}

TEST(RunHpo, PromotionKeepsTheBest) {
  FakeRunner runner;
  TempDir dir("hpo_promo");
  auto res = run_hpo(base_config(), settings(60, 0.05, 27, 3), dir.path, std::ref(runner));
  using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t>;
  std::map<Key, std::vector<const TrialRecord*>> rungs;
  for (const auto& t : res.log)
    if (t.bracket >= 0) rungs[{t.iteration, t.bracket, t.rung}].push_back(&t);
  int checked = 0;
  for (const auto& [key, here] : rungs) {
    const auto& [it, s, r] = key;
    auto next = rungs.find({it, s, r + 1});
    if (next == rungs.end()) continue;
    std::set<std::int64_t> promoted;
    for (const auto* t : next->second) promoted.insert(t->trial_id);
    for (const auto* p : here)
      for (const auto* q : here)
        if (promoted.count(p->trial_id) && !promoted.count(q->trial_id)) {
          ASSERT_TRUE(p->objective && q->objective);
          EXPECT_TRUE(*p->objective < *q->objective ||
                      (*p->objective == *q->objective && p->trial_id < q->trial_id));
          ++checked;
        }
  }
  EXPECT_GT(checked, 0);
}

TEST(RunHpo, DeterministicLogs) {
  TempDir a("hpo_det_a"), b("hpo_det_b");
  auto ra = run_hpo(base_config(), settings(40, 0.1, 9, 3, 5), a.path, FakeRunner{});
  auto rb = run_hpo(base_config(), settings(40, 0.1, 9, 3, 5), b.path, FakeRunner{});
  EXPECT_EQ(ra.log, rb.log);
  EXPECT_EQ(read_file(a.path / "trials.jsonl"), read_file(b.path / "trials.jsonl"));
  TempDir c("hpo_det_c");
  auto rc = run_hpo(base_config(), settings(40, 0.1, 9, 3, 6), c.path, FakeRunner{});
  EXPECT_NE(ra.log, rc.log);
}

TEST(RunHpo, TrialCountAndInitialDesign) {
  for (std::int64_t n : {1, 2, 10, 17}) {
    TempDir dir("hpo_count");
    auto res = run_hpo(base_config(), settings(n, 0.1, 27, 3), dir.path, FakeRunner{});
    std::set<std::int64_t> ids;
    for (const auto& t : res.log) ids.insert(t.trial_id);
    EXPECT_EQ(static_cast<std::int64_t>(ids.size()), n);
    EXPECT_EQ(*ids.rbegin(), n - 1);
    EXPECT_TRUE(res.log[0].config_overlay.entries().empty());  // trial 0 is the default
    EXPECT_EQ(res.log[0].budget, 27);
  }
}

TEST(RunHpo, FullInitialFractionIsRandomSearch) {
  TempDir dir("hpo_rs");
  auto res = run_hpo(base_config(), settings(8, 1.0, 9, 3), dir.path, FakeRunner{});
  ASSERT_EQ(res.log.size(), 8u);
  for (const auto& t : res.log) {
    EXPECT_EQ(t.budget, 9);
    EXPECT_EQ(t.bracket, -1);
  }
}

TEST(RunHpo, FailedTrialsScoreWorst) {
  FakeRunner runner;
  for (int i = 0; i < 30; i += 2) runner.fail_dirs.insert(std::to_string(i));
  TempDir dir("hpo_fail");
  auto res = run_hpo(base_config(), settings(30, 0.1, 9, 3), dir.path, std::ref(runner));
  for (const auto& t : res.log) {
    if (t.trial_id % 2 == 0) {
      EXPECT_EQ(t.status, "failed");
      EXPECT_FALSE(t.objective);
      EXPECT_EQ(t.rung, 0);  // never promoted
    } else {
      EXPECT_EQ(t.status, "completed");
    }
  }
  EXPECT_EQ(res.best_trial % 2, 1);
}

TEST(RunHpo, LogLinesHaveTheDocumentedFields) {
  TempDir dir("hpo_fields");
  run_hpo(base_config(), settings(5, 0.2, 3, 3), dir.path, FakeRunner{});
  std::istringstream in(read_file(dir.path / "trials.jsonl"));
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    for (const char* k : {"trial_id", "rung", "budget", "config_overlay", "objective", "status"})
      EXPECT_TRUE(j.contains(k)) << k;
    ++n;
  }
  EXPECT_GT(n, 0);
}

TEST(RunHpo, EndToEndQuadraticBeatsDefault) {
  auto base = base_config("task:\n  name: quadratic\noptimizer:\n  name: adamw_baseline\n");
  HpoSettings s;
  s.space = preset_space("adamw_baseline");
  s.n_trials = 10;
  s.init_fraction = 0.1;
  s.R = 3;
  s.eta = 3;
  s.seed = 0;
  TempDir dir("hpo_e2e");
  std::map<std::pair<std::int64_t, std::int64_t>, RunResult> seen;
  auto runner = [&](const ResolvedRunConfig& rc, const std::filesystem::path& d,
                    std::int64_t budget, bool promote) {
    auto r = engine_trial_runner(rc, d, budget, promote);
    seen[{std::stoll(d.filename().string()), budget}] = r;
    return r;
  };
  auto res = run_hpo(base, s, dir.path, runner);
  ASSERT_GE(res.best_trial, 0);
  std::set<std::int64_t> ids;
  for (const auto& t : res.log) ids.insert(t.trial_id);
  EXPECT_LE(ids.size(), 10u);

  TempDir ref("hpo_e2e_ref");
  ResolvedRunConfig def = base;
  def.root.set_path("task.max_epochs", Node(3));
  auto def_obj = trial_objective(train_run(def, ref.path));
  ASSERT_TRUE(def_obj);
  EXPECT_LE(res.best_objective, *def_obj);

  // promoted trials continue their lower-rung run
  int promotions = 0;
  for (const auto& [key, r] : seen)
    for (const auto& [lower_key, lower] : seen)
      if (lower_key.first == key.first && lower_key.second < key.second) {
        ASSERT_GE(r.history.size(), lower.history.size());
        EXPECT_TRUE(std::equal(lower.history.begin(), lower.history.end(), r.history.begin(),
                               [](const EpochRecord& a, const EpochRecord& b) {
                                 return a.epoch == b.epoch && a.train_loss == b.train_loss &&
                                        a.val_metric == b.val_metric;
                               }));
        ++promotions;
      }
  EXPECT_GT(promotions, 0);
  EXPECT_TRUE(std::filesystem::exists(dir.path / "best.yaml"));
}

TEST(RetrainBest, ThreeSeedsOneCell) {
  auto best = base_config("task:\n  name: quadratic\n  max_epochs: 2\n");
  TempDir dir("retrain");
  auto cells = retrain_best(best, {1, 2, 3}, dir.path);
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_EQ(cells[0].n, 3);
  EXPECT_GT(cells[0].std_best, 0.0);
  auto one = retrain_best(best, {1}, dir.path);
  EXPECT_EQ(one[0].std_best, 0.0);
  const auto runs_before = std::distance(std::filesystem::directory_iterator(dir.path / "retrain"),
                                         std::filesystem::directory_iterator());
  auto twice = retrain_best(best, {2, 2}, dir.path);
  EXPECT_EQ(twice[0].n, 2);
  EXPECT_EQ(twice[0].std_best, 0.0);
  EXPECT_EQ(std::distance(std::filesystem::directory_iterator(dir.path / "retrain"),
                          std::filesystem::directory_iterator()),
            runs_before);
}
