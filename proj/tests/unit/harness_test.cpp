#include <sstream>

#include <gtest/gtest.h>

#include "cll/harness.hpp"
#include "support/oracles.hpp"

namespace cll {
namespace {

ExperimentSpec small_spec(Scenario scenario) {
  ExperimentSpec s;
  s.scenario = scenario;
  s.independent = {1000, 5, 6, 0.3, 0.6, 0.7};
  s.dependent = {1000, 5, 4, 0.3, 0.5, 0.6, 0.2};
  s.rank = {30, 4, 20};
  s.sweep_steps = 4;
  s.eps_grid = {0.1, 0.4};
  s.solver.max_iters = 60;
  s.trials = 2;
  s.seed = 5;
  return s;
}

TEST(ErrorMode, ParsesAllForms) {
  EXPECT_EQ(ErrorMode::parse("true").kind, ErrorSource::kTrue);
  EXPECT_EQ(ErrorMode::parse("agreement").kind, ErrorSource::kAgreement);
  EXPECT_DOUBLE_EQ(ErrorMode::parse("uniform").eps0, 0.4);
  EXPECT_DOUBLE_EQ(ErrorMode::parse("uniform:0.25").eps0, 0.25);
  EXPECT_EQ(ErrorMode::parse("uniform:0.25").str(), "uniform:0.25");
  EXPECT_THROW(ErrorMode::parse("uniform:abc"), ValidationError);
  EXPECT_THROW(ErrorMode::parse("uniform:1.5"), ValidationError);
  EXPECT_THROW(ErrorMode::parse("oracle"), ValidationError);
}

TEST(ResolveErrors, TrueModeNeedsTruth) {
  std::mt19937_64 gen(1);
  const auto set = testing::random_set(gen, 10, 1, 3, 0.0, false);
  EXPECT_THROW(resolve_errors(set, ErrorMode::parse("true")), ValidationError);
  const auto truth = testing::random_truth(gen, set.indexing());
  EXPECT_EQ(resolve_errors(set, ErrorMode::parse("true"), &truth).values(), true_errors(set, truth).values());
  EXPECT_EQ(resolve_errors(set, ErrorMode::parse("uniform:0.2")).values(), Vector::Constant(3, 0.2));
}

TEST(RunLabel, CertificateOnlyForFullCoverageBinaryInput) {
  std::mt19937_64 gen(2);
  const auto full = testing::random_set(gen, 20, 1, 3, 0.0, false);
  SolverConfig cfg;
  cfg.max_iters = 20;
  EXPECT_TRUE(run_label(full, uniform_errors(full, 0.3), cfg).certificate.has_value());
  const auto partial = testing::random_set(gen, 20, 1, 3, 0.5, false);
  EXPECT_FALSE(run_label(partial, uniform_errors(partial, 0.3), cfg).certificate.has_value());
  const auto multi = testing::random_set(gen, 20, 3, 3, 0.0, false);
  EXPECT_FALSE(run_label(multi, uniform_errors(multi, 0.3), cfg).certificate.has_value());
}

struct LabelScores {
  double true_eps = 0.0;
  double majority = 0.0;
  double zero = 0.0;
  double point_four = 0.0;
  double half = 0.0;
};

LabelScores score_task(std::uint64_t seed) {
  const auto task = gen_independent(IndependentParams{5000, 5, 10, 0.3, 0.6, 0.7}, seed);
  const SolverConfig cfg;
  auto acc = [&](const ErrorRateVector& e) {
    return label_accuracy(run_label(task.signals, e, cfg).result.labels, task.truth);
  };
  return {acc(task.true_errors), label_accuracy(majority_vote(task.signals), task.truth),
          acc(uniform_errors(task.signals, 0.0)), acc(uniform_errors(task.signals, 0.4)),
          acc(uniform_errors(task.signals, 0.5))};
}

TEST(RunLabel, SyntheticTaskBehaviour) {
  LabelScores mean;
  for (std::uint64_t seed : {1, 2, 3}) {
    const auto s = score_task(seed);
    EXPECT_NEAR(s.zero, s.point_four, 0.05) << "seed " << seed;
    EXPECT_NEAR(s.half, 0.5, 0.03) << "seed " << seed;
    mean.true_eps += s.true_eps / 3.0;
    mean.majority += s.majority / 3.0;
  }
  // Trial-averaged, as in the experiments.
  EXPECT_GE(mean.true_eps, mean.majority);
}

TEST(ExperimentSpec, JsonOverlayKeepsUnsetDefaults) {
  const auto spec = spec_from_json(json::parse(R"({"scenario": "dependent", "trials": 5,
                                                   "solver": {"max_iters": 10}, "modes": ["uniform:0.3"]})"));
  EXPECT_EQ(spec.scenario, Scenario::kDependent);
  EXPECT_EQ(spec.trials, 5u);
  EXPECT_EQ(spec.solver.max_iters, 10u);
  EXPECT_EQ(spec.solver.num_restarts, 3u);
  ASSERT_EQ(spec.modes.size(), 1u);
  EXPECT_DOUBLE_EQ(spec.modes[0].eps0, 0.3);
  EXPECT_EQ(spec.independent.num_examples, 20000u);
  EXPECT_THROW(spec_from_json(json::parse(R"({"scenario": "weird"})")), ValidationError);
  EXPECT_THROW(spec_from_json(json::parse(R"({"trials": "many"})")), ParseError);
}

TEST(ExperimentSpec, JsonRoundTrip) {
  const auto spec = small_spec(Scenario::kEpsSweep);
  const auto back = spec_from_json(to_json(spec));
  EXPECT_EQ(to_json(back), to_json(spec));
  EXPECT_EQ(config_hash(back), config_hash(spec));
}

TEST(ConfigHash, SensitiveToEveryKnob) {
  const auto base = small_spec(Scenario::kIndependent);
  auto other = base;
  other.seed = 6;
  EXPECT_NE(config_hash(base), config_hash(other));
  other = base;
  other.solver.base_step = 0.2;
  EXPECT_NE(config_hash(base), config_hash(other));
  EXPECT_EQ(config_hash(base).size(), 16u);
}

TEST(RunExperiment, IndependentScenarioMethodsAndStats) {
  const auto res = run_experiment(small_spec(Scenario::kIndependent));
  std::vector<std::string> names;
  for (const auto& m : res.methods) names.push_back(m.method);
  EXPECT_EQ(names, (std::vector<std::string>{"cll_true", "cll_uniform:0.4", "cll_agreement", "majority_vote",
                                             "average_vote"}));
  for (const auto& m : res.methods) {
    ASSERT_EQ(m.per_trial.size(), 2u);
    EXPECT_DOUBLE_EQ(m.mean, (m.per_trial[0] + m.per_trial[1]) / 2.0);
    EXPECT_NEAR(m.std, std::abs(m.per_trial[0] - m.per_trial[1]) / 2.0, 1e-15);
  }
  EXPECT_EQ(res.audit.box_violations, 0u);
  EXPECT_EQ(res.audit.progress_violations, 0u);
  EXPECT_EQ(res.audit.feasible_solves, 2u);
  EXPECT_THROW(find_method(res, "nope"), ValidationError);
}

TEST(RunExperiment, DeterministicAcrossRuns) {
  const auto spec = small_spec(Scenario::kDependent);
  const auto a = run_experiment(spec);
  const auto b = run_experiment(spec);
  ASSERT_EQ(a.methods.size(), b.methods.size());
  for (std::size_t i = 0; i < a.methods.size(); ++i) EXPECT_EQ(a.methods[i].per_trial, b.methods[i].per_trial);
  EXPECT_EQ(a.config_hash, b.config_hash);
}

TEST(RunExperiment, EpsSweepWritesGridColumn) {
  const auto res = run_experiment(small_spec(Scenario::kEpsSweep));
  ASSERT_EQ(res.methods.size(), 2u);
  EXPECT_EQ(res.methods[0].method, "uniform:0.1");
  std::ostringstream csv;
  write_results_csv(csv, res);
  EXPECT_EQ(csv.str().rfind("eps,mean_accuracy,std_accuracy,trial_1,trial_2\n0.1", 0), 0u);
}

TEST(RunExperiment, RankSweepAveragesTrials) {
  const auto res = run_experiment(small_spec(Scenario::kRankSweep));
  ASSERT_EQ(res.rank_trials.size(), 2u);
  ASSERT_EQ(res.rank_rows.size(), 5u);
  for (std::size_t i = 0; i < res.rank_rows.size(); ++i) {
    EXPECT_DOUBLE_EQ(res.rank_rows[i].cll_label_error,
                     res.rank_trials[0][i].cll_label_error / 2.0 + res.rank_trials[1][i].cll_label_error / 2.0);
  }
  EXPECT_EQ(res.rank_rows.front().rank, 1);
  EXPECT_EQ(res.rank_rows.back().rank, 20);
  const auto j = to_json(res);
  EXPECT_EQ(j["rank_sweep"].size(), 5u);
  EXPECT_EQ(j["std_kind"], "population");
  EXPECT_EQ(j["config_hash"], res.config_hash);
}

TEST(RunExperiment, RejectsBadSpec) {
  auto spec = small_spec(Scenario::kIndependent);
  spec.trials = 0;
  EXPECT_THROW(run_experiment(spec), ValidationError);
  spec = small_spec(Scenario::kEpsSweep);
  spec.eps_grid = {1.5};
  EXPECT_THROW(run_experiment(spec), ValidationError);
}

}  // namespace
}  // namespace cll
