#include <gtest/gtest.h>

#include <fstream>

#include "embgen/diagnostics.hpp"
#include "embgen/errors.hpp"
#include "embgen/evaluation.hpp"
#include "embgen/judge.hpp"
#include "embgen/mock_backends.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace embgen;

namespace {

const PromptLibrary& prompts() {
  static const PromptLibrary lib = PromptLibrary::builtin();
  return lib;
}

JudgeVerdict verdict(Level fa, Level comp, Level rel = Level::Strong, Level cla = Level::Strong) {
  JudgeVerdict v;
  v.scores = {fa, comp, rel, cla};
  return v;
}

std::string verdict_json(const std::string& fa, const std::string& comp) {
  return json{{"factual_accuracy", {{"score", fa}, {"reasoning", "r"}}},
              {"completeness", {{"score", comp}, {"reasoning", "r"}}},
              {"relevance", {{"score", "Strong"}, {"reasoning", "r"}}},
              {"clarity", {{"score", "Strong"}, {"reasoning", "r"}}}}
      .dump();
}

}  // namespace

TEST(Judge, LevelsAndLabels) {
  EXPECT_EQ(level_from_string("Strong"), Level::Strong);
  EXPECT_THROW(level_from_string("Medium"), SchemaError);
  EXPECT_EQ(label_from_mean(2.8), Level::Strong);
  EXPECT_EQ(label_from_mean(2.5), Level::Strong);
  EXPECT_EQ(label_from_mean(2.49), Level::Adequate);
  EXPECT_EQ(label_from_mean(1.0), Level::Weak);
}

TEST(Judge, PerRunBinary) {
  EXPECT_EQ(per_run_binary(verdict(Level::Strong, Level::Strong)), 1);
  EXPECT_EQ(per_run_binary(verdict(Level::Strong, Level::Adequate)), 1);
  EXPECT_EQ(per_run_binary(verdict(Level::Strong, Level::Weak)), 0);
  EXPECT_EQ(per_run_binary(verdict(Level::Adequate, Level::Strong)), 0);
}

TEST(Judge, AggregatesRunsAndBinaryAccuracy) {
  std::vector<JudgeVerdict> runs(8, verdict(Level::Strong, Level::Strong));
  runs.push_back(verdict(Level::Weak, Level::Weak));
  runs.push_back(verdict(Level::Adequate, Level::Weak));
  const auto a = aggregate_runs(runs);
  ASSERT_TRUE(a.has_value());
  EXPECT_DOUBLE_EQ(a->means[kFactualAccuracy], 2.7);
  EXPECT_EQ(a->labels[kFactualAccuracy], Level::Strong);
  EXPECT_DOUBLE_EQ(a->binary_mean, 0.8);
  EXPECT_EQ(a->binary, 1);
  EXPECT_FALSE(aggregate_runs(std::vector<JudgeVerdict>{}).has_value());

  std::vector<AggregatedVerdict> pairs(250);
  for (std::size_t i = 0; i < 18; ++i) pairs[i].binary = 1;
  EXPECT_DOUBLE_EQ(binary_accuracy(pairs), 0.072);
  EXPECT_THROW(binary_accuracy(std::vector<AggregatedVerdict>{}), Error);
}

TEST(Judge, RequestWrapsPredictedAnswerInDelimiters) {
  const auto r = judge_request("Q?", "Ref.", "Pred.", prompts());
  EXPECT_EQ(r.system, prompts().get(prompt_keys::kJudgeSystem));
  EXPECT_NE(r.user.find("<PREDICTED_ANSWER>\nPred.\n</PREDICTED_ANSWER>"), std::string::npos);
}

TEST(Judge, RetriesSchemaErrorOnceThenMarksMissing) {
  MockChatClient bad([](const ChatRequest&) { return verdict_json("Medium", "Strong"); });
  EXPECT_FALSE(judge_answer("q", "r", "p", bad, prompts()).has_value());
  EXPECT_EQ(bad.call_count(), 2u);
  MockChatClient good([](const ChatRequest&) { return verdict_json("Strong", "Adequate"); });
  const auto v = judge_answer("q", "r", "p", good, prompts());
  ASSERT_TRUE(v.has_value());
  EXPECT_EQ(v->scores[kCompleteness], Level::Adequate);
  EXPECT_THROW(judge_answer("q", "r", "", good, prompts()), Error);
}

TEST(Evaluation, ExcludesPairsWithoutValidRuns) {
  MockChatClient judge([](const ChatRequest& r) {
    return r.user.find("broken") != std::string::npos ? std::string("nonsense") : verdict_json("Strong", "Strong");
  });
  const std::vector<Prediction> preds = {{"q1", "the cat sat", "the cat sat"}, {"q2", "ref", "broken answer"}};
  const EvaluationOptions options{3, 2};
  const auto report = evaluate_predictions(preds, judge, prompts(), options);
  EXPECT_EQ(report.judged_pairs, 1u);
  EXPECT_EQ(report.excluded_pairs, 1u);
  EXPECT_EQ(report.missing_runs, 3u);
  ASSERT_TRUE(report.binary_accuracy.has_value());
  EXPECT_DOUBLE_EQ(*report.binary_accuracy, 1.0);
  EXPECT_DOUBLE_EQ(report.pairs[0].overlap.bleu1, 1.0);

  const auto dir = fixture::temp_dir("evaluation");
  write_evaluation(dir, report, options);
  const auto metrics = read_json(dir / "metrics.json");
  EXPECT_EQ(metrics["judged_pairs"], 1);
  EXPECT_EQ(read_jsonl(dir / "per_pair.jsonl").size(), 2u);
}

TEST(Evaluation, MockJudgeIsDeterministic) {
  MockChatClient judge(mock_judge_responder(prompts()));
  const std::vector<Prediction> preds = {{"What is Ada?", "Ada is a language for systems.", "Ada is a language."},
                                         {"What is Bob?", "Bob is a builder.", "Unrelated text entirely."}};
  const auto a = metrics_json(evaluate_predictions(preds, judge, prompts(), {4, 4}), {4, 4});
  const auto b = metrics_json(evaluate_predictions(preds, judge, prompts(), {4, 1}), {4, 1});
  EXPECT_EQ(a.dump(), b.dump());
}

TEST(Evaluation, ReadPredictionsNamesBadRecord) {
  const auto dir = fixture::temp_dir("predictions");
  std::ofstream(dir / "p.jsonl") << R"({"question": "q", "reference": "r", "predicted": "p"})" << "\n"
                                 << R"({"question": "q"})" << "\n";
  try {
    read_predictions(dir / "p.jsonl");
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
}

TEST(Heterogeneity, MatchesOracleAndDegenerateCases) {
  const auto v = fixture::random_unit_vectors(25, 8, 11);
  for (auto kind : {StdKind::Population, StdKind::Sample}) {
    const auto got = heterogeneity_stats(v, {kind});
    const auto want = oracle::pair_stats(v, kind == StdKind::Sample);
    EXPECT_EQ(got.pairs, 300u);
    EXPECT_NEAR(got.mean, want.mean, 1e-12);
    EXPECT_NEAR(got.median, want.median, 1e-12);
    EXPECT_NEAR(got.std, want.std, 1e-12);
    EXPECT_NEAR(got.iqr, want.iqr, 1e-12);
  }
  Vectors ortho(4, std::vector<double>(4, 0.0));
  for (std::size_t i = 0; i < 4; ++i) ortho[i][i] = 1.0;
  const auto o = heterogeneity_stats(ortho);
  EXPECT_EQ(o.mean, 0.0);
  EXPECT_EQ(o.std, 0.0);
  const auto d = heterogeneity_stats(Vectors(5, v[0]));
  EXPECT_NEAR(d.mean, 1.0, 1e-12);
  EXPECT_NEAR(d.std, 0.0, 1e-12);
  EXPECT_THROW(heterogeneity_stats(Vectors{v[0]}), Error);
  EXPECT_DOUBLE_EQ(quantile_linear({1.0, 2.0, 3.0, 4.0}, 0.5), 2.5);
}

TEST(ClusterDiagnosticsTest, SizesHistogramAndTopTen) {
  ClusterAssignment a;
  a.labels.insert(a.labels.end(), 100, 0);
  a.labels.insert(a.labels.end(), 5, 1);
  a.labels.insert(a.labels.end(), 2, 2);
  a.labels.push_back(-1);
  a.k = 3;
  const auto d = cluster_diagnostics(a);
  EXPECT_EQ(d.top_sizes, (std::vector<std::size_t>{100, 5, 2}));
  EXPECT_EQ(d.noise, 1u);
  EXPECT_EQ(d.histogram, (std::map<std::size_t, std::size_t>{{2, 1}, {5, 1}, {100, 1}}));

  ClusterAssignment many;
  for (int c = 0; c < 12; ++c) many.labels.insert(many.labels.end(), static_cast<std::size_t>(c + 1), c);
  const auto dm = cluster_diagnostics(many, fixture::random_unit_vectors(many.labels.size(), 5, 3));
  EXPECT_EQ(dm.top_sizes.size(), 10u);
  EXPECT_EQ(dm.top_sizes.front(), 12u);
  EXPECT_EQ(dm.projection.size(), many.labels.size());

  const auto dir = fixture::temp_dir("diagnostics");
  std::vector<std::size_t> ids(many.labels.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  write_cluster_diagnostics(dir, dm, many, ids);
  for (const char* f : {"cluster_sizes.csv", "size_histogram.csv", "inertia_curve.csv", "projection.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
}
