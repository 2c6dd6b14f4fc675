#include <gtest/gtest.h>

#include <fstream>

#include "embgen/config.hpp"
#include "embgen/errors.hpp"
#include "embgen/jsonio.hpp"
#include "embgen/mock_backends.hpp"
#include "embgen/pipeline.hpp"
#include "support/fixtures.hpp"

using namespace embgen;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> violations_of(const json& j) {
  try {
    config_from_json(j);
  } catch (const ConfigError& e) {
    return e.violations();
  }
  return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v) {
    if (s.find(needle) != std::string::npos) return true;
  }
  return false;
}

PipelineConfig toy_config() {
  auto c = load_config(fixture::source_dir() / "configs" / "toy_mock.json");
  return c;
}

}  // namespace

TEST(Config, EmptyObjectGivesDefaults) {
  const auto c = config_from_json(json::object());
  EXPECT_EQ(c.consolidation.similarity_threshold, 0.85);
  EXPECT_EQ(c.reduction.n_neighbors, 50u);
  EXPECT_EQ(c.reduction.n_components, 15u);
  EXPECT_EQ(c.reduction.min_dist, 0.0);
  EXPECT_EQ(c.reduction.metric, "cosine");
  EXPECT_EQ(c.clustering.kmeans.k_min, 2u);
  EXPECT_EQ(c.clustering.kmeans.k_max, 100u);
  EXPECT_EQ(c.proximity.tau, 0.75);
  EXPECT_EQ(c.sampling.g, 2u);
  EXPECT_EQ(c.max_patterns, 5u);
  EXPECT_EQ(c.teacher.temperature, 0.001);
  EXPECT_EQ(to_json(c), to_json(default_config()));
}

TEST(Config, BlankFileGivesDefaults) {
  const auto dir = fixture::temp_dir("config-blank");
  std::ofstream(dir / "c.json") << "  \n";
  const auto c = load_config(dir / "c.json");
  EXPECT_EQ(to_json(c), to_json(default_config()));
  EXPECT_EQ(c.base_dir, dir);
}

TEST(Config, RatiosMustSumToOne) {
  const auto v = violations_of({{"sampling", {{"rho_prox", 0.5}, {"rho_intra", 0.3}, {"rho_inter", 0.1}}}});
  ASSERT_FALSE(v.empty());
  EXPECT_TRUE(mentions(v, "rho"));
}

TEST(Config, GroupCountBelowTwoRejectedAndSinglePatternAccepted) {
  EXPECT_TRUE(mentions(violations_of({{"sampling", {{"g", 1}}}}), "g"));
  EXPECT_NO_THROW(config_from_json({{"specialization", {{"max_patterns", 1}}}}));
}

TEST(Config, ReportsEveryViolationAndUnknownKeys) {
  const auto v = violations_of({{"sampling", {{"g", 1}}},
                                {"proximity", {{"tau", 1.5}}},
                                {"reduction", {{"backend", "tsne"}}},
                                {"bogus", 1}});
  EXPECT_GE(v.size(), 4u);
  EXPECT_TRUE(mentions(v, "bogus"));
  EXPECT_TRUE(mentions(v, "tau"));
  EXPECT_TRUE(mentions(v, "tsne"));
}

TEST(Config, WrongTypeIsAViolation) {
  EXPECT_FALSE(violations_of({{"seed", "forty-two"}}).empty());
}

TEST(Config, HashFollowsContent) {
  auto a = default_config();
  auto b = default_config();
  EXPECT_EQ(config_hash(a), config_hash(b));
  b.sampling.seed = 7;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_EQ(run_id(config_hash(a)).size(), 12u);
}

TEST(Config, RoundTripsThroughJson) {
  const auto c = toy_config();
  EXPECT_EQ(to_json(config_from_json(to_json(c))), to_json(c));
}

TEST(Pipeline, StageNames) {
  EXPECT_EQ(stage_from_string("2"), Stage::Semantic);
  EXPECT_EQ(stage_from_string(stage_name(Stage::Prompts)), Stage::Prompts);
  EXPECT_THROW(stage_from_string("9"), Error);
}

TEST(Pipeline, WritesArtifactsAndResumes) {
  const auto out = fixture::temp_dir("pipeline");
  const auto config = toy_config();
  const auto first = run_pipeline(config, {out, false, std::nullopt});
  for (const char* f : {"config.json", "chunk_extractions.jsonl", "ed_pairs.jsonl", "canonical_entities.jsonl",
                        "embeddings.bin", "embeddings_index.json", "clusters.json", "proximity_groups.json",
                        "system_prompts.json", "qa_pairs.jsonl", "dataset.jsonl", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(first.run_dir / f)) << f;
  }
  EXPECT_EQ(first.executed.size(), 4u);
  const auto dataset = read_text(first.run_dir / "dataset.jsonl");
  const auto ed_time = fs::last_write_time(first.run_dir / "ed_pairs.jsonl");
  const auto emb_time = fs::last_write_time(first.run_dir / "embeddings.bin");

  const auto resumed = run_pipeline(config, {out, true, std::nullopt});
  EXPECT_EQ(resumed.run_dir, first.run_dir);
  EXPECT_EQ(resumed.skipped.size(), 4u);
  EXPECT_EQ(fs::last_write_time(first.run_dir / "ed_pairs.jsonl"), ed_time);
  EXPECT_EQ(fs::last_write_time(first.run_dir / "embeddings.bin"), emb_time);

  // Losing a stage-3 artifact reruns stages 3 and 4 only.
  fs::remove(first.run_dir / "system_prompts.json");
  const auto partial = run_pipeline(config, {out, true, std::nullopt});
  EXPECT_EQ(partial.skipped, (std::vector<Stage>{Stage::Extraction, Stage::Semantic}));
  EXPECT_EQ(partial.executed, (std::vector<Stage>{Stage::Prompts, Stage::Dataset}));
  EXPECT_EQ(fs::last_write_time(first.run_dir / "embeddings.bin"), emb_time);
  EXPECT_EQ(read_text(first.run_dir / "dataset.jsonl"), dataset);
}

TEST(Pipeline, FreshRunIsByteIdentical) {
  const auto config = toy_config();
  const auto a = run_pipeline(config, {fixture::temp_dir("pipeline-a"), false, std::nullopt});
  const auto b = run_pipeline(config, {fixture::temp_dir("pipeline-b"), false, std::nullopt});
  for (const char* f : {"dataset.jsonl", "manifest.json", "clusters.json", "embeddings.bin"}) {
    EXPECT_EQ(read_text(a.run_dir / f), read_text(b.run_dir / f)) << f;
  }
}

TEST(Pipeline, StopAfterAndBudget) {
  auto config = toy_config();
  const auto stopped = run_pipeline(config, {fixture::temp_dir("pipeline-stop"), false, Stage::Semantic});
  EXPECT_TRUE(fs::exists(stopped.run_dir / "clusters.json"));
  EXPECT_FALSE(fs::exists(stopped.run_dir / "system_prompts.json"));

  config.dataset.token_budget = 2000;
  config.dataset.token_tolerance = 500;
  const auto budgeted = run_pipeline(config, {fixture::temp_dir("pipeline-budget"), false, std::nullopt});
  const auto manifest = read_json(budgeted.run_dir / "manifest.json");
  ASSERT_TRUE(manifest.contains("budget"));
  EXPECT_TRUE(fs::exists(budgeted.run_dir / "dataset_budget.jsonl"));
  EXPECT_LT(read_jsonl(budgeted.run_dir / "dataset_budget.jsonl").size(),
            read_jsonl(budgeted.run_dir / "dataset.jsonl").size());
}

TEST(Pipeline, UmapWithoutCommandFailsAtRuntime) {
  auto config = toy_config();
  config.reduction.backend = "umap";
  config.reduction.command.clear();
  EXPECT_TRUE(validate_config(config).empty());
  EXPECT_THROW(run_pipeline(config, {fixture::temp_dir("pipeline-umap"), false, std::nullopt}), ConfigError);
}

TEST(MatchTemplate, InvertsRender) {
  const std::string tmpl = "Question: {question}\nAnswer: {answer}\n{\"json\": true}";
  const auto rendered = render_template(tmpl, {{"question", "Why?"}, {"answer", "Because {of} it."}});
  const auto v = match_template(tmpl, rendered, {"question", "answer"});
  ASSERT_TRUE(v.has_value());
  EXPECT_EQ(v->at("question"), "Why?");
  EXPECT_EQ(v->at("answer"), "Because {of} it.");
  EXPECT_FALSE(match_template(tmpl, "something else", {"question", "answer"}).has_value());
}
