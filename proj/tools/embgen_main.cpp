#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "embgen/config.hpp"
#include "embgen/diagnostics.hpp"
#include "embgen/errors.hpp"
#include "embgen/evaluation.hpp"
#include "embgen/mock_backends.hpp"
#include "embgen/pipeline.hpp"

namespace fs = std::filesystem;
using namespace embgen;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitStage = 2;

PipelineConfig config_or_defaults(const std::string& path) {
  if (path.empty()) return config_from_json(json::object());
  return load_config(path);
}

// "mock", a pipeline config (its judge section is used) or a bare endpoint object.
PipelineConfig judge_config(const std::string& spec) {
  if (spec == "mock") {
    PipelineConfig c = default_config();
    c.judge.endpoint.provider = "mock";
    return c;
  }
  const json j = read_json(spec);
  if (j.contains("judge") || j.empty()) {
    PipelineConfig c = load_config(spec);
    return c;
  }
  PipelineConfig c = config_from_json(json{{"judge", {{"endpoint", j}}}});
  c.base_dir = fs::absolute(spec).parent_path();
  return c;
}

int cmd_generate(const std::string& config_path, const std::string& out, std::optional<std::size_t> budget,
                 bool resume, const std::string& stop_after) {
  PipelineConfig config = load_config(config_path);
  if (budget) config.dataset.token_budget = *budget;
  RunOptions options;
  options.out_root = out;
  options.resume = resume;
  if (!stop_after.empty()) options.stop_after = stage_from_string(stop_after);
  const RunResult result = run_pipeline(config, options);
  std::cout << result.run_dir.string() << "\n";
  return 0;
}

int cmd_evaluate(const std::string& pred, const std::string& judge_spec, std::optional<std::size_t> runs,
                 const std::string& out) {
  const PipelineConfig config = judge_config(judge_spec);
  const PromptLibrary prompts = load_prompts(config);
  EvaluationOptions options;
  options.runs = runs.value_or(config.judge.runs);
  options.max_concurrency = config.judge.endpoint.max_concurrency;
  auto judge = make_chat_client(config.judge.endpoint, ChatRole::Judge, prompts);
  const auto predictions = read_predictions(pred);
  const auto report = evaluate_predictions(predictions, *judge, prompts, options);
  write_evaluation(out, report, options);
  std::cout << metrics_json(report, options).dump(2) << "\n";
  return 0;
}

int cmd_diagnose(const std::string& embeddings, std::string index, const std::string& clusters,
                 const std::string& out, const std::string& std_kind) {
  if (index.empty()) index = (fs::path(embeddings).parent_path() / "embeddings_index.json").string();
  const auto loaded = read_embeddings(embeddings, index);
  HeterogeneityOptions options;
  options.std_kind = std_kind == "sample" ? StdKind::Sample : StdKind::Population;
  fs::create_directories(out);
  write_heterogeneity_csv(fs::path(out) / "pair_stats.csv", heterogeneity_stats(loaded.vectors, options));
  if (!clusters.empty()) {
    const auto assignment = cluster_assignment_from_json(read_json(clusters));
    const auto diag = cluster_diagnostics(assignment, loaded.vectors);
    write_cluster_diagnostics(out, diag, assignment, loaded.ids);
  }
  std::cout << out << "\n";
  return 0;
}

int cmd_validate(const std::string& config_path) {
  std::cout << to_json(config_or_defaults(config_path)).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("embgen"));

  CLI::App app{"Synthetic QA dataset generation from a document corpus"};
  app.require_subcommand(1);
  bool verbose = false;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Warnings and errors only");

  std::string config_path;
  std::string out;
  std::optional<std::size_t> budget;
  bool resume = false;
  std::string stop_after;
  auto* generate = app.add_subcommand("generate", "Run extraction, clustering, prompt specialization and QA synthesis");
  generate->add_option("--config", config_path, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
  generate->add_option("--out", out, "Output root; the run lands in <out>/<config hash>")->required();
  generate->add_option("--budget-tokens", budget, "Also select a token-budgeted subset of this size");
  generate->add_flag("--resume", resume, "Skip stages whose artifacts match the config hash");
  generate->add_option("--stop-after", stop_after, "Stop after stage 1-4 (extraction|semantic|prompts|dataset)");

  std::string pred;
  std::string judge_spec;
  std::optional<std::size_t> runs;
  std::string eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions with overlap metrics and the judge rubric");
  evaluate->add_option("--pred", pred, "predictions.jsonl with question, reference, predicted")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--judge-endpoint", judge_spec, "'mock', a pipeline config, or an endpoint JSON file")
      ->required();
  evaluate->add_option("--runs", runs, "Judge runs per pair (default: judge.runs, 10)");
  evaluate->add_option("--out", eval_out, "Directory for metrics.json and per_pair.jsonl")->required();

  std::string embeddings;
  std::string index;
  std::string clusters;
  std::string diag_out;
  std::string std_kind = "population";
  auto* diagnose = app.add_subcommand("diagnose", "Emit heterogeneity and clustering diagnostics as CSV");
  diagnose->add_option("--embeddings", embeddings, "embeddings.bin from a run directory")
      ->required()
      ->check(CLI::ExistingFile);
  diagnose->add_option("--index", index, "Embedding index (default: embeddings_index.json next to --embeddings)");
  diagnose->add_option("--clusters", clusters, "clusters.json for cluster-size, inertia and projection tables");
  diagnose->add_option("--out", diag_out, "Output directory")->required();
  diagnose->add_option("--std", std_kind, "Standard deviation: population or sample")
      ->check(CLI::IsMember({"population", "sample"}));

  std::string validate_path;
  auto* validate = app.add_subcommand("validate-config", "Print the normalized config with all defaults filled in");
  validate->add_option("--config", validate_path, "Config file (omit for pure defaults)")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

  try {
    if (*generate) return cmd_generate(config_path, out, budget, resume, stop_after);
    if (*evaluate) return cmd_evaluate(pred, judge_spec, runs, eval_out);
    if (*diagnose) return cmd_diagnose(embeddings, index, clusters, diag_out, std_kind);
    if (*validate) return cmd_validate(validate_path);
  } catch (const ConfigError& e) {
    for (const auto& v : e.violations()) std::cerr << "config error: " << v << "\n";
    if (e.violations().empty()) std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitStage;
  }
  return 0;
}
