#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "embgen/jsonio.hpp"
#include "embgen/judge.hpp"
#include "embgen/llm.hpp"
#include "embgen/metrics.hpp"
#include "embgen/prompts.hpp"

namespace embgen {

struct Prediction {
  std::string question;
  std::string reference;
  std::string predicted;
};

/// Reads predictions.jsonl ({question, reference, predicted} per line).
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

struct EvaluationOptions {
  std::size_t runs = 10;
  std::size_t max_concurrency = 8;
};

struct PairEvaluation {
  Prediction prediction;
  OverlapMetrics overlap;
  std::vector<std::optional<JudgeVerdict>> runs;  // nullopt = missing run
  std::optional<AggregatedVerdict> aggregated;    // nullopt = excluded
};

struct EvaluationReport {
  std::vector<PairEvaluation> pairs;
  OverlapMetrics mean_overlap;
  std::array<double, 4> mean_dimensions{};
  std::size_t judged_pairs = 0;
  std::size_t excluded_pairs = 0;
  std::size_t missing_runs = 0;
  std::optional<double> binary_accuracy;
};

EvaluationReport evaluate_predictions(const std::vector<Prediction>& predictions, ChatClient& judge,
                                      const PromptLibrary& prompts, const EvaluationOptions& options = {});

json metrics_json(const EvaluationReport& report, const EvaluationOptions& options);
json to_json(const PairEvaluation& pair);

/// Writes metrics.json and per_pair.jsonl into `out_dir`.
void write_evaluation(const std::filesystem::path& out_dir, const EvaluationReport& report,
                      const EvaluationOptions& options);

}  // namespace embgen
