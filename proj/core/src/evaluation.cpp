#include "embgen/evaluation.hpp"

#include <spdlog/spdlog.h>

#include "embgen/errors.hpp"
#include "embgen/parallel.hpp"

namespace embgen {

namespace {

constexpr const char* kMeteorNote =
    "METEOR uses exact and Porter-stem unigram matching only; the synonym matching stage is not applied.";

json overlap_json(const OverlapMetrics& m) {
  return json{{"bleu1", m.bleu1},   {"bleu2", m.bleu2},   {"bleu4", m.bleu4}, {"rouge1", m.rouge1},
              {"rouge2", m.rouge2}, {"rougeL", m.rougeL}, {"meteor", m.meteor}};
}

}  // namespace

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::vector<Prediction> out;
  std::size_t line = 0;
  for (const json& j : read_jsonl(path)) {
    ++line;
    try {
      out.push_back({j.at("question").get<std::string>(), j.at("reference").get<std::string>(),
                     j.at("predicted").get<std::string>()});
    } catch (const json::exception& e) {
      throw SchemaError(path.string() + " record " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

EvaluationReport evaluate_predictions(const std::vector<Prediction>& predictions, ChatClient& judge,
                                      const PromptLibrary& prompts, const EvaluationOptions& options) {
  if (options.runs == 0) throw Error("evaluation: runs must be >= 1");
  EvaluationReport report;
  report.pairs.resize(predictions.size());
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    report.pairs[i].prediction = predictions[i];
    report.pairs[i].overlap = overlap_metrics(predictions[i].predicted, predictions[i].reference);
  }

  // Every (pair, run) is an independent request.
  const std::size_t total = predictions.size() * options.runs;
  const std::size_t width = std::min(options.max_concurrency, judge.max_concurrency());
  auto verdicts = parallel_indexed(total, width, [&](std::size_t idx) {
    const Prediction& p = predictions[idx / options.runs];
    return judge_answer(p.question, p.reference, p.predicted, judge, prompts);
  });

  OverlapMetrics sum;
  for (std::size_t i = 0; i < report.pairs.size(); ++i) {
    auto& pair = report.pairs[i];
    std::vector<JudgeVerdict> ok;
    for (std::size_t r = 0; r < options.runs; ++r) {
      auto& v = verdicts[i * options.runs + r];
      if (v) {
        ok.push_back(*v);
      } else {
        ++report.missing_runs;
      }
      pair.runs.push_back(std::move(v));
    }
    pair.aggregated = aggregate_runs(ok);
    if (pair.aggregated) {
      ++report.judged_pairs;
      for (std::size_t d = 0; d < 4; ++d) report.mean_dimensions[d] += pair.aggregated->means[d];
    } else {
      ++report.excluded_pairs;
      spdlog::warn("evaluation: pair {} has no valid judge verdict and is excluded from judge aggregates", i);
    }
    sum.bleu1 += pair.overlap.bleu1;
    sum.bleu2 += pair.overlap.bleu2;
    sum.bleu4 += pair.overlap.bleu4;
    sum.rouge1 += pair.overlap.rouge1;
    sum.rouge2 += pair.overlap.rouge2;
    sum.rougeL += pair.overlap.rougeL;
    sum.meteor += pair.overlap.meteor;
  }

  if (!report.pairs.empty()) {
    const double n = static_cast<double>(report.pairs.size());
    report.mean_overlap = {sum.bleu1 / n,  sum.bleu2 / n,  sum.bleu4 / n, sum.rouge1 / n,
                           sum.rouge2 / n, sum.rougeL / n, sum.meteor / n};
  }
  if (report.judged_pairs > 0) {
    for (auto& m : report.mean_dimensions) m /= static_cast<double>(report.judged_pairs);
    std::vector<AggregatedVerdict> aggregated;
    for (const auto& p : report.pairs) {
      if (p.aggregated) aggregated.push_back(*p.aggregated);
    }
    report.binary_accuracy = binary_accuracy(aggregated);
  }
  return report;
}

json metrics_json(const EvaluationReport& report, const EvaluationOptions& options) {
  json dims = json::object();
  for (std::size_t d = 0; d < 4; ++d) dims[std::string(kDimensionNames[d])] = report.mean_dimensions[d];
  return json{{"note", kMeteorNote},
              {"pairs", report.pairs.size()},
              {"judge_runs", options.runs},
              {"judged_pairs", report.judged_pairs},
              {"excluded_pairs", report.excluded_pairs},
              {"missing_runs", report.missing_runs},
              {"overlap", overlap_json(report.mean_overlap)},
              {"judge_means", dims},
              {"binary_accuracy", report.binary_accuracy ? json(*report.binary_accuracy) : json(nullptr)}};
}

json to_json(const PairEvaluation& pair) {
  json runs = json::array();
  for (const auto& r : pair.runs) runs.push_back(r ? to_json(*r) : json(nullptr));
  return json{{"question", pair.prediction.question},
              {"reference", pair.prediction.reference},
              {"predicted", pair.prediction.predicted},
              {"overlap", overlap_json(pair.overlap)},
              {"judge_runs", runs},
              {"aggregated", pair.aggregated ? to_json(*pair.aggregated) : json(nullptr)}};
}

void write_evaluation(const std::filesystem::path& out_dir, const EvaluationReport& report,
                      const EvaluationOptions& options) {
  std::filesystem::create_directories(out_dir);
  std::vector<json> rows;
  rows.reserve(report.pairs.size());
  for (const auto& p : report.pairs) rows.push_back(to_json(p));
  write_jsonl(out_dir / "per_pair.jsonl", rows);
  write_json(out_dir / "metrics.json", metrics_json(report, options));
}

}  // namespace embgen
