#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "embgen/jsonio.hpp"
#include "embgen/llm.hpp"
#include "embgen/prompts.hpp"

namespace embgen {

enum class Level { Weak = 1, Adequate = 2, Strong = 3 };
std::string_view to_string(Level level);
Level level_from_string(std::string_view s);  // throws SchemaError

enum Dimension : std::size_t { kFactualAccuracy = 0, kCompleteness = 1, kRelevance = 2, kClarity = 3 };
inline constexpr std::array<std::string_view, 4> kDimensionNames = {"factual_accuracy", "completeness", "relevance",
                                                                    "clarity"};

struct JudgeVerdict {
  std::array<Level, 4> scores{Level::Weak, Level::Weak, Level::Weak, Level::Weak};
  std::array<std::string, 4> reasoning;
};

JudgeVerdict verdict_from_json(const json& j);
json to_json(const JudgeVerdict& v);

/// 1 iff factual accuracy is Strong and completeness is Strong or Adequate.
int per_run_binary(const JudgeVerdict& v);

ChatRequest judge_request(std::string_view question, std::string_view reference, std::string_view predicted,
                          const PromptLibrary& prompts);

/// One judge run. A schema error is retried once; nullopt marks the run as
/// missing.
std::optional<JudgeVerdict> judge_answer(std::string_view question, std::string_view reference,
                                         std::string_view predicted, ChatClient& client, const PromptLibrary& prompts);

/// Mean rounded half-up back onto the 1..3 scale.
Level label_from_mean(double mean);

struct AggregatedVerdict {
  std::array<double, 4> means{};
  std::array<Level, 4> labels{};
  double binary_mean = 0.0;
  int binary = 0;
  std::size_t runs = 0;
};

/// Per-dimension ordinal means and labels, per-run binaries averaged and
/// rounded half-up. nullopt when there are no verdicts.
std::optional<AggregatedVerdict> aggregate_runs(std::span<const JudgeVerdict> verdicts);

/// Fraction of aggregated verdicts with binary == 1. Throws on empty input.
double binary_accuracy(std::span<const AggregatedVerdict> aggregated);

json to_json(const AggregatedVerdict& a);

}  // namespace embgen
