#include "embgen/judge.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "embgen/errors.hpp"
#include "embgen/payload.hpp"

namespace embgen {

std::string_view to_string(Level level) {
  switch (level) {
    case Level::Weak: return "Weak";
    case Level::Adequate: return "Adequate";
    case Level::Strong: return "Strong";
  }
  return "Weak";
}

Level level_from_string(std::string_view s) {
  if (s == "Strong") return Level::Strong;
  if (s == "Adequate") return Level::Adequate;
  if (s == "Weak") return Level::Weak;
  throw SchemaError("score '" + std::string(s) + "' is not one of Strong|Adequate|Weak");
}

JudgeVerdict verdict_from_json(const json& j) {
  JudgeVerdict v;
  for (std::size_t d = 0; d < kDimensionNames.size(); ++d) {
    const std::string key(kDimensionNames[d]);
    if (!j.contains(key)) throw SchemaError("missing key: " + key);
    const json& entry = j.at(key);
    if (entry.is_string()) {
      v.scores[d] = level_from_string(entry.get<std::string>());
    } else {
      v.scores[d] = level_from_string(entry.at("score").get<std::string>());
      if (entry.contains("reasoning") && entry["reasoning"].is_string()) v.reasoning[d] = entry["reasoning"].get<std::string>();
    }
  }
  return v;
}

json to_json(const JudgeVerdict& v) {
  json j = json::object();
  for (std::size_t d = 0; d < kDimensionNames.size(); ++d) {
    j[std::string(kDimensionNames[d])] = {{"score", to_string(v.scores[d])}, {"reasoning", v.reasoning[d]}};
  }
  return j;
}

int per_run_binary(const JudgeVerdict& v) {
  return v.scores[kFactualAccuracy] == Level::Strong && v.scores[kCompleteness] != Level::Weak ? 1 : 0;
}

ChatRequest judge_request(std::string_view question, std::string_view reference, std::string_view predicted,
                          const PromptLibrary& prompts) {
  return {prompts.get(prompt_keys::kJudgeSystem),
          prompts.render(prompt_keys::kJudgeUser, {{"question", std::string(question)},
                                                   {"ground_truth", std::string(reference)},
                                                   {"predicted", std::string(predicted)}})};
}

std::optional<JudgeVerdict> judge_answer(std::string_view question, std::string_view reference,
                                         std::string_view predicted, ChatClient& client, const PromptLibrary& prompts) {
  if (question.empty() || reference.empty() || predicted.empty()) {
    throw Error("judge_answer: question, reference and prediction must be non-empty");
  }
  const ChatRequest request = judge_request(question, reference, predicted, prompts);
  std::string error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      return verdict_from_json(parse_json_payload(client.complete(request).content, PayloadKind::JudgeVerdict).value);
    } catch (const SchemaError& e) {
      error = e.what();
    }
  }
  spdlog::warn("judge: run recorded as missing ({})", error);
  return std::nullopt;
}

Level label_from_mean(double mean) {
  const auto r = static_cast<int>(std::floor(mean + 0.5 + 1e-9));
  return static_cast<Level>(std::clamp(r, 1, 3));
}

std::optional<AggregatedVerdict> aggregate_runs(std::span<const JudgeVerdict> verdicts) {
  if (verdicts.empty()) return std::nullopt;
  AggregatedVerdict a;
  a.runs = verdicts.size();
  std::array<long, 4> sums{};
  long binaries = 0;
  for (const auto& v : verdicts) {
    for (std::size_t d = 0; d < 4; ++d) sums[d] += static_cast<int>(v.scores[d]);
    binaries += per_run_binary(v);
  }
  const double n = static_cast<double>(verdicts.size());
  for (std::size_t d = 0; d < 4; ++d) {
    a.means[d] = static_cast<double>(sums[d]) / n;
    a.labels[d] = label_from_mean(a.means[d]);
  }
  a.binary_mean = static_cast<double>(binaries) / n;
  a.binary = a.binary_mean + 1e-9 >= 0.5 ? 1 : 0;
  return a;
}

double binary_accuracy(std::span<const AggregatedVerdict> aggregated) {
  if (aggregated.empty()) throw Error("binary_accuracy: no aggregated verdicts");
  std::size_t positives = 0;
  for (const auto& a : aggregated) positives += static_cast<std::size_t>(a.binary);
  return static_cast<double>(positives) / static_cast<double>(aggregated.size());
}

json to_json(const AggregatedVerdict& a) {
  json means = json::object();
  json labels = json::object();
  for (std::size_t d = 0; d < 4; ++d) {
    means[std::string(kDimensionNames[d])] = a.means[d];
    labels[std::string(kDimensionNames[d])] = to_string(a.labels[d]);
  }
  return json{{"means", means}, {"labels", labels}, {"binary_mean", a.binary_mean}, {"binary", a.binary},
              {"runs", a.runs}};
}

}  // namespace embgen
