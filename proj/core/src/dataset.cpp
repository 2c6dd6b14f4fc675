#include "embgen/dataset.hpp"

#include <set>

#include <spdlog/spdlog.h>

#include "embgen/errors.hpp"

namespace embgen {

GroupClusters group_clusters(const std::vector<ProximityGroup>& groups) {
  GroupClusters out;
  for (const auto& g : groups) out.emplace(g.group_id, g.cluster_id);
  return out;
}

std::vector<int> provenance_clusters(const QaPair& qa, const GroupClusters& clusters) {
  if (qa.source_groups.empty()) throw ProvenanceError("QA without source groups");
  std::set<int> seen;
  for (std::size_t g : qa.source_groups) {
    auto it = clusters.find(g);
    if (it == clusters.end()) throw ProvenanceError("QA references unknown group " + std::to_string(g));
    seen.insert(it->second);
  }
  return {seen.begin(), seen.end()};
}

const SystemPrompt& assign_system_prompt(const QaPair& qa, const GroupClusters& clusters,
                                         const SystemPromptSet& prompts) {
  const auto cs = provenance_clusters(qa, clusters);
  return cs.size() == 1 ? prompts.for_cluster(cs.front()) : prompts.base;
}

json to_json(const DatasetRecord& r) {
  return json{{"system_prompt_id", r.system_prompt_id},
              {"system_prompt_text", r.system_prompt_text},
              {"question", r.question},
              {"answer", r.answer},
              {"provenance",
               {{"strategy", to_string(r.strategy)},
                {"source_groups", r.source_groups},
                {"clusters", r.clusters},
                {"question_type", r.question_type},
                {"cross_group", r.cross_group}}}};
}

DatasetRecord dataset_record_from_json(const json& j) {
  DatasetRecord r;
  r.system_prompt_id = j.at("system_prompt_id").get<std::string>();
  r.system_prompt_text = j.at("system_prompt_text").get<std::string>();
  r.question = j.at("question").get<std::string>();
  r.answer = j.at("answer").get<std::string>();
  const json& p = j.at("provenance");
  r.strategy = strategy_from_string(p.at("strategy").get<std::string>());
  r.source_groups = p.at("source_groups").get<std::vector<std::size_t>>();
  r.clusters = p.at("clusters").get<std::vector<int>>();
  r.question_type = p.at("question_type").get<std::string>();
  r.cross_group = p.at("cross_group").get<bool>();
  return r;
}

AssembledDataset assemble_records(const std::vector<QaPair>& qas, const GroupClusters& clusters,
                                  const SystemPromptSet& prompts, const AssemblyOptions& options) {
  AssembledDataset out;
  for (const auto& qa : qas) {
    try {
      DatasetRecord r;
      r.clusters = provenance_clusters(qa, clusters);
      const SystemPrompt& s = options.base_prompt_only ? prompts.base : assign_system_prompt(qa, clusters, prompts);
      r.system_prompt_id = s.id;
      r.system_prompt_text = s.text;
      r.question = qa.question;
      r.answer = qa.answer;
      r.strategy = qa.strategy;
      r.source_groups = qa.source_groups;
      r.question_type = qa.question_type;
      r.cross_group = qa.cross_group;
      out.records.push_back(std::move(r));
    } catch (const ProvenanceError& e) {
      ++out.rejected;
      spdlog::warn("dataset: rejected QA: {}", e.what());
    }
  }
  return out;
}

json dataset_counts(const std::vector<DatasetRecord>& records) {
  std::map<std::string, std::size_t> by_strategy{{"proximity", 0}, {"intra", 0}, {"inter", 0}};
  std::map<std::string, std::size_t> by_cluster;
  std::map<std::string, std::size_t> by_prompt;
  for (const auto& r : records) {
    ++by_strategy[std::string(to_string(r.strategy))];
    ++by_cluster[r.clusters.size() == 1 ? std::to_string(r.clusters.front()) : "multi"];
    ++by_prompt[r.system_prompt_id];
  }
  return json{{"records", records.size()}, {"by_strategy", by_strategy}, {"by_cluster", by_cluster},
              {"by_system_prompt", by_prompt}};
}

void write_dataset(const std::filesystem::path& dir, const std::vector<DatasetRecord>& records, const json& extra) {
  std::vector<json> lines;
  lines.reserve(records.size());
  for (const auto& r : records) lines.push_back(to_json(r));
  write_jsonl(dir / "dataset.jsonl", lines);
  json manifest = extra.is_object() ? extra : json::object();
  manifest["counts"] = dataset_counts(records);
  write_json(dir / "manifest.json", manifest);
}

BudgetSelection calibrate_token_budget(std::span<const std::size_t> record_tokens, std::size_t target,
                                       std::size_t tolerance) {
  if (target == 0) throw ConfigError({"token budget target must be > 0"});
  const std::size_t lo = target > tolerance ? target - tolerance : 0;
  const std::size_t hi = target + tolerance;
  BudgetSelection s;
  std::size_t cum = 0;
  for (std::size_t i = 0; i < record_tokens.size(); ++i) {
    cum += record_tokens[i];
    if (cum >= lo) {
      s.count = i + 1;
      s.tokens = cum;
      s.within_tolerance = cum <= hi;
      if (!s.within_tolerance) {
        s.warning = "no prefix lands within +/-" + std::to_string(tolerance) + " tokens of " + std::to_string(target) +
                    "; selected " + std::to_string(s.count) + " records (" + std::to_string(cum) + " tokens)";
      }
      return s;
    }
  }
  s.count = record_tokens.size();
  s.tokens = cum;
  s.shortfall = true;
  s.warning = "token budget shortfall: dataset holds " + std::to_string(cum) + " tokens, below target " +
              std::to_string(target) + " - " + std::to_string(tolerance);
  return s;
}

std::size_t record_token_count(const DatasetRecord& record, const Tokenizer& tokenizer) {
  return tokenizer.count(record.system_prompt_text) + tokenizer.count(record.question) +
         tokenizer.count(record.answer);
}

BudgetSelection calibrate_token_budget(const std::vector<DatasetRecord>& records, std::size_t target,
                                       std::size_t tolerance, const Tokenizer& tokenizer) {
  std::vector<std::size_t> tokens;
  tokens.reserve(records.size());
  for (const auto& r : records) tokens.push_back(record_token_count(r, tokenizer));
  auto s = calibrate_token_budget(tokens, target, tolerance);
  if (!s.warning.empty()) spdlog::warn("{}", s.warning);
  return s;
}

}  // namespace embgen
