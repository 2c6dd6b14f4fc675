#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "embgen/jsonio.hpp"
#include "embgen/proximity.hpp"
#include "embgen/specialization.hpp"
#include "embgen/synthesis.hpp"
#include "embgen/tokenizer.hpp"

namespace embgen {

/// Cluster of every known group id.
using GroupClusters = std::map<std::size_t, int>;
GroupClusters group_clusters(const std::vector<ProximityGroup>& groups);

/// Distinct clusters behind the QA's source groups. Throws ProvenanceError on
/// an unknown group or an empty source list.
std::vector<int> provenance_clusters(const QaPair& qa, const GroupClusters& clusters);

/// Single-cluster provenance selects that cluster's prompt (S0 when it has
/// none); provenance spanning clusters selects S0.
const SystemPrompt& assign_system_prompt(const QaPair& qa, const GroupClusters& clusters,
                                         const SystemPromptSet& prompts);

struct DatasetRecord {
  std::string system_prompt_id;
  std::string system_prompt_text;
  std::string question;
  std::string answer;
  Strategy strategy = Strategy::Proximity;
  std::vector<std::size_t> source_groups;
  std::vector<int> clusters;
  std::string question_type;
  bool cross_group = false;
};

json to_json(const DatasetRecord& record);
DatasetRecord dataset_record_from_json(const json& j);

struct AssemblyOptions {
  /// Ablation: every record uses S0.
  bool base_prompt_only = false;
};

struct AssembledDataset {
  std::vector<DatasetRecord> records;
  std::size_t rejected = 0;
};

/// Builds one record per QA in input order; QAs with broken provenance are
/// rejected (counted, logged) instead of emitted.
AssembledDataset assemble_records(const std::vector<QaPair>& qas, const GroupClusters& clusters,
                                  const SystemPromptSet& prompts, const AssemblyOptions& options = {});

/// Per-strategy and per-cluster counts ("multi" for records spanning clusters).
json dataset_counts(const std::vector<DatasetRecord>& records);

/// Writes dataset.jsonl and manifest.json into `dir`. The manifest holds the
/// counts plus whatever `extra` carries (targets, config snapshot, seed...);
/// nothing time-dependent, so reruns are byte-identical.
void write_dataset(const std::filesystem::path& dir, const std::vector<DatasetRecord>& records, const json& extra);

struct BudgetSelection {
  std::size_t count = 0;
  std::size_t tokens = 0;
  bool within_tolerance = false;
  bool shortfall = false;
  std::string warning;
};

/// Smallest prefix whose cumulative token count lands within
/// [target - tolerance, target + tolerance]. If the whole dataset is below
/// the window, everything is selected with a shortfall warning; if the
/// window is jumped over, the smallest prefix reaching target - tolerance is
/// returned and flagged as outside the tolerance.
BudgetSelection calibrate_token_budget(std::span<const std::size_t> record_tokens, std::size_t target,
                                       std::size_t tolerance = 20000);

/// Tokens of system prompt + question + answer.
std::size_t record_token_count(const DatasetRecord& record, const Tokenizer& tokenizer);

BudgetSelection calibrate_token_budget(const std::vector<DatasetRecord>& records, std::size_t target,
                                       std::size_t tolerance, const Tokenizer& tokenizer);

}  // namespace embgen
