#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "embgen/consolidation.hpp"
#include "embgen/jsonio.hpp"
#include "embgen/llm.hpp"
#include "embgen/prompts.hpp"
#include "embgen/proximity.hpp"
#include "embgen/rng.hpp"

namespace embgen {

enum class Strategy { Proximity, Intra, Inter };
std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

struct QaPair {
  std::string question;
  std::string answer;
  std::vector<std::string> primary_entities;
  std::vector<std::string> supporting_entities;
  /// Groups the generation instance was built from. Always non-empty.
  std::vector<std::size_t> source_groups;
  /// source_groups exactly as the model reported them (multi-group only).
  std::vector<std::string> reported_source_groups;
  std::string question_type;
  bool cross_group = false;
  std::string rationale;
  Strategy strategy = Strategy::Proximity;
  std::size_t instance = 0;  // index of the generation instance within its strategy
};

json to_json(const QaPair& qa);
QaPair qa_pair_from_json(const json& j);

struct SamplingConfig {
  double rho_prox = 0.6;
  double rho_intra = 0.3;
  double rho_inter = 0.1;
  std::size_t g = 2;
  std::uint64_t seed = 42;
};

/// Every violated constraint, empty when the config is usable.
std::vector<std::string> validate_sampling(const SamplingConfig& config);

/// floor(x + 0.5), guarded against values like 2.4999999999 that are 2.5 in
/// exact arithmetic.
std::size_t round_half_up(double x);

struct SamplingTargets {
  std::map<int, std::size_t> n_prox_per_cluster;
  std::map<int, std::size_t> n_intra_per_cluster;
  std::size_t n_prox_total = 0;
  std::size_t n_inter_total = 0;
};

/// n_k^intra = round(n_k^prox * rho_intra / rho_prox) per cluster and
/// n^inter = round(n^prox * rho_inter / rho_prox) globally.
SamplingTargets compute_sampling_targets(const std::map<int, std::size_t>& observed, const SamplingConfig& config);

/// g distinct groups drawn uniformly from one cluster's groups, or empty if
/// the cluster has fewer than g.
std::vector<std::size_t> sample_intra(const std::vector<std::size_t>& cluster_groups, std::size_t g, Rng& rng);

/// g groups spanning at least two clusters. With K >= g clusters, g distinct
/// clusters are drawn with probability proportional to their group counts
/// and one group is taken uniformly from each. With K < g, clusters are
/// drawn with replacement (weight = groups not yet chosen) and every pick is
/// a new group; single-cluster draws are rejected. Empty when fewer than two
/// clusters or fewer than g groups exist.
std::vector<std::size_t> sample_inter(const std::map<int, std::vector<std::size_t>>& groups_by_cluster, std::size_t g,
                                      Rng& rng);

/// Text blocks substituted into the QA prompts.
std::string format_entity_blocks(const ProximityGroup& group, const std::vector<CanonicalEntity>& entities);
std::string format_group_blocks(const std::vector<const ProximityGroup*>& groups,
                                const std::vector<CanonicalEntity>& entities);

ChatRequest proximity_request(const ProximityGroup& group, const std::vector<CanonicalEntity>& entities,
                              const PromptLibrary& prompts);
ChatRequest multi_group_request(const std::vector<const ProximityGroup*>& groups, Strategy mode,
                                const std::vector<CanonicalEntity>& entities, const PromptLibrary& prompts);

struct InstanceResult {
  std::vector<QaPair> qas;
  bool ok = true;
  std::string error;
};

/// One proximity instance. Singletons use the single-entity prompt.
InstanceResult generate_proximity_qas(const ProximityGroup& group, const std::vector<CanonicalEntity>& entities,
                                      ChatClient& client, const PromptLibrary& prompts);

/// One intra or inter instance over the given groups.
InstanceResult generate_multi_group_qas(const std::vector<const ProximityGroup*>& groups, Strategy mode,
                                        const std::vector<CanonicalEntity>& entities, ChatClient& client,
                                        const PromptLibrary& prompts);

struct StrategyProgress {
  std::size_t target = 0;
  std::size_t realized = 0;
  std::size_t attempts = 0;
  std::size_t failed = 0;
  bool eligible = true;
};

struct GenerationReport {
  SamplingTargets targets;
  std::size_t proximity_instances = 0;
  std::size_t proximity_failed = 0;
  std::map<int, StrategyProgress> intra;
  StrategyProgress inter;
  std::vector<std::string> warnings;
};

struct GenerationResult {
  std::vector<QaPair> qas;  // proximity, then intra by cluster, then inter
  GenerationReport report;
};

struct GenerationOptions {
  SamplingConfig sampling;
  /// Attempts per strategy target are bounded by attempt_factor * target.
  std::size_t attempt_factor = 3;
  std::size_t max_concurrency = 8;
};

/// Proximity over every group once, then intra per eligible cluster, then
/// inter. The intra/inter instance plans are drawn from the seed before any
/// of those calls is issued; calls run in waves whose size depends only on
/// earlier results, and QAs beyond a target are trimmed so that realized
/// counts equal targets whenever the attempt bound allows.
GenerationResult run_generation(const std::vector<ProximityGroup>& groups,
                                const std::vector<CanonicalEntity>& entities, ChatClient& client,
                                const PromptLibrary& prompts, const GenerationOptions& options = {});

json to_json(const GenerationReport& report);

}  // namespace embgen
