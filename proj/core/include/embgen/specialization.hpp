#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "embgen/consolidation.hpp"
#include "embgen/jsonio.hpp"
#include "embgen/llm.hpp"
#include "embgen/prompts.hpp"
#include "embgen/proximity.hpp"

namespace embgen {

/// Base prompt S0 or a cluster-specialized S_k.
struct SystemPrompt {
  std::string id;              // "base" or "cluster-<k>"
  std::optional<int> cluster;  // empty for the base prompt
  std::string text;
  std::vector<std::string> patterns;
  /// Set when a cluster kept S0's text because specialization was impossible.
  bool fallback = false;
};

std::string base_prompt_id();
std::string cluster_prompt_id(int cluster);

/// Renders a group's members as the numbered entity list used by the pattern
/// extraction prompt.
std::string format_group_entities(const ProximityGroup& group, const std::vector<CanonicalEntity>& entities);

/// pattern_nature for one group, or nullopt after a second schema failure.
std::optional<std::string> extract_group_pattern(const ProximityGroup& group,
                                                 const std::vector<CanonicalEntity>& entities, ChatClient& client,
                                                 const PromptLibrary& prompts);

enum class PatternAction { Redundant, Merge, AddNew };
std::string_view to_string(PatternAction action);

struct PatternUpdate {
  std::vector<std::string> patterns;
  PatternAction requested = PatternAction::Redundant;
  bool applied = false;
  std::string note;
};

/// Applies a parsed consolidation action: redundant leaves the list alone,
/// merge replaces the entry at merge_with_index, add_new appends while the
/// list is below `max_patterns`. Anything malformed is a no-op.
PatternUpdate apply_pattern_action(const std::vector<std::string>& current, const std::string& new_pattern,
                                   const json& action, std::size_t max_patterns);

/// Asks the teacher how `new_pattern` relates to `current` and applies the
/// answer. Schema failures are treated as redundant.
PatternUpdate consolidate_pattern(const std::vector<std::string>& current, const std::string& new_pattern,
                                  std::size_t max_patterns, ChatClient& client, const PromptLibrary& prompts);

/// One specialization call; an empty reply keeps the base text (fallback).
SystemPrompt specialize_prompt(const std::string& base_text, int cluster, const std::vector<std::string>& patterns,
                               ChatClient& client, const PromptLibrary& prompts);

struct SpecializationOptions {
  std::size_t max_patterns = 5;  // L
  std::size_t max_concurrency = 8;
};

struct ClusterPromptTrace {
  int cluster = 0;
  std::vector<std::size_t> groups_processed;
  std::vector<std::size_t> groups_failed;
  std::vector<std::string> actions;
};

struct SystemPromptSet {
  SystemPrompt base;
  std::map<int, SystemPrompt> clusters;
  std::vector<ClusterPromptTrace> traces;

  /// S_k when cluster k has one, otherwise S0.
  const SystemPrompt& for_cluster(int cluster) const;
  const SystemPrompt& by_id(const std::string& id) const;
};

/// Per cluster: visit groups by descending size (ties by group id), extract
/// and consolidate patterns until all groups are seen or L patterns are
/// retained, then specialize once. Clusters run concurrently.
SystemPromptSet build_system_prompts(const std::vector<ProximityGroup>& groups,
                                     const std::vector<CanonicalEntity>& entities, const std::string& base_text,
                                     ChatClient& client, const PromptLibrary& prompts,
                                     const SpecializationOptions& options = {});

json to_json(const SystemPromptSet& set);
SystemPromptSet system_prompt_set_from_json(const json& j);

}  // namespace embgen
