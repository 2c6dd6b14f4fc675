#include "embgen/specialization.hpp"

#include <algorithm>

#include <spdlog/spdlog.h>

#include "embgen/errors.hpp"
#include "embgen/parallel.hpp"
#include "embgen/payload.hpp"

namespace embgen {

std::string base_prompt_id() { return "base"; }
std::string cluster_prompt_id(int cluster) { return "cluster-" + std::to_string(cluster); }

std::string format_group_entities(const ProximityGroup& group, const std::vector<CanonicalEntity>& entities) {
  std::string out;
  for (std::size_t i = 0; i < group.members.size(); ++i) {
    const auto& e = entities.at(group.members[i]);
    if (i) out += "\n";
    out += std::to_string(i + 1) + ". " + e.canonical_name + ": " + e.description;
  }
  return out;
}

std::optional<std::string> extract_group_pattern(const ProximityGroup& group,
                                                 const std::vector<CanonicalEntity>& entities, ChatClient& client,
                                                 const PromptLibrary& prompts) {
  const ChatRequest request{prompts.get(prompt_keys::kPatternSystem),
                            prompts.render(prompt_keys::kPatternUser,
                                           {{"group_size", std::to_string(group.members.size())},
                                            {"group_entities", format_group_entities(group, entities)}})};
  std::string error;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      auto parsed = parse_json_payload(client.complete(request).content, PayloadKind::Pattern);
      return parsed.value["pattern_nature"].get<std::string>();
    } catch (const SchemaError& e) {
      error = e.what();
    }
  }
  spdlog::warn("specialization: no pattern for group {} ({})", group.group_id, error);
  return std::nullopt;
}

std::string_view to_string(PatternAction action) {
  switch (action) {
    case PatternAction::Redundant: return "redundant";
    case PatternAction::Merge: return "merge";
    case PatternAction::AddNew: return "add_new";
  }
  return "redundant";
}

PatternUpdate apply_pattern_action(const std::vector<std::string>& current, const std::string& new_pattern,
                                   const json& action, std::size_t max_patterns) {
  PatternUpdate u;
  u.patterns = current;
  const std::string name = action.value("action", std::string{});
  if (name == "redundant") {
    u.requested = PatternAction::Redundant;
    u.applied = true;
  } else if (name == "merge") {
    u.requested = PatternAction::Merge;
    const json& idx = action.contains("merge_with_index") ? action["merge_with_index"] : json();
    const json& merged = action.contains("merged_pattern") ? action["merged_pattern"] : json();
    if (!idx.is_number_integer() || idx.get<long long>() < 0 ||
        static_cast<std::size_t>(idx.get<long long>()) >= current.size()) {
      u.note = "merge index out of range; treated as redundant";
    } else if (!merged.is_string() || merged.get<std::string>().empty()) {
      u.note = "merge without merged_pattern; treated as redundant";
    } else {
      u.patterns[static_cast<std::size_t>(idx.get<long long>())] = merged.get<std::string>();
      u.applied = true;
    }
  } else if (name == "add_new") {
    u.requested = PatternAction::AddNew;
    if (current.size() < max_patterns) {
      u.patterns.push_back(new_pattern);
      u.applied = true;
    } else {
      u.note = "pattern cap reached; add_new ignored";
    }
  } else {
    u.note = "unknown action '" + name + "'; treated as redundant";
  }
  return u;
}

namespace {

std::string format_pattern_list(const std::vector<std::string>& patterns) {
  if (patterns.empty()) return "(none)";
  std::string out;
  for (std::size_t i = 0; i < patterns.size(); ++i) {
    if (i) out += "\n";
    out += std::to_string(i) + ". " + patterns[i];
  }
  return out;
}

}  // namespace

PatternUpdate consolidate_pattern(const std::vector<std::string>& current, const std::string& new_pattern,
                                  std::size_t max_patterns, ChatClient& client, const PromptLibrary& prompts) {
  const ChatRequest request{prompts.get(prompt_keys::kPatternMergeSystem),
                            prompts.render(prompt_keys::kPatternMergeUser,
                                           {{"current_list", format_pattern_list(current)},
                                            {"new_pattern", new_pattern}})};
  try {
    auto parsed = parse_json_payload(client.complete(request).content, PayloadKind::ConsolidationAction);
    auto update = apply_pattern_action(current, new_pattern, parsed.value, max_patterns);
    if (!update.note.empty()) spdlog::info("specialization: {}", update.note);
    return update;
  } catch (const SchemaError& e) {
    PatternUpdate u;
    u.patterns = current;
    u.note = std::string("unparseable consolidation reply; treated as redundant: ") + e.what();
    spdlog::warn("specialization: {}", u.note);
    return u;
  }
}

SystemPrompt specialize_prompt(const std::string& base_text, int cluster, const std::vector<std::string>& patterns,
                               ChatClient& client, const PromptLibrary& prompts) {
  SystemPrompt p{cluster_prompt_id(cluster), cluster, base_text, patterns, false};
  if (patterns.empty()) {
    p.fallback = true;
    return p;
  }
  std::string list;
  for (const auto& pat : patterns) list += (list.empty() ? "- " : "\n- ") + pat;
  const ChatRequest request{prompts.get(prompt_keys::kSpecializeSystem),
                            prompts.render(prompt_keys::kSpecializeUser,
                                           {{"base_prompt", base_text}, {"cluster_patterns", list}})};
  std::string text = client.complete(request).content;
  const auto b = text.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    spdlog::warn("specialization: empty prompt for cluster {}; keeping the base prompt", cluster);
    p.fallback = true;
    return p;
  }
  text = text.substr(b, text.find_last_not_of(" \t\r\n") - b + 1);
  p.text = std::move(text);
  return p;
}

const SystemPrompt& SystemPromptSet::for_cluster(int cluster) const {
  auto it = clusters.find(cluster);
  return it == clusters.end() ? base : it->second;
}

const SystemPrompt& SystemPromptSet::by_id(const std::string& id) const {
  if (id == base.id) return base;
  for (const auto& [_, p] : clusters) {
    if (p.id == id) return p;
  }
  throw Error("unknown system prompt id: " + id);
}

SystemPromptSet build_system_prompts(const std::vector<ProximityGroup>& groups,
                                     const std::vector<CanonicalEntity>& entities, const std::string& base_text,
                                     ChatClient& client, const PromptLibrary& prompts,
                                     const SpecializationOptions& options) {
  SystemPromptSet set;
  set.base = {base_prompt_id(), std::nullopt, base_text, {}, false};

  std::map<int, std::vector<const ProximityGroup*>> by_cluster;
  for (const auto& g : groups) by_cluster[g.cluster_id].push_back(&g);
  std::vector<std::pair<int, std::vector<const ProximityGroup*>>> clusters(by_cluster.begin(), by_cluster.end());
  for (auto& [_, gs] : clusters) {
    std::stable_sort(gs.begin(), gs.end(), [](const ProximityGroup* a, const ProximityGroup* b) {
      return a->members.size() != b->members.size() ? a->members.size() > b->members.size()
                                                    : a->group_id < b->group_id;
    });
  }

  struct ClusterResult {
    SystemPrompt prompt;
    ClusterPromptTrace trace;
  };
  auto results = parallel_indexed(clusters.size(), options.max_concurrency, [&](std::size_t c) {
    const int cluster = clusters[c].first;
    ClusterResult r;
    r.trace.cluster = cluster;
    std::vector<std::string> patterns;
    for (const ProximityGroup* g : clusters[c].second) {
      if (patterns.size() >= options.max_patterns) break;
      r.trace.groups_processed.push_back(g->group_id);
      auto pattern = extract_group_pattern(*g, entities, client, prompts);
      if (!pattern) {
        r.trace.groups_failed.push_back(g->group_id);
        continue;
      }
      auto update = consolidate_pattern(patterns, *pattern, options.max_patterns, client, prompts);
      r.trace.actions.push_back(std::string(to_string(update.requested)) + (update.applied ? "" : " (ignored)"));
      patterns = std::move(update.patterns);
    }
    r.prompt = specialize_prompt(base_text, cluster, patterns, client, prompts);
    return r;
  });
  for (auto& r : results) {
    set.traces.push_back(r.trace);
    set.clusters.emplace(r.trace.cluster, std::move(r.prompt));
  }
  return set;
}

namespace {

json prompt_to_json(const SystemPrompt& p) {
  json j{{"id", p.id}, {"text", p.text}, {"patterns", p.patterns}, {"fallback", p.fallback}};
  j["cluster"] = p.cluster ? json(*p.cluster) : json();
  return j;
}

SystemPrompt prompt_from_json(const json& j) {
  SystemPrompt p;
  p.id = j.at("id").get<std::string>();
  if (!j.at("cluster").is_null()) p.cluster = j.at("cluster").get<int>();
  p.text = j.at("text").get<std::string>();
  p.patterns = j.at("patterns").get<std::vector<std::string>>();
  p.fallback = j.at("fallback").get<bool>();
  return p;
}

}  // namespace

json to_json(const SystemPromptSet& set) {
  json clusters = json::array();
  for (const auto& [_, p] : set.clusters) clusters.push_back(prompt_to_json(p));
  json traces = json::array();
  for (const auto& t : set.traces) {
    traces.push_back({{"cluster", t.cluster},
                      {"groups_processed", t.groups_processed},
                      {"groups_failed", t.groups_failed},
                      {"actions", t.actions}});
  }
  return json{{"base", prompt_to_json(set.base)}, {"clusters", clusters}, {"traces", traces}};
}

SystemPromptSet system_prompt_set_from_json(const json& j) {
  SystemPromptSet set;
  set.base = prompt_from_json(j.at("base"));
  for (const auto& c : j.at("clusters")) {
    auto p = prompt_from_json(c);
    set.clusters.emplace(*p.cluster, std::move(p));
  }
  for (const auto& t : j.at("traces")) {
    set.traces.push_back({t.at("cluster").get<int>(), t.at("groups_processed").get<std::vector<std::size_t>>(),
                          t.at("groups_failed").get<std::vector<std::size_t>>(),
                          t.at("actions").get<std::vector<std::string>>()});
  }
  return set;
}

}  // namespace embgen
