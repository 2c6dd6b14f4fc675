#include "embgen/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <spdlog/spdlog.h>

#include "embgen/errors.hpp"
#include "embgen/parallel.hpp"
#include "embgen/payload.hpp"

namespace embgen {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Proximity: return "proximity";
    case Strategy::Intra: return "intra";
    case Strategy::Inter: return "inter";
  }
  return "proximity";
}

Strategy strategy_from_string(std::string_view s) {
  if (s == "proximity") return Strategy::Proximity;
  if (s == "intra") return Strategy::Intra;
  if (s == "inter") return Strategy::Inter;
  throw SchemaError("unknown strategy: " + std::string(s));
}

json to_json(const QaPair& qa) {
  return json{{"question", qa.question},
              {"answer", qa.answer},
              {"primary_entities", qa.primary_entities},
              {"supporting_entities", qa.supporting_entities},
              {"source_groups", qa.source_groups},
              {"reported_source_groups", qa.reported_source_groups},
              {"question_type", qa.question_type},
              {"cross_group", qa.cross_group},
              {"rationale", qa.rationale},
              {"strategy", to_string(qa.strategy)},
              {"instance", qa.instance}};
}

QaPair qa_pair_from_json(const json& j) {
  QaPair qa;
  qa.question = j.at("question").get<std::string>();
  qa.answer = j.at("answer").get<std::string>();
  qa.primary_entities = j.at("primary_entities").get<std::vector<std::string>>();
  qa.supporting_entities = j.at("supporting_entities").get<std::vector<std::string>>();
  qa.source_groups = j.at("source_groups").get<std::vector<std::size_t>>();
  qa.reported_source_groups = j.at("reported_source_groups").get<std::vector<std::string>>();
  qa.question_type = j.at("question_type").get<std::string>();
  qa.cross_group = j.at("cross_group").get<bool>();
  qa.rationale = j.at("rationale").get<std::string>();
  qa.strategy = strategy_from_string(j.at("strategy").get<std::string>());
  qa.instance = j.at("instance").get<std::size_t>();
  return qa;
}

std::vector<std::string> validate_sampling(const SamplingConfig& c) {
  std::vector<std::string> v;
  if (!(c.rho_prox > 0.0)) v.push_back("sampling.rho_prox must be > 0");
  if (c.rho_intra < 0.0) v.push_back("sampling.rho_intra must be >= 0");
  if (c.rho_inter < 0.0) v.push_back("sampling.rho_inter must be >= 0");
  if (std::abs(c.rho_prox + c.rho_intra + c.rho_inter - 1.0) > 1e-9) {
    v.push_back("sampling.rho_prox + rho_intra + rho_inter must sum to 1 (got " +
                std::to_string(c.rho_prox + c.rho_intra + c.rho_inter) + ")");
  }
  if (c.g < 2) v.push_back("sampling.g must be >= 2");
  return v;
}

std::size_t round_half_up(double x) {
  if (!(x > 0.0)) return 0;
  return static_cast<std::size_t>(std::floor(x + 0.5 + 1e-9));
}

SamplingTargets compute_sampling_targets(const std::map<int, std::size_t>& observed, const SamplingConfig& config) {
  if (auto v = validate_sampling(config); !v.empty()) throw ConfigError(std::move(v));
  SamplingTargets t;
  t.n_prox_per_cluster = observed;
  for (const auto& [cluster, n] : observed) {
    t.n_prox_total += n;
    t.n_intra_per_cluster[cluster] = round_half_up(static_cast<double>(n) * (config.rho_intra / config.rho_prox));
  }
  t.n_inter_total = round_half_up(static_cast<double>(t.n_prox_total) * (config.rho_inter / config.rho_prox));
  return t;
}

std::vector<std::size_t> sample_intra(const std::vector<std::size_t>& cluster_groups, std::size_t g, Rng& rng) {
  if (g == 0 || cluster_groups.size() < g) return {};
  std::vector<std::size_t> pool = cluster_groups;
  // Partial Fisher-Yates: the first g slots become a uniform g-subset.
  for (std::size_t i = 0; i < g; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(g);
  return pool;
}

namespace {

// Index drawn with probability weights[i] / sum(weights).
std::size_t weighted_pick(const std::vector<double>& weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  const double target = rng.uniform01() * total;
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = i;
    if (target < acc) return i;
  }
  return last;
}

}  // namespace

std::vector<std::size_t> sample_inter(const std::map<int, std::vector<std::size_t>>& groups_by_cluster, std::size_t g,
                                      Rng& rng) {
  std::vector<const std::vector<std::size_t>*> clusters;
  std::size_t total_groups = 0;
  for (const auto& [_, gs] : groups_by_cluster) {
    if (!gs.empty()) {
      clusters.push_back(&gs);
      total_groups += gs.size();
    }
  }
  if (clusters.size() < 2 || g < 2 || total_groups < g) return {};

  std::vector<std::size_t> out;
  if (clusters.size() >= g) {
    std::vector<double> weights;
    for (const auto* gs : clusters) weights.push_back(static_cast<double>(gs->size()));
    for (std::size_t i = 0; i < g; ++i) {
      const std::size_t c = weighted_pick(weights, rng);
      weights[c] = 0.0;
      const auto& gs = *clusters[c];
      out.push_back(gs[static_cast<std::size_t>(rng.uniform_index(gs.size()))]);
    }
    return out;
  }

  // Fewer clusters than groups per instance: clusters repeat, groups do not.
  constexpr int kMaxRejections = 64;
  for (int attempt = 0;; ++attempt) {
    out.clear();
    std::vector<std::vector<std::size_t>> remaining;
    std::vector<double> weights;
    for (const auto* gs : clusters) {
      remaining.push_back(*gs);
      weights.push_back(static_cast<double>(gs->size()));
    }
    std::set<std::size_t> used_clusters;
    for (std::size_t i = 0; i < g; ++i) {
      std::size_t c = weighted_pick(weights, rng);
      if (attempt >= kMaxRejections && i + 1 == g && used_clusters.size() == 1 && used_clusters.count(c)) {
        // Persistent collapse onto one dominant cluster: force the last pick elsewhere.
        auto w = weights;
        w[c] = 0.0;
        c = weighted_pick(w, rng);
      }
      auto& pool = remaining[c];
      const std::size_t j = static_cast<std::size_t>(rng.uniform_index(pool.size()));
      out.push_back(pool[j]);
      pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
      weights[c] = static_cast<double>(pool.size());
      used_clusters.insert(c);
    }
    if (used_clusters.size() >= 2) return out;
  }
}

std::string format_entity_blocks(const ProximityGroup& group, const std::vector<CanonicalEntity>& entities) {
  std::string out;
  for (std::size_t i = 0; i < group.members.size(); ++i) {
    const auto& e = entities.at(group.members[i]);
    if (i) out += "\n\n";
    out += "Entity " + std::to_string(i + 1) + ": " + e.canonical_name + "\n\n" + e.description;
  }
  return out;
}

std::string format_group_blocks(const std::vector<const ProximityGroup*>& groups,
                                const std::vector<CanonicalEntity>& entities) {
  std::string out;
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const ProximityGroup& g = *groups[gi];
    const std::string n = std::to_string(gi + 1);
    if (gi) out += "\n\n";
    out += "PROXIMITY GROUP " + n + "\nGroup ID: " + std::to_string(g.group_id) +
           "\nSource Cluster: " + std::to_string(g.cluster_id) +
           "\nNumber of Entities: " + std::to_string(g.members.size());
    for (std::size_t i = 0; i < g.members.size(); ++i) {
      const auto& e = entities.at(g.members[i]);
      out += "\n\n  " + n + "." + std::to_string(i + 1) + " " + e.canonical_name + "\n\n  " + e.description;
    }
  }
  return out;
}

ChatRequest proximity_request(const ProximityGroup& group, const std::vector<CanonicalEntity>& entities,
                              const PromptLibrary& prompts) {
  if (group.members.empty()) throw Error("proximity group without members");
  if (group.members.size() == 1) {
    const auto& e = entities.at(group.members.front());
    return {prompts.get(prompt_keys::kSingleSystem),
            prompts.render(prompt_keys::kSingleUser,
                           {{"entity_name", e.canonical_name}, {"entity_explanation", e.description}})};
  }
  return {prompts.get(prompt_keys::kProximitySystem),
          prompts.render(prompt_keys::kProximityUser, {{"N", std::to_string(group.members.size())},
                                                       {"entity_blocks", format_entity_blocks(group, entities)}})};
}

ChatRequest multi_group_request(const std::vector<const ProximityGroup*>& groups, Strategy mode,
                                const std::vector<CanonicalEntity>& entities, const PromptLibrary& prompts) {
  if (mode == Strategy::Proximity) throw Error("multi_group_request: proximity is not a multi-group mode");
  std::set<int> cluster_set;
  std::size_t total = 0;
  for (const auto* g : groups) {
    cluster_set.insert(g->cluster_id);
    total += g->members.size();
  }
  const std::string m = std::to_string(groups.size());
  std::string framing;
  std::string guidance;
  std::string type;
  if (mode == Strategy::Intra) {
    type = "Same Cluster (Variety)";
    framing = prompts.render(prompt_keys::kVarietyFraming, {{"M", m}, {"cluster_id", std::to_string(*cluster_set.begin())}});
    guidance = prompts.get(prompt_keys::kVarietySynthesis);
  } else {
    type = "Cross-Cluster (Diversity)";
    std::string ids;
    for (int c : cluster_set) ids += (ids.empty() ? "" : ", ") + std::to_string(c);
    framing = prompts.render(prompt_keys::kDiversityFraming, {{"M", m}, {"cluster_ids", ids}});
    guidance = prompts.get(prompt_keys::kDiversitySynthesis);
  }
  return {prompts.get(prompt_keys::kMultiSystem),
          prompts.render(prompt_keys::kMultiUser, {{"sampling_type", type},
                                                   {"sampling_framing", framing},
                                                   {"group_blocks", format_group_blocks(groups, entities)},
                                                   {"M", m},
                                                   {"total_entities", std::to_string(total)},
                                                   {"synthesis_guidance", guidance}})};
}

namespace {

std::vector<std::string> string_list(const json& item, const char* key) {
  std::vector<std::string> out;
  if (!item.contains(key)) return out;
  const json& v = item[key];
  if (v.is_string()) {
    if (!v.get_ref<const std::string&>().empty()) out.push_back(v.get<std::string>());
  } else if (v.is_array()) {
    for (const auto& x : v) out.push_back(x.is_string() ? x.get<std::string>() : x.dump());
  }
  return out;
}

std::string string_field(const json& item, const char* key) {
  return item.contains(key) && item[key].is_string() ? item[key].get<std::string>() : std::string{};
}

InstanceResult run_instance(const ChatRequest& request, ChatClient& client, Strategy strategy,
                            const std::vector<std::size_t>& groups) {
  InstanceResult r;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      const auto parsed = parse_json_payload(client.complete(request).content, PayloadKind::QaArray);
      for (const auto& item : parsed.value) {
        QaPair qa;
        qa.question = item["question"].get<std::string>();
        qa.answer = item["answer"].get<std::string>();
        qa.primary_entities = string_list(item, "primary_entities");
        if (qa.primary_entities.empty()) qa.primary_entities = string_list(item, "primary_entity");
        qa.supporting_entities = string_list(item, "supporting_entities");
        qa.question_type = string_field(item, "question_type");
        qa.rationale = string_field(item, "rationale");
        qa.strategy = strategy;
        qa.source_groups = groups;
        if (strategy == Strategy::Proximity) {
          qa.cross_group = false;
        } else {
          qa.reported_source_groups = string_list(item, "source_groups");
          qa.cross_group = item.contains("cross_group") && item["cross_group"].is_boolean()
                               ? item["cross_group"].get<bool>()
                               : qa.reported_source_groups.size() > 1;
        }
        r.qas.push_back(std::move(qa));
      }
      return r;
    } catch (const SchemaError& e) {
      r.error = e.what();
    }
  }
  r.ok = false;
  return r;
}

}  // namespace

InstanceResult generate_proximity_qas(const ProximityGroup& group, const std::vector<CanonicalEntity>& entities,
                                      ChatClient& client, const PromptLibrary& prompts) {
  auto r = run_instance(proximity_request(group, entities, prompts), client, Strategy::Proximity, {group.group_id});
  if (group.members.size() == 1) {
    for (auto& qa : r.qas) qa.supporting_entities.clear();
  }
  if (!r.ok) spdlog::warn("proximity: group {} yielded no QAs ({})", group.group_id, r.error);
  return r;
}

InstanceResult generate_multi_group_qas(const std::vector<const ProximityGroup*>& groups, Strategy mode,
                                        const std::vector<CanonicalEntity>& entities, ChatClient& client,
                                        const PromptLibrary& prompts) {
  if (groups.size() < 2) throw Error("multi-group generation needs at least 2 groups");
  std::set<int> clusters;
  std::vector<std::size_t> ids;
  for (const auto* g : groups) {
    clusters.insert(g->cluster_id);
    ids.push_back(g->group_id);
  }
  if (mode == Strategy::Intra && clusters.size() != 1) throw Error("intra instance spans several clusters");
  if (mode == Strategy::Inter && clusters.size() < 2) throw Error("inter instance has single-cluster provenance");
  auto r = run_instance(multi_group_request(groups, mode, entities, prompts), client, mode, ids);
  if (!r.ok) spdlog::warn("{}: instance yielded no QAs ({})", to_string(mode), r.error);
  return r;
}

namespace {

struct PlannedInstance {
  std::vector<std::size_t> groups;
};

// Executes planned instances in waves until `progress.target` QAs are kept or
// the plan (already sized to the attempt bound) is exhausted.
template <class RunFn>
void execute_plan(const std::vector<PlannedInstance>& plan, StrategyProgress& progress, std::size_t concurrency,
                  RunFn&& run, std::vector<QaPair>& out) {
  std::size_t next = 0;
  std::size_t raw_yield = 0;
  while (progress.realized < progress.target && next < plan.size()) {
    const std::size_t remaining = progress.target - progress.realized;
    std::size_t want = 1;
    if (progress.attempts > 0) {
      const double avg = static_cast<double>(raw_yield) / static_cast<double>(progress.attempts);
      want = avg > 0.0 ? static_cast<std::size_t>(std::ceil(static_cast<double>(remaining) / avg - 1e-9)) : remaining;
    }
    const std::size_t wave = std::max<std::size_t>(1, std::min({want, concurrency, plan.size() - next}));
    auto results = parallel_indexed(wave, concurrency, [&](std::size_t i) { return run(next + i); });
    for (std::size_t i = 0; i < wave; ++i) {
      auto& r = results[i];
      ++progress.attempts;
      if (!r.ok) ++progress.failed;
      raw_yield += r.qas.size();
      for (auto& qa : r.qas) {
        if (progress.realized == progress.target) break;
        qa.instance = next + i;
        out.push_back(std::move(qa));
        ++progress.realized;
      }
    }
    next += wave;
  }
}

}  // namespace

GenerationResult run_generation(const std::vector<ProximityGroup>& groups,
                                const std::vector<CanonicalEntity>& entities, ChatClient& client,
                                const PromptLibrary& prompts, const GenerationOptions& options) {
  const SamplingConfig& cfg = options.sampling;
  if (auto v = validate_sampling(cfg); !v.empty()) throw ConfigError(std::move(v));
  const std::size_t concurrency = std::max<std::size_t>(options.max_concurrency, 1);

  GenerationResult result;
  auto& report = result.report;
  std::map<std::size_t, const ProximityGroup*> by_id;
  std::map<int, std::vector<std::size_t>> groups_by_cluster;
  for (const auto& g : groups) {
    if (!by_id.emplace(g.group_id, &g).second) throw Error("duplicate group id " + std::to_string(g.group_id));
    groups_by_cluster[g.cluster_id].push_back(g.group_id);
  }

  // Proximity: every group exactly once.
  auto prox = parallel_indexed(groups.size(), concurrency, [&](std::size_t i) {
    return generate_proximity_qas(groups[i], entities, client, prompts);
  });
  std::map<int, std::size_t> observed;
  for (const auto& [cluster, _] : groups_by_cluster) observed[cluster] = 0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    ++report.proximity_instances;
    if (!prox[i].ok) ++report.proximity_failed;
    observed[groups[i].cluster_id] += prox[i].qas.size();
    for (auto& qa : prox[i].qas) {
      qa.instance = i;
      result.qas.push_back(std::move(qa));
    }
  }
  report.targets = compute_sampling_targets(observed, cfg);

  // Draw every intra and inter instance before issuing any of those calls.
  Rng rng(cfg.seed);
  std::map<int, std::vector<PlannedInstance>> intra_plans;
  for (const auto& [cluster, ids] : groups_by_cluster) {
    StrategyProgress& p = report.intra[cluster];
    p.target = report.targets.n_intra_per_cluster[cluster];
    p.eligible = ids.size() >= cfg.g;
    if (!p.eligible || p.target == 0) continue;
    auto& plan = intra_plans[cluster];
    for (std::size_t a = 0; a < options.attempt_factor * p.target; ++a) plan.push_back({sample_intra(ids, cfg.g, rng)});
  }
  std::vector<PlannedInstance> inter_plan;
  report.inter.target = report.targets.n_inter_total;
  if (report.inter.target > 0) {
    if (groups_by_cluster.size() < 2) {
      report.inter.eligible = false;
      report.warnings.push_back("inter-cluster sampling disabled: fewer than two clusters");
      spdlog::warn("{}", report.warnings.back());
    } else if (groups.size() < cfg.g) {
      report.inter.eligible = false;
      report.warnings.push_back("inter-cluster sampling disabled: fewer than g proximity groups");
      spdlog::warn("{}", report.warnings.back());
    } else {
      for (std::size_t a = 0; a < options.attempt_factor * report.inter.target; ++a) {
        inter_plan.push_back({sample_inter(groups_by_cluster, cfg.g, rng)});
      }
    }
  }

  auto resolve = [&](const std::vector<std::size_t>& ids) {
    std::vector<const ProximityGroup*> gs;
    for (std::size_t id : ids) gs.push_back(by_id.at(id));
    return gs;
  };
  for (auto& [cluster, plan] : intra_plans) {
    execute_plan(plan, report.intra[cluster], concurrency,
                 [&](std::size_t i) {
                   return generate_multi_group_qas(resolve(plan[i].groups), Strategy::Intra, entities, client, prompts);
                 },
                 result.qas);
  }
  execute_plan(inter_plan, report.inter, concurrency,
               [&](std::size_t i) {
                 return generate_multi_group_qas(resolve(inter_plan[i].groups), Strategy::Inter, entities, client,
                                                 prompts);
               },
               result.qas);

  for (const auto& [cluster, p] : report.intra) {
    if (p.eligible && p.realized < p.target) {
      report.warnings.push_back("intra cluster " + std::to_string(cluster) + ": realized " +
                                std::to_string(p.realized) + " of " + std::to_string(p.target) + " after " +
                                std::to_string(p.attempts) + " attempts");
    }
  }
  if (report.inter.eligible && report.inter.realized < report.inter.target) {
    report.warnings.push_back("inter: realized " + std::to_string(report.inter.realized) + " of " +
                              std::to_string(report.inter.target) + " after " +
                              std::to_string(report.inter.attempts) + " attempts");
  }
  return result;
}

namespace {
json progress_json(const StrategyProgress& p) {
  return json{{"target", p.target}, {"realized", p.realized}, {"attempts", p.attempts}, {"failed", p.failed},
              {"eligible", p.eligible}};
}
}  // namespace

json to_json(const GenerationReport& report) {
  json intra = json::object();
  for (const auto& [c, p] : report.intra) intra[std::to_string(c)] = progress_json(p);
  json prox_per_cluster = json::object();
  for (const auto& [c, n] : report.targets.n_prox_per_cluster) prox_per_cluster[std::to_string(c)] = n;
  return json{{"proximity",
               {{"instances", report.proximity_instances},
                {"failed", report.proximity_failed},
                {"realized", report.targets.n_prox_total},
                {"per_cluster", prox_per_cluster}}},
              {"intra", intra},
              {"inter", progress_json(report.inter)},
              {"warnings", report.warnings}};
}

}  // namespace embgen
