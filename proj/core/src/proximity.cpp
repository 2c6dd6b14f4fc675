#include "embgen/proximity.hpp"

#include <algorithm>
#include <map>

#include "embgen/errors.hpp"
#include "embgen/parallel.hpp"
#include "embgen/union_find.hpp"

namespace embgen {

ProximityGraph build_proximity_graph(int cluster_id, const std::vector<std::size_t>& members, const Vectors& vectors,
                                     double tau) {
  ProximityGraph g;
  g.cluster_id = cluster_id;
  g.nodes = members;
  std::sort(g.nodes.begin(), g.nodes.end());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < g.nodes.size(); ++j) {
      const double s = cosine_similarity(vectors.at(g.nodes[i]), vectors.at(g.nodes[j]));
      if (meets_threshold(s, tau)) g.edges.push_back({g.nodes[i], g.nodes[j], s});
    }
  }
  return g;
}

std::vector<std::vector<std::size_t>> connected_components(const std::vector<std::size_t>& nodes,
                                                           const std::vector<ProximityEdge>& edges) {
  std::vector<std::size_t> sorted = nodes;
  std::sort(sorted.begin(), sorted.end());
  std::map<std::size_t, std::size_t> local;
  for (std::size_t i = 0; i < sorted.size(); ++i) local.emplace(sorted[i], i);
  UnionFind uf(sorted.size());
  for (const auto& e : edges) {
    auto a = local.find(e.a);
    auto b = local.find(e.b);
    if (a == local.end() || b == local.end()) throw Error("edge references a node outside the graph");
    uf.unite(a->second, b->second);
  }
  auto groups = uf.groups();
  for (auto& g : groups) {
    for (auto& i : g) i = sorted[i];
  }
  return groups;
}

namespace {

void chunk_by_id(std::vector<std::size_t> members, std::size_t max_size, double tau, std::vector<FormedGroup>& out) {
  std::sort(members.begin(), members.end());
  for (std::size_t start = 0; start < members.size(); start += max_size) {
    const std::size_t stop = std::min(members.size(), start + max_size);
    out.push_back({{members.begin() + static_cast<std::ptrdiff_t>(start), members.begin() + static_cast<std::ptrdiff_t>(stop)}, tau});
  }
}

void split_into(const std::vector<std::size_t>& component, const Vectors& vectors, double tau_start, double step,
                std::size_t max_size, std::vector<FormedGroup>& out) {
  for (std::size_t i = 1;; ++i) {
    const double tau = tau_start + static_cast<double>(i) * step;
    if (tau > 1.0 + kSimilaritySlack) {
      chunk_by_id(component, max_size, tau, out);
      return;
    }
    const auto parts = connected_components(component, build_proximity_graph(0, component, vectors, tau).edges);
    if (parts.size() == 1) continue;
    if (parts.size() == component.size()) {
      // Everything dropped apart at once: equal similarities give no graph split.
      chunk_by_id(component, max_size, tau - step, out);
      return;
    }
    for (const auto& part : parts) {
      if (part.size() > max_size) split_into(part, vectors, tau, step, max_size, out);
      else out.push_back({part, tau});
    }
    return;
  }
}

}  // namespace

std::vector<FormedGroup> split_oversized(const std::vector<std::size_t>& component, const Vectors& vectors,
                                         double tau_start, double step, std::size_t max_size) {
  if (max_size == 0) throw ConfigError({"max_group_size must be >= 1"});
  if (step <= 0.0) throw ConfigError({"threshold step must be > 0"});
  std::vector<FormedGroup> out;
  if (component.size() <= max_size) {
    std::vector<std::size_t> sorted = component;
    std::sort(sorted.begin(), sorted.end());
    out.push_back({std::move(sorted), tau_start});
    return out;
  }
  split_into(component, vectors, tau_start, step, max_size, out);
  std::sort(out.begin(), out.end(),
            [](const FormedGroup& a, const FormedGroup& b) { return a.members.front() < b.members.front(); });
  return out;
}

ExpansionResult expand_singleton(std::size_t node, const std::vector<std::size_t>& candidates, const Vectors& vectors,
                                 const ProximityOptions& options) {
  ExpansionResult r;
  r.group = {{node}, options.tau};
  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t c : candidates) {
    if (c != node) scored.emplace_back(cosine_similarity(vectors.at(node), vectors.at(c)), c);
  }
  if (scored.empty()) return r;
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (std::size_t i = 1; i <= options.max_expansion_attempts; ++i) {
    const double tau = options.tau - static_cast<double>(i) * options.step;
    if (tau < options.expansion_floor - kSimilaritySlack) break;
    r.attempts = i;
    std::size_t admitted = 0;
    while (admitted < scored.size() && meets_threshold(scored[admitted].first, tau)) ++admitted;
    if (admitted >= std::max<std::size_t>(options.min_added, 1)) {
      const std::size_t take = std::min(admitted, options.max_group_size - 1);
      for (std::size_t k = 0; k < take; ++k) r.group.members.push_back(scored[k].second);
      std::sort(r.group.members.begin(), r.group.members.end());
      r.group.formation_threshold = tau;
      r.expanded = true;
      return r;
    }
  }
  return r;
}

std::vector<ProximityGroup> build_cluster_groups(int cluster_id, const std::vector<std::size_t>& members,
                                                 const Vectors& vectors, const ProximityOptions& options) {
  const auto graph = build_proximity_graph(cluster_id, members, vectors, options.tau);
  std::vector<FormedGroup> formed;
  for (const auto& component : connected_components(graph.nodes, graph.edges)) {
    for (auto& g : split_oversized(component, vectors, options.tau, options.step, options.max_group_size)) {
      formed.push_back(std::move(g));
    }
  }

  std::vector<std::size_t> singletons;
  std::vector<FormedGroup> multi;
  for (auto& g : formed) {
    if (g.members.size() == 1) singletons.push_back(g.members.front());
    else multi.push_back(std::move(g));
  }
  std::sort(singletons.begin(), singletons.end());
  std::vector<bool> claimed(singletons.size(), false);
  for (std::size_t i = 0; i < singletons.size(); ++i) {
    if (claimed[i]) continue;
    claimed[i] = true;
    std::vector<std::size_t> pool;
    for (std::size_t j = 0; j < singletons.size(); ++j) {
      if (!claimed[j]) pool.push_back(singletons[j]);
    }
    auto result = expand_singleton(singletons[i], pool, vectors, options);
    for (std::size_t m : result.group.members) {
      auto it = std::lower_bound(singletons.begin(), singletons.end(), m);
      claimed[static_cast<std::size_t>(it - singletons.begin())] = true;
    }
    multi.push_back(std::move(result.group));
  }

  std::sort(multi.begin(), multi.end(),
            [](const FormedGroup& a, const FormedGroup& b) { return a.members.front() < b.members.front(); });
  std::vector<ProximityGroup> out;
  for (auto& g : multi) out.push_back({0, cluster_id, std::move(g.members), g.formation_threshold});
  return out;
}

std::vector<ProximityGroup> build_proximity_groups(const ClusterAssignment& assignment, const Vectors& vectors,
                                                   const ProximityOptions& options, std::size_t max_concurrency) {
  if (assignment.labels.size() != vectors.size()) throw Error("cluster labels and embeddings differ in length");
  std::map<int, std::vector<std::size_t>> by_cluster;
  for (std::size_t i = 0; i < assignment.labels.size(); ++i) {
    if (assignment.labels[i] >= 0) by_cluster[assignment.labels[i]].push_back(i);
  }
  std::vector<std::pair<int, std::vector<std::size_t>>> clusters(by_cluster.begin(), by_cluster.end());
  auto per_cluster = parallel_indexed(clusters.size(), max_concurrency, [&](std::size_t c) {
    return build_cluster_groups(clusters[c].first, clusters[c].second, vectors, options);
  });
  std::vector<ProximityGroup> out;
  for (auto& groups : per_cluster) {
    for (auto& g : groups) {
      g.group_id = out.size();
      out.push_back(std::move(g));
    }
  }
  return out;
}

json to_json(const ProximityGroup& group) {
  return json{{"group_id", group.group_id},
              {"cluster_id", group.cluster_id},
              {"members", group.members},
              {"formation_threshold", group.formation_threshold}};
}

ProximityGroup proximity_group_from_json(const json& j) {
  return {j.at("group_id").get<std::size_t>(), j.at("cluster_id").get<int>(),
          j.at("members").get<std::vector<std::size_t>>(), j.at("formation_threshold").get<double>()};
}

}  // namespace embgen
