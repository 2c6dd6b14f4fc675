#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "embgen/clustering.hpp"
#include "embgen/embedding.hpp"
#include "embgen/jsonio.hpp"

namespace embgen {

/// Similarities are compared against thresholds with this slack so that a
/// pair whose cosine equals the threshold in exact arithmetic is never lost
/// to rounding in the dot product or in tau - i * step.
inline constexpr double kSimilaritySlack = 1e-9;

inline bool meets_threshold(double similarity, double tau) { return similarity >= tau - kSimilaritySlack; }

struct ProximityEdge {
  std::size_t a = 0;  // ed ids, a < b
  std::size_t b = 0;
  double similarity = 0.0;
};

struct ProximityGraph {
  int cluster_id = 0;
  std::vector<std::size_t> nodes;
  std::vector<ProximityEdge> edges;
};

/// All-pairs threshold graph over `members` using the full embeddings
/// (`vectors[ed_id]`), never reduced ones.
ProximityGraph build_proximity_graph(int cluster_id, const std::vector<std::size_t>& members, const Vectors& vectors,
                                     double tau = 0.75);

/// Connected components; each sorted, ordered by smallest member.
std::vector<std::vector<std::size_t>> connected_components(const std::vector<std::size_t>& nodes,
                                                           const std::vector<ProximityEdge>& edges);

struct ProximityOptions {
  double tau = 0.75;
  double step = 0.01;
  std::size_t max_group_size = 10;
  double expansion_floor = 0.5;
  std::size_t max_expansion_attempts = 10;
  std::size_t min_added = 1;
};

struct FormedGroup {
  std::vector<std::size_t> members;
  double formation_threshold = 0.0;
};

/// Raises the threshold by `step` until the component falls apart, recursing
/// into parts that are still too large. A component that can only fall
/// apart into singletons (or survives past tau = 1) is unsplittable by
/// thresholds and is chunked by ed id into parts of max_group_size.
std::vector<FormedGroup> split_oversized(const std::vector<std::size_t>& component, const Vectors& vectors,
                                         double tau_start, double step = 0.01, std::size_t max_size = 10);

struct ExpansionResult {
  FormedGroup group;
  std::size_t attempts = 0;
  bool expanded = false;
};

/// Lowers the threshold from options.tau by options.step per attempt and
/// stops at the first threshold admitting at least min_added candidates,
/// taking them nearest first up to the size cap. Never goes below the floor.
ExpansionResult expand_singleton(std::size_t node, const std::vector<std::size_t>& candidates, const Vectors& vectors,
                                 const ProximityOptions& options = {});

struct ProximityGroup {
  std::size_t group_id = 0;
  int cluster_id = 0;
  std::vector<std::size_t> members;
  double formation_threshold = 0.0;
};

/// Components of one cluster's graph after splitting oversized ones and
/// then expanding singletons in ascending ed id order. Expansion only claims
/// other singletons, so groups stay disjoint. group_id is left at 0.
std::vector<ProximityGroup> build_cluster_groups(int cluster_id, const std::vector<std::size_t>& members,
                                                 const Vectors& vectors, const ProximityOptions& options = {});

/// Groups for every non-noise cluster, numbered by (cluster, smallest member).
std::vector<ProximityGroup> build_proximity_groups(const ClusterAssignment& assignment, const Vectors& vectors,
                                                   const ProximityOptions& options = {},
                                                   std::size_t max_concurrency = 1);

json to_json(const ProximityGroup& group);
ProximityGroup proximity_group_from_json(const json& j);

}  // namespace embgen
