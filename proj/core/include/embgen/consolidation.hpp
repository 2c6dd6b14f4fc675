#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "embgen/extraction.hpp"
#include "embgen/jsonio.hpp"
#include "embgen/llm.hpp"
#include "embgen/prompts.hpp"

namespace embgen {

/// Lowercases ASCII letters and trims surrounding whitespace.
std::string normalize_name(std::string_view name);

/// Sparse vector as (feature id, weight) pairs sorted by feature id.
using SparseVector = std::vector<std::pair<std::uint32_t, double>>;

/// Character 1-, 2- and 3-gram TF-IDF over the given names (byte n-grams).
/// TF is the raw count, IDF = ln((1 + N) / (1 + df)) + 1, and every vector is
/// L2-normalized. An empty name yields an empty (zero) vector.
std::vector<SparseVector> char_ngram_tfidf(const std::vector<std::string>& names);

double sparse_cosine(const SparseVector& a, const SparseVector& b);

/// Partition of indices [0, names.size()) where i and j share a group iff a
/// chain of pairwise cosine similarities >= threshold connects them. Groups
/// are sorted and ordered by their smallest member.
std::vector<std::vector<std::size_t>> group_entities(const std::vector<std::string>& normalized_names,
                                                     double threshold = 0.85);

/// Surface form with the highest count; ties go to the lexicographically
/// smallest surface.
std::string canonical_name(const std::map<std::string, std::size_t>& surface_counts);

enum class DescriptionSource { Single, Consolidated, ContradictionResolved, LongestFallback };
std::string_view to_string(DescriptionSource source);

struct DescriptionResolution {
  std::string text;
  DescriptionSource source = DescriptionSource::Single;
  std::size_t candidates = 0;  // unique descriptions after dedup, before the cap
  bool llm_called = false;
};

struct ResolveOptions {
  std::size_t max_candidates = 10;
};

/// Deduplicates `descriptions`; one survivor is returned as is. Otherwise the
/// `max_candidates` longest (ties lexicographic) go to the consolidation
/// prompt when `merged_variants` holds more than one surface form, or to the
/// contradiction prompt for a single entity. A failed or empty LLM reply falls
/// back to the longest candidate.
DescriptionResolution resolve_descriptions(const std::string& entity_name,
                                           const std::vector<std::string>& merged_variants,
                                           const std::vector<std::string>& descriptions, ChatClient& client,
                                           const PromptLibrary& prompts, const ResolveOptions& options = {});

struct CanonicalEntity {
  std::size_t id = 0;
  std::string canonical_name;
  std::map<std::string, std::size_t> surface_forms;
  std::string description;
  std::vector<std::size_t> member_ed_ids;  // indices into the pooled ED list
  DescriptionSource description_source = DescriptionSource::Single;
};

struct ConsolidationOptions {
  double similarity_threshold = 0.85;
  std::size_t max_candidates = 10;
};

/// Groups the pool by name similarity and resolves one description per
/// group. Entities are numbered in order of their first pooled occurrence.
std::vector<CanonicalEntity> consolidate_entities(const std::vector<EdPair>& pool, ChatClient& client,
                                                  const PromptLibrary& prompts,
                                                  const ConsolidationOptions& options = {});

json to_json(const CanonicalEntity& entity);
CanonicalEntity canonical_entity_from_json(const json& j);

}  // namespace embgen
