#include "embgen/consolidation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <unordered_map>

#include <spdlog/spdlog.h>

#include "embgen/errors.hpp"
#include "embgen/parallel.hpp"
#include "embgen/union_find.hpp"

namespace embgen {

namespace {

// Floating-point slack for threshold comparisons so that names whose exact
// similarity equals the threshold are not lost to rounding.
constexpr double kThresholdSlack = 1e-9;

std::string trim_copy(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n\f\v");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n\f\v");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::string normalize_name(std::string_view name) {
  std::string out = trim_copy(name);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<SparseVector> char_ngram_tfidf(const std::vector<std::string>& names) {
  std::unordered_map<std::string, std::uint32_t> vocab;
  std::vector<std::map<std::uint32_t, double>> counts(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string& s = names[i];
    for (std::size_t n = 1; n <= 3; ++n) {
      for (std::size_t p = 0; p + n <= s.size(); ++p) {
        auto [it, inserted] = vocab.try_emplace(s.substr(p, n), static_cast<std::uint32_t>(vocab.size()));
        counts[i][it->second] += 1.0;
      }
    }
  }
  std::vector<double> df(vocab.size(), 0.0);
  for (const auto& c : counts) {
    for (const auto& [id, _] : c) df[id] += 1.0;
  }
  const double n_docs = static_cast<double>(names.size());
  std::vector<SparseVector> out(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) {
    double norm2 = 0.0;
    for (const auto& [id, tf] : counts[i]) {
      const double w = tf * (std::log((1.0 + n_docs) / (1.0 + df[id])) + 1.0);
      out[i].emplace_back(id, w);
      norm2 += w * w;
    }
    if (norm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (auto& [_, w] : out[i]) w *= inv;
    }
  }
  return out;
}

double sparse_cosine(const SparseVector& a, const SparseVector& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [_, w] : a) na += w * w;
  for (const auto& [_, w] : b) nb += w * w;
  if (na == 0.0 || nb == 0.0) return 0.0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) ++ia;
    else if (ib->first < ia->first) ++ib;
    else {
      dot += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return dot / std::sqrt(na * nb);
}

std::vector<std::vector<std::size_t>> group_entities(const std::vector<std::string>& normalized_names,
                                                     double threshold) {
  const auto vectors = char_ngram_tfidf(normalized_names);
  UnionFind uf(normalized_names.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      if (sparse_cosine(vectors[i], vectors[j]) >= threshold - kThresholdSlack) uf.unite(i, j);
    }
  }
  return uf.groups();
}

std::string canonical_name(const std::map<std::string, std::size_t>& surface_counts) {
  if (surface_counts.empty()) throw Error("canonical_name: empty group");
  // std::map iterates in lexicographic order, so the first strict maximum wins ties.
  auto best = surface_counts.begin();
  for (auto it = surface_counts.begin(); it != surface_counts.end(); ++it) {
    if (it->second > best->second) best = it;
  }
  return best->first;
}

std::string_view to_string(DescriptionSource source) {
  switch (source) {
    case DescriptionSource::Single: return "single";
    case DescriptionSource::Consolidated: return "consolidated";
    case DescriptionSource::ContradictionResolved: return "contradiction-resolved";
    case DescriptionSource::LongestFallback: return "longest-fallback";
  }
  return "unknown";
}

namespace {

DescriptionSource description_source_from_string(const std::string& s) {
  for (auto v : {DescriptionSource::Single, DescriptionSource::Consolidated,
                 DescriptionSource::ContradictionResolved, DescriptionSource::LongestFallback}) {
    if (to_string(v) == s) return v;
  }
  throw SchemaError("unknown description source: " + s);
}

std::string numbered_sources(const std::vector<std::string>& candidates) {
  std::string text;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (i) text += "\n\n";
    text += "Source " + std::to_string(i + 1) + ": " + candidates[i];
  }
  return text;
}

}  // namespace

DescriptionResolution resolve_descriptions(const std::string& entity_name,
                                           const std::vector<std::string>& merged_variants,
                                           const std::vector<std::string>& descriptions, ChatClient& client,
                                           const PromptLibrary& prompts, const ResolveOptions& options) {
  std::vector<std::string> unique;
  std::set<std::string> seen;
  for (const auto& d : descriptions) {
    std::string t = trim_copy(d);
    if (!t.empty() && seen.insert(t).second) unique.push_back(std::move(t));
  }
  if (unique.empty()) throw Error("resolve_descriptions: no description for " + entity_name);

  DescriptionResolution out;
  out.candidates = unique.size();
  if (unique.size() == 1) {
    out.text = unique.front();
    return out;
  }

  std::stable_sort(unique.begin(), unique.end(), [](const std::string& a, const std::string& b) {
    return a.size() != b.size() ? a.size() > b.size() : a < b;
  });
  if (unique.size() > options.max_candidates) unique.resize(options.max_candidates);

  ChatRequest request;
  const bool merged = merged_variants.size() > 1;
  if (merged) {
    std::set<std::string> variants(merged_variants.begin(), merged_variants.end());
    std::string joined;
    for (const auto& v : variants) joined += (joined.empty() ? "" : ", ") + v;
    request = {prompts.get(prompt_keys::kConsolidationSystem),
               prompts.render(prompt_keys::kConsolidationUser,
                              {{"entity_variations", joined}, {"explanations_text", numbered_sources(unique)}})};
  } else {
    request = {prompts.get(prompt_keys::kContradictionSystem),
               prompts.render(prompt_keys::kContradictionUser,
                              {{"entity_name", entity_name}, {"explanations_text", numbered_sources(unique)}})};
  }

  out.llm_called = true;
  try {
    std::string reply = trim_copy(client.complete(request).content);
    if (!reply.empty()) {
      out.text = std::move(reply);
      out.source = merged ? DescriptionSource::Consolidated : DescriptionSource::ContradictionResolved;
      return out;
    }
    spdlog::warn("consolidation: empty reply for '{}', using longest description", entity_name);
  } catch (const AuthError&) {
    throw;
  } catch (const TransportError& e) {
    spdlog::warn("consolidation: LLM failure for '{}' ({}), using longest description", entity_name, e.what());
  }
  out.text = unique.front();
  out.source = DescriptionSource::LongestFallback;
  return out;
}

std::vector<CanonicalEntity> consolidate_entities(const std::vector<EdPair>& pool, ChatClient& client,
                                                  const PromptLibrary& prompts,
                                                  const ConsolidationOptions& options) {
  // Similarity is computed once per distinct normalized name.
  std::vector<std::string> names;
  std::unordered_map<std::string, std::size_t> name_index;
  std::vector<std::vector<std::size_t>> members_of_name;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    std::string n = normalize_name(pool[i].entity);
    auto [it, inserted] = name_index.try_emplace(n, names.size());
    if (inserted) {
      names.push_back(std::move(n));
      members_of_name.emplace_back();
    }
    members_of_name[it->second].push_back(i);
  }

  struct Draft {
    std::vector<std::size_t> members;
    std::size_t distinct_names = 0;
  };
  std::vector<Draft> drafts;
  for (const auto& group : group_entities(names, options.similarity_threshold)) {
    Draft d;
    d.distinct_names = group.size();
    for (std::size_t name : group) d.members.insert(d.members.end(), members_of_name[name].begin(), members_of_name[name].end());
    std::sort(d.members.begin(), d.members.end());
    drafts.push_back(std::move(d));
  }
  std::sort(drafts.begin(), drafts.end(),
            [](const Draft& a, const Draft& b) { return a.members.front() < b.members.front(); });

  const ResolveOptions resolve{options.max_candidates};
  return parallel_indexed(drafts.size(), client.max_concurrency(), [&](std::size_t g) {
    const Draft& d = drafts[g];
    CanonicalEntity e;
    e.id = g;
    e.member_ed_ids = d.members;
    std::vector<std::string> descriptions;
    for (std::size_t m : d.members) {
      ++e.surface_forms[trim_copy(pool[m].entity)];
      descriptions.push_back(pool[m].description);
    }
    e.canonical_name = canonical_name(e.surface_forms);
    std::vector<std::string> variants;
    if (d.distinct_names > 1) {
      for (const auto& [surface, _] : e.surface_forms) variants.push_back(surface);
    }
    auto resolution = resolve_descriptions(e.canonical_name, variants, descriptions, client, prompts, resolve);
    e.description = std::move(resolution.text);
    e.description_source = resolution.source;
    return e;
  });
}

json to_json(const CanonicalEntity& entity) {
  return json{{"id", entity.id},
              {"canonical_name", entity.canonical_name},
              {"surface_forms", entity.surface_forms},
              {"description", entity.description},
              {"member_ed_ids", entity.member_ed_ids},
              {"description_source", to_string(entity.description_source)}};
}

CanonicalEntity canonical_entity_from_json(const json& j) {
  CanonicalEntity e;
  e.id = j.at("id").get<std::size_t>();
  e.canonical_name = j.at("canonical_name").get<std::string>();
  e.surface_forms = j.at("surface_forms").get<std::map<std::string, std::size_t>>();
  e.description = j.at("description").get<std::string>();
  e.member_ed_ids = j.at("member_ed_ids").get<std::vector<std::size_t>>();
  e.description_source = description_source_from_string(j.at("description_source").get<std::string>());
  return e;
}

}  // namespace embgen
