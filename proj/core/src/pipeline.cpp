#include "embgen/pipeline.hpp"

#include <algorithm>
#include <numeric>

#include <spdlog/spdlog.h>

#include "embgen/clustering.hpp"
#include "embgen/consolidation.hpp"
#include "embgen/corpus.hpp"
#include "embgen/dataset.hpp"
#include "embgen/embedding.hpp"
#include "embgen/errors.hpp"
#include "embgen/extraction.hpp"
#include "embgen/mock_backends.hpp"
#include "embgen/proximity.hpp"
#include "embgen/rng.hpp"
#include "embgen/specialization.hpp"
#include "embgen/synthesis.hpp"

namespace embgen {

namespace fs = std::filesystem;

namespace {

constexpr Stage kStages[] = {Stage::Extraction, Stage::Semantic, Stage::Prompts, Stage::Dataset};

fs::path stamp_path(const fs::path& run_dir, Stage s) {
  return run_dir / ("stage" + std::to_string(static_cast<int>(s)) + ".done.json");
}

bool stage_done(const fs::path& run_dir, Stage s, const std::string& hash) {
  const auto p = stamp_path(run_dir, s);
  if (!fs::exists(p)) return false;
  try {
    const json stamp = read_json(p);
    if (stamp.value("config_hash", std::string()) != hash) return false;
    for (const auto& a : stamp.at("artifacts")) {
      if (!fs::exists(run_dir / a.get<std::string>())) return false;
    }
    return true;
  } catch (const std::exception& e) {
    spdlog::warn("ignoring unreadable stamp {}: {}", p.string(), e.what());
    return false;
  }
}

void write_stamp(const fs::path& run_dir, Stage s, const std::string& hash, const std::vector<std::string>& artifacts) {
  write_json(stamp_path(run_dir, s),
             json{{"stage", static_cast<int>(s)}, {"name", stage_name(s)}, {"config_hash", hash}, {"artifacts", artifacts}});
}

template <class T>
std::vector<json> to_json_lines(const std::vector<T>& items) {
  std::vector<json> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(to_json(item));
  return out;
}

// Everything the later stages need, either computed or loaded.
struct RunState {
  std::vector<CanonicalEntity> entities;
  Vectors vectors;
  ClusterAssignment assignment;
  std::vector<ProximityGroup> groups;
  SystemPromptSet prompt_set;
};

void run_extraction(const PipelineConfig& config, const fs::path& dir, PipelineClients clients,
                    const PromptLibrary& prompts, RunState& state) {
  if (config.corpus.path.empty()) throw ConfigError({"corpus.path must be set to run generate"});
  const auto docs = load_corpus(resolve_path(config, config.corpus.path), parse_corpus_format(config.corpus.format));
  if (docs.empty()) throw Error("corpus contains no documents");
  std::vector<Chunk> chunks;
  for (const auto& d : docs) {
    auto c = chunk_document(d, config.chunking);
    chunks.insert(chunks.end(), std::make_move_iterator(c.begin()), std::make_move_iterator(c.end()));
  }
  spdlog::info("stage 1: {} documents, {} chunks", docs.size(), chunks.size());

  const auto extractions = extract_corpus(chunks, clients.teacher, prompts);
  std::vector<std::vector<EdPair>> per_chunk;
  std::size_t skipped = 0;
  for (const auto& e : extractions) {
    per_chunk.push_back(e.pairs);
    if (!e.ok) ++skipped;
  }
  if (skipped) spdlog::warn("stage 1: {} of {} chunks skipped after malformed output", skipped, chunks.size());
  const auto pool = pool_ed_pairs(per_chunk);
  if (pool.empty()) throw Error("extraction produced no entity-description pairs");

  state.entities = consolidate_entities(pool, clients.teacher, prompts, config.consolidation);
  spdlog::info("stage 1: {} pooled pairs consolidated into {} entities", pool.size(), state.entities.size());

  write_jsonl(dir / "chunk_extractions.jsonl", to_json_lines(extractions));
  write_jsonl(dir / "ed_pairs.jsonl", to_json_lines(pool));
  write_jsonl(dir / "canonical_entities.jsonl", to_json_lines(state.entities));
}

void load_extraction(const fs::path& dir, RunState& state) {
  state.entities.clear();
  for (const auto& j : read_jsonl(dir / "canonical_entities.jsonl")) state.entities.push_back(canonical_entity_from_json(j));
}

Vectors reduce_for_clustering(const PipelineConfig& config, const Vectors& vectors) {
  if (config.reduction.backend == "none") return vectors;
  if (config.reduction.backend != "pca" && config.reduction.command.empty()) {
    throw ConfigError({"reduction.backend '" + config.reduction.backend +
                       "' runs as an external command; set reduction.command or use backend pca"});
  }
  return make_reducer(config.reduction)->reduce(vectors);
}

void run_semantic(const PipelineConfig& config, const fs::path& dir, PipelineClients clients, RunState& state) {
  state.vectors = embed_entities(state.entities, clients.encoder, config.embedding);
  std::vector<std::size_t> ids;
  for (const auto& e : state.entities) ids.push_back(e.id);
  write_embeddings(dir / "embeddings.bin", dir / "embeddings_index.json", state.vectors, ids);

  const Vectors reduced = reduce_for_clustering(config, state.vectors);
  if (config.clustering.method == "hdbscan") {
    state.assignment = cluster_density_external(reduced, config.clustering.hdbscan);
  } else {
    state.assignment = cluster_kmeans_elbow(reduced, config.clustering.kmeans);
  }
  spdlog::info("stage 2: {} entities in {} clusters ({})", state.entities.size(), state.assignment.k,
               state.assignment.method);
  state.groups = build_proximity_groups(state.assignment, state.vectors, config.proximity, config.concurrency);
  spdlog::info("stage 2: {} proximity groups", state.groups.size());

  write_json(dir / "clusters.json", to_json(state.assignment));
  write_json(dir / "proximity_groups.json", json(to_json_lines(state.groups)));
}

void load_semantic(const fs::path& dir, RunState& state) {
  state.vectors = read_embeddings(dir / "embeddings.bin", dir / "embeddings_index.json").vectors;
  state.assignment = cluster_assignment_from_json(read_json(dir / "clusters.json"));
  state.groups.clear();
  for (const auto& j : read_json(dir / "proximity_groups.json")) state.groups.push_back(proximity_group_from_json(j));
}

void run_prompts(const PipelineConfig& config, const fs::path& dir, PipelineClients clients,
                 const PromptLibrary& prompts, RunState& state) {
  SpecializationOptions options;
  options.max_patterns = config.max_patterns;
  options.max_concurrency = config.concurrency;
  state.prompt_set = build_system_prompts(state.groups, state.entities, prompts.get(prompt_keys::kBase),
                                          clients.teacher, prompts, options);
  spdlog::info("stage 3: {} cluster prompts", state.prompt_set.clusters.size());
  write_json(dir / "system_prompts.json", to_json(state.prompt_set));
}

void load_prompts_artifact(const fs::path& dir, RunState& state) {
  state.prompt_set = system_prompt_set_from_json(read_json(dir / "system_prompts.json"));
}

void run_dataset(const PipelineConfig& config, const std::string& hash, const fs::path& dir, PipelineClients clients,
                 const PromptLibrary& prompts, RunState& state) {
  GenerationOptions gen;
  gen.sampling = config.sampling;
  gen.attempt_factor = config.attempt_factor;
  gen.max_concurrency = config.concurrency;
  const auto generated = run_generation(state.groups, state.entities, clients.teacher, prompts, gen);
  for (const auto& w : generated.report.warnings) spdlog::warn("stage 4: {}", w);
  write_jsonl(dir / "qa_pairs.jsonl", to_json_lines(generated.qas));
  write_json(dir / "generation_report.json", to_json(generated.report));

  const auto assembled = assemble_records(generated.qas, group_clusters(state.groups), state.prompt_set,
                                          AssemblyOptions{config.dataset.base_prompt_only});
  spdlog::info("stage 4: {} QA pairs, {} records, {} rejected", generated.qas.size(), assembled.records.size(),
               assembled.rejected);

  json extra{{"config", to_json(config)},
             {"config_hash", hash},
             {"seed", config.seed()},
             {"rejected", assembled.rejected},
             {"generation", to_json(generated.report)}};

  if (config.dataset.token_budget > 0) {
    // Budget selection runs over a seeded permutation so every strategy is
    // represented in the selected prefix.
    std::vector<std::size_t> order(assembled.records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(config.seed());
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_index(i))]);
    }
    std::vector<DatasetRecord> shuffled;
    shuffled.reserve(order.size());
    for (std::size_t i : order) shuffled.push_back(assembled.records[i]);
    const auto selection = calibrate_token_budget(shuffled, config.dataset.token_budget, config.dataset.token_tolerance,
                                                  *default_tokenizer());
    if (!selection.warning.empty()) spdlog::warn("stage 4: {}", selection.warning);
    shuffled.resize(selection.count);
    write_jsonl(dir / "dataset_budget.jsonl", to_json_lines(shuffled));
    extra["budget"] = {{"target", config.dataset.token_budget},
                       {"tolerance", config.dataset.token_tolerance},
                       {"records", selection.count},
                       {"tokens", selection.tokens},
                       {"within_tolerance", selection.within_tolerance},
                       {"shortfall", selection.shortfall},
                       {"warning", selection.warning},
                       {"file", "dataset_budget.jsonl"}};
  }
  write_dataset(dir, assembled.records, extra);
}

std::vector<std::string> stage_artifacts(Stage s, const PipelineConfig& config) {
  switch (s) {
    case Stage::Extraction: return {"chunk_extractions.jsonl", "ed_pairs.jsonl", "canonical_entities.jsonl"};
    case Stage::Semantic:
      return {"embeddings.bin", "embeddings_index.json", "clusters.json", "proximity_groups.json"};
    case Stage::Prompts: return {"system_prompts.json"};
    case Stage::Dataset: {
      std::vector<std::string> a{"qa_pairs.jsonl", "generation_report.json", "dataset.jsonl", "manifest.json"};
      if (config.dataset.token_budget > 0) a.push_back("dataset_budget.jsonl");
      return a;
    }
  }
  return {};
}

}  // namespace

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::Extraction: return "extraction";
    case Stage::Semantic: return "semantic";
    case Stage::Prompts: return "prompts";
    case Stage::Dataset: return "dataset";
  }
  return "unknown";
}

Stage stage_from_string(std::string_view s) {
  for (Stage st : kStages) {
    if (s == stage_name(st) || s == std::to_string(static_cast<int>(st))) return st;
  }
  throw ConfigError({"unknown stage '" + std::string(s) + "' (expected 1-4 or extraction|semantic|prompts|dataset)"});
}

std::string run_id(const std::string& config_hash) { return config_hash.substr(0, 12); }

PromptLibrary load_prompts(const PipelineConfig& config) {
  if (config.prompts_dir.empty()) return PromptLibrary::builtin();
  return PromptLibrary::with_overrides(resolve_path(config, config.prompts_dir));
}

RunResult run_pipeline(const PipelineConfig& config, const RunOptions& options, PipelineClients clients,
                       const PromptLibrary& prompts) {
  if (auto v = validate_config(config); !v.empty()) throw ConfigError(std::move(v));
  RunResult result;
  result.config_hash = config_hash(config);
  result.run_dir = options.out_root / run_id(result.config_hash);
  fs::create_directories(result.run_dir);
  write_json(result.run_dir / "config.json", to_json(config));

  RunState state;
  bool rerun_rest = !options.resume;
  for (Stage s : kStages) {
    const bool skip = !rerun_rest && stage_done(result.run_dir, s, result.config_hash);
    if (skip) {
      spdlog::info("stage {} ({}): resumed from artifacts", static_cast<int>(s), stage_name(s));
      switch (s) {
        case Stage::Extraction: load_extraction(result.run_dir, state); break;
        case Stage::Semantic: load_semantic(result.run_dir, state); break;
        case Stage::Prompts: load_prompts_artifact(result.run_dir, state); break;
        case Stage::Dataset: break;
      }
      result.skipped.push_back(s);
    } else {
      // Later stamps describe outputs of the old inputs.
      rerun_rest = true;
      for (Stage later : kStages) {
        if (static_cast<int>(later) >= static_cast<int>(s)) fs::remove(stamp_path(result.run_dir, later));
      }
      spdlog::info("stage {} ({}): running", static_cast<int>(s), stage_name(s));
      switch (s) {
        case Stage::Extraction: run_extraction(config, result.run_dir, clients, prompts, state); break;
        case Stage::Semantic: run_semantic(config, result.run_dir, clients, state); break;
        case Stage::Prompts: run_prompts(config, result.run_dir, clients, prompts, state); break;
        case Stage::Dataset: run_dataset(config, result.config_hash, result.run_dir, clients, prompts, state); break;
      }
      write_stamp(result.run_dir, s, result.config_hash, stage_artifacts(s, config));
      result.executed.push_back(s);
    }
    if (options.stop_after && *options.stop_after == s) break;
  }
  return result;
}

RunResult run_pipeline(const PipelineConfig& config, const RunOptions& options) {
  const PromptLibrary prompts = load_prompts(config);
  auto teacher = make_chat_client(config.teacher, ChatRole::Teacher, prompts);
  auto encoder = make_embedding_client(config.encoder);
  return run_pipeline(config, options, PipelineClients{*teacher, *encoder}, prompts);
}

}  // namespace embgen
