#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "embgen/clustering.hpp"
#include "embgen/consolidation.hpp"
#include "embgen/corpus.hpp"
#include "embgen/diagnostics.hpp"
#include "embgen/embedding.hpp"
#include "embgen/jsonio.hpp"
#include "embgen/llm.hpp"
#include "embgen/proximity.hpp"
#include "embgen/synthesis.hpp"

namespace embgen {

struct CorpusConfig {
  std::string path;
  std::string format = "text";  // text | jsonl
};

struct ClusteringConfig {
  std::string method = "kmeans";  // kmeans | hdbscan
  std::string init = "k-means++";
  KMeansElbowOptions kmeans;
  DensityConfig hdbscan;
};

struct DatasetConfig {
  bool base_prompt_only = false;
  std::size_t token_budget = 0;  // 0 = keep every record
  std::size_t token_tolerance = 20000;
};

struct JudgeConfig {
  LlmEndpoint endpoint;
  std::size_t runs = 10;
};

struct PipelineConfig {
  CorpusConfig corpus;
  ChunkingOptions chunking;
  ConsolidationOptions consolidation;
  LlmEndpoint teacher;
  LlmEndpoint encoder;
  EmbeddingOptions embedding;
  ReducerConfig reduction;
  ClusteringConfig clustering;
  ProximityOptions proximity;
  std::size_t max_patterns = 5;
  SamplingConfig sampling;
  std::size_t attempt_factor = 3;
  std::size_t concurrency = 8;
  JudgeConfig judge;
  DatasetConfig dataset;
  StdKind heterogeneity_std = StdKind::Population;
  std::string prompts_dir;  // empty = built-in templates

  /// Directory the config file was read from; relative paths resolve
  /// against it. Not part of the normalized config.
  std::filesystem::path base_dir;

  std::uint64_t seed() const { return sampling.seed; }
};

/// Defaults for every key. Teacher and judge differ only in model and
/// temperature; the encoder points at an embeddings endpoint.
PipelineConfig default_config();

/// Fills defaults for omitted keys and returns the config, or throws
/// ConfigError listing every violation (unknown keys, wrong types, range
/// and ratio constraints).
PipelineConfig config_from_json(const json& j);
PipelineConfig load_config(const std::filesystem::path& path);  // empty file = all defaults

/// Range and cross-field checks on an already-typed config.
std::vector<std::string> validate_config(const PipelineConfig& config);

/// Normalized form: every key present, fixed key order.
json to_json(const PipelineConfig& config);

/// SHA-256 over the normalized config dump.
std::string config_hash(const PipelineConfig& config);

std::filesystem::path resolve_path(const PipelineConfig& config, const std::string& path);

}  // namespace embgen
