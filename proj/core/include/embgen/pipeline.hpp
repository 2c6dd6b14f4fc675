#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "embgen/config.hpp"
#include "embgen/llm.hpp"
#include "embgen/prompts.hpp"

namespace embgen {

enum class Stage { Extraction = 1, Semantic = 2, Prompts = 3, Dataset = 4 };

std::string_view stage_name(Stage stage);
Stage stage_from_string(std::string_view s);  // "1".."4" or the stage name

struct RunOptions {
  std::filesystem::path out_root;
  bool resume = false;
  std::optional<Stage> stop_after;
};

struct RunResult {
  std::filesystem::path run_dir;
  std::string config_hash;
  std::vector<Stage> executed;
  std::vector<Stage> skipped;
};

struct PipelineClients {
  ChatClient& teacher;
  EmbeddingClient& encoder;
};

/// Short run-directory name derived from the config hash.
std::string run_id(const std::string& config_hash);

/// Runs stages 1-4 into <out_root>/<run id>. Every stage writes its
/// artifacts and then a stamp file carrying the config hash; with `resume`
/// a stage whose stamp matches is loaded from disk instead of re-run. A
/// failing stage leaves earlier artifacts in place and rethrows.
RunResult run_pipeline(const PipelineConfig& config, const RunOptions& options, PipelineClients clients,
                       const PromptLibrary& prompts);

/// Same, with clients built from the config's endpoints.
RunResult run_pipeline(const PipelineConfig& config, const RunOptions& options);

PromptLibrary load_prompts(const PipelineConfig& config);

}  // namespace embgen
