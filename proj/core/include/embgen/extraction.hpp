#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "embgen/corpus.hpp"
#include "embgen/jsonio.hpp"
#include "embgen/llm.hpp"
#include "embgen/prompts.hpp"

namespace embgen {

struct SourceRef {
  std::string doc_id;
  std::size_t chunk_index = 0;
  friend bool operator==(const SourceRef&, const SourceRef&) = default;
};

/// One (entity, description) unit extracted from a chunk.
struct EdPair {
  std::string entity;
  std::string description;
  std::vector<SourceRef> source_chunks;
};

struct ChunkExtraction {
  SourceRef chunk;
  bool ok = true;  // false when the chunk was skipped after a schema error
  std::vector<EdPair> pairs;
  std::size_t dropped_entries = 0;
  std::string error;
};

/// Runs the extraction prompt on one chunk. A schema error is retried once
/// with the same prompt; a second failure marks the chunk as skipped rather
/// than throwing. Transport errors propagate.
ChunkExtraction extract_ed_pairs(const Chunk& chunk, ChatClient& client, const PromptLibrary& prompts);

/// Extracts every chunk with bounded concurrency; output is in chunk order.
std::vector<ChunkExtraction> extract_corpus(const std::vector<Chunk>& chunks, ChatClient& client,
                                            const PromptLibrary& prompts);

/// Flattens per-chunk results in order. Duplicates are kept.
std::vector<EdPair> pool_ed_pairs(const std::vector<std::vector<EdPair>>& per_chunk);

json to_json(const SourceRef& ref);
json to_json(const EdPair& pair);
json to_json(const ChunkExtraction& extraction);
EdPair ed_pair_from_json(const json& j);
ChunkExtraction chunk_extraction_from_json(const json& j);

}  // namespace embgen
