#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "embgen/consolidation.hpp"
#include "embgen/llm.hpp"
#include "embgen/tokenizer.hpp"

namespace embgen {

/// Row-per-ED embedding matrix. Values are float32-representable so that an
/// in-memory run and one resumed from the binary artifact agree exactly.
using Vectors = std::vector<std::vector<double>>;

struct EmbeddingOptions {
  std::string model = "all-mpnet-base-v2";
  std::size_t batch_size = 32;
  std::size_t max_tokens = 512;
};

/// concat(canonical_name, " ", description) cut to `max_tokens` tokens.
std::string embedding_input(const CanonicalEntity& entity, std::size_t max_tokens,
                            const Tokenizer& tokenizer = *default_tokenizer());

/// L2-normalizes and rounds each component to float precision. Throws on a
/// zero vector, which no usable encoder produces.
std::vector<double> normalize_embedding(const std::vector<float>& raw);

/// Embeds entities in batches; row i belongs to entities[i]. Encoder
/// failures propagate (embeddings are required downstream).
Vectors embed_entities(const std::vector<CanonicalEntity>& entities, EmbeddingClient& encoder,
                       const EmbeddingOptions& options = {});

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

/// embeddings.bin holds count*dim little-endian float32 values, row major;
/// the index file records ids, count and dim.
void write_embeddings(const std::filesystem::path& bin_path, const std::filesystem::path& index_path,
                      const Vectors& vectors, const std::vector<std::size_t>& ids);

struct LoadedEmbeddings {
  std::vector<std::size_t> ids;
  Vectors vectors;
};
LoadedEmbeddings read_embeddings(const std::filesystem::path& bin_path, const std::filesystem::path& index_path);

}  // namespace embgen
