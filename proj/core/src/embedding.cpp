#include "embgen/embedding.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "embgen/errors.hpp"
#include "embgen/jsonio.hpp"

namespace embgen {

std::string embedding_input(const CanonicalEntity& entity, std::size_t max_tokens, const Tokenizer& tokenizer) {
  return truncate_to_tokens(entity.canonical_name + " " + entity.description, max_tokens, tokenizer);
}

std::vector<double> normalize_embedding(const std::vector<float>& raw) {
  double norm2 = 0.0;
  for (float x : raw) norm2 += static_cast<double>(x) * x;
  if (!(norm2 > 0.0) || !std::isfinite(norm2)) throw Error("encoder returned a zero or non-finite vector");
  const double inv = 1.0 / std::sqrt(norm2);
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = static_cast<float>(raw[i] * inv);
  return out;
}

Vectors embed_entities(const std::vector<CanonicalEntity>& entities, EmbeddingClient& encoder,
                       const EmbeddingOptions& options) {
  const std::size_t batch = std::max<std::size_t>(options.batch_size, 1);
  Vectors out;
  out.reserve(entities.size());
  std::vector<std::string> texts;
  for (std::size_t start = 0; start < entities.size(); start += batch) {
    texts.clear();
    for (std::size_t i = start; i < std::min(entities.size(), start + batch); ++i) {
      texts.push_back(embedding_input(entities[i], options.max_tokens));
    }
    auto raw = encoder.embed(texts);
    if (raw.size() != texts.size()) {
      throw Error("encoder returned " + std::to_string(raw.size()) + " vectors for " + std::to_string(texts.size()) +
                  " inputs");
    }
    for (const auto& v : raw) {
      if (!out.empty() && v.size() != out.front().size()) throw Error("encoder returned vectors of mixed dimension");
      out.push_back(normalize_embedding(v));
    }
  }
  return out;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw Error("cosine_similarity: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

void write_embeddings(const std::filesystem::path& bin_path, const std::filesystem::path& index_path,
                      const Vectors& vectors, const std::vector<std::size_t>& ids) {
  if (ids.size() != vectors.size()) throw Error("write_embeddings: ids and vectors differ in length");
  const std::size_t dim = vectors.empty() ? 0 : vectors.front().size();
  std::string bytes;
  bytes.reserve(vectors.size() * dim * 4);
  for (const auto& row : vectors) {
    if (row.size() != dim) throw Error("write_embeddings: ragged matrix");
    for (double x : row) {
      auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(x));
      for (int b = 0; b < 4; ++b) bytes.push_back(static_cast<char>((bits >> (8 * b)) & 0xFFu));
    }
  }
  write_text(bin_path, bytes);
  write_json(index_path, json{{"format", "float32-le-row-major"},
                              {"count", vectors.size()},
                              {"dim", dim},
                              {"ids", ids},
                              {"file", bin_path.filename().string()}});
}

LoadedEmbeddings read_embeddings(const std::filesystem::path& bin_path, const std::filesystem::path& index_path) {
  const json index = read_json(index_path);
  const auto count = index.at("count").get<std::size_t>();
  const auto dim = index.at("dim").get<std::size_t>();
  const std::string bytes = read_text(bin_path);
  if (bytes.size() != count * dim * 4) {
    throw IoError(bin_path.string() + ": expected " + std::to_string(count * dim * 4) + " bytes, found " +
                  std::to_string(bytes.size()));
  }
  LoadedEmbeddings out;
  out.ids = index.at("ids").get<std::vector<std::size_t>>();
  if (out.ids.size() != count) throw IoError(index_path.string() + ": id count does not match");
  out.vectors.assign(count, std::vector<double>(dim));
  std::size_t p = 0;
  for (auto& row : out.vectors) {
    for (double& x : row) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[p++])) << (8 * b);
      x = std::bit_cast<float>(bits);
    }
  }
  return out;
}

}  // namespace embgen
