#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "embgen/tokenizer.hpp"

namespace embgen {

struct Document {
  std::string id;
  std::string text;
  std::string source;
};

/// A window of a document fed to entity extraction. Chunks of one document
/// are numbered 0..n-1 with no gaps.
struct Chunk {
  std::string doc_id;
  std::size_t index = 0;
  std::string text;
  std::size_t token_count = 0;
  /// Token offset of the first token of this chunk inside its document.
  std::size_t token_offset = 0;
};

enum class CorpusFormat { PlainText, Jsonl };

CorpusFormat parse_corpus_format(const std::string& name);

/// Loads one Document per plain-text file, or one per JSONL record
/// ({"id", "text"}). A directory is walked recursively; files are visited in
/// lexicographic path order and JSONL records in file order. Plain-text
/// documents take their id from the path relative to the root, minus the
/// extension.
std::vector<Document> load_corpus(const std::filesystem::path& path, CorpusFormat format);

struct ChunkingOptions {
  std::size_t max_tokens = 512;
  std::size_t overlap = 64;
};

/// Sliding-window chunking over tokenizer spans: windows start every
/// (max_tokens - overlap) tokens until the start passes the last token.
/// Each chunk's text runs from its first token (offset 0 for the first
/// chunk) up to the start of the token following its window, so for
/// overlap == 0 the chunk texts concatenate back to the document verbatim.
std::vector<Chunk> chunk_document(const Document& doc, const ChunkingOptions& options,
                                  const Tokenizer& tokenizer = *default_tokenizer());

}  // namespace embgen
