#include "embgen/corpus.hpp"

#include <algorithm>
#include <set>

#include "embgen/errors.hpp"
#include "embgen/jsonio.hpp"

namespace embgen {
namespace fs = std::filesystem;

CorpusFormat parse_corpus_format(const std::string& name) {
  if (name == "text" || name == "plain-text" || name == "txt") return CorpusFormat::PlainText;
  if (name == "jsonl") return CorpusFormat::Jsonl;
  throw ConfigError({"corpus.format must be one of text|jsonl, got '" + name + "'"});
}

namespace {

std::vector<fs::path> list_files(const fs::path& root, CorpusFormat format) {
  std::vector<fs::path> files;
  if (fs::is_regular_file(root)) {
    files.push_back(root);
    return files;
  }
  const std::string wanted = format == CorpusFormat::Jsonl ? ".jsonl" : ".txt";
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().extension() == wanted) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

void load_jsonl_file(const fs::path& file, std::vector<Document>& out) {
  const auto records = read_jsonl(file);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const std::string where = file.string() + " record " + std::to_string(i + 1);
    if (!r.is_object() || !r.contains("text") || !r["text"].is_string()) {
      throw IoError(where + ": expected an object with a string \"text\" field");
    }
    Document doc;
    doc.text = r["text"].get<std::string>();
    if (r.contains("id")) {
      doc.id = r["id"].is_string() ? r["id"].get<std::string>() : r["id"].dump();
    } else {
      doc.id = file.stem().string() + ":" + std::to_string(i);
    }
    doc.source = where;
    out.push_back(std::move(doc));
  }
}

}  // namespace

std::vector<Document> load_corpus(const fs::path& path, CorpusFormat format) {
  std::error_code ec;
  if (!fs::exists(path, ec)) throw IoError("corpus path does not exist: " + path.string());

  std::vector<Document> docs;
  const fs::path root = fs::is_directory(path) ? path : path.parent_path();
  for (const auto& file : list_files(path, format)) {
    if (format == CorpusFormat::Jsonl) {
      load_jsonl_file(file, docs);
      continue;
    }
    Document doc;
    doc.text = read_text(file);
    fs::path rel = file.lexically_relative(root);
    rel.replace_extension();
    doc.id = rel.generic_string();
    doc.source = file.string();
    docs.push_back(std::move(doc));
  }

  std::set<std::string> seen;
  for (const auto& d : docs) {
    if (!seen.insert(d.id).second) throw IoError("duplicate document id: " + d.id);
  }
  std::erase_if(docs, [](const Document& d) {
    return d.text.find_first_not_of(" \t\r\n") == std::string::npos;
  });
  return docs;
}

std::vector<Chunk> chunk_document(const Document& doc, const ChunkingOptions& options,
                                  const Tokenizer& tokenizer) {
  if (options.max_tokens == 0) throw ConfigError({"chunking.max_tokens must be >= 1"});
  if (options.overlap >= options.max_tokens) {
    throw ConfigError({"chunking.overlap must be < chunking.max_tokens"});
  }
  const auto spans = tokenizer.spans(doc.text);
  const std::size_t n = spans.size();
  const std::size_t step = options.max_tokens - options.overlap;

  std::vector<Chunk> chunks;
  for (std::size_t start = 0; start < n; start += step) {
    const std::size_t stop = std::min(n, start + options.max_tokens);
    const std::size_t begin_byte = start == 0 ? 0 : spans[start].begin;
    const std::size_t end_byte = stop < n ? spans[stop].begin : doc.text.size();
    Chunk c;
    c.doc_id = doc.id;
    c.index = chunks.size();
    c.text = doc.text.substr(begin_byte, end_byte - begin_byte);
    c.token_count = stop - start;
    c.token_offset = start;
    chunks.push_back(std::move(c));
  }
  return chunks;
}

}  // namespace embgen
