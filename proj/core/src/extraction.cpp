#include "embgen/extraction.hpp"

#include <spdlog/spdlog.h>

#include "embgen/errors.hpp"
#include "embgen/parallel.hpp"
#include "embgen/payload.hpp"

namespace embgen {

ChunkExtraction extract_ed_pairs(const Chunk& chunk, ChatClient& client, const PromptLibrary& prompts) {
  ChunkExtraction out;
  out.chunk = {chunk.doc_id, chunk.index};
  const ChatRequest request{prompts.get(prompt_keys::kExtractionSystem),
                            prompts.render(prompt_keys::kExtractionUser, {{"document_content", chunk.text}})};
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      const ParsedPayload parsed = parse_json_payload(client.complete(request).content, PayloadKind::Entities);
      for (const auto& item : parsed.value) {
        out.pairs.push_back({item["entity"].get<std::string>(), item["entity_explanation"].get<std::string>(),
                             {out.chunk}});
      }
      out.dropped_entries = parsed.dropped;
      return out;
    } catch (const SchemaError& e) {
      out.error = e.what();
    }
  }
  out.ok = false;
  spdlog::warn("extraction: skipping chunk {}#{}: {}", chunk.doc_id, chunk.index, out.error);
  return out;
}

std::vector<ChunkExtraction> extract_corpus(const std::vector<Chunk>& chunks, ChatClient& client,
                                            const PromptLibrary& prompts) {
  return parallel_indexed(chunks.size(), client.max_concurrency(),
                          [&](std::size_t i) { return extract_ed_pairs(chunks[i], client, prompts); });
}

std::vector<EdPair> pool_ed_pairs(const std::vector<std::vector<EdPair>>& per_chunk) {
  std::vector<EdPair> pool;
  for (const auto& pairs : per_chunk) pool.insert(pool.end(), pairs.begin(), pairs.end());
  return pool;
}

json to_json(const SourceRef& ref) { return json{{"doc_id", ref.doc_id}, {"chunk_index", ref.chunk_index}}; }

json to_json(const EdPair& pair) {
  json sources = json::array();
  for (const auto& s : pair.source_chunks) sources.push_back(to_json(s));
  return json{{"entity", pair.entity}, {"description", pair.description}, {"source_chunks", std::move(sources)}};
}

json to_json(const ChunkExtraction& extraction) {
  json pairs = json::array();
  for (const auto& p : extraction.pairs) pairs.push_back(to_json(p));
  return json{{"chunk", to_json(extraction.chunk)},
              {"ok", extraction.ok},
              {"dropped_entries", extraction.dropped_entries},
              {"error", extraction.error},
              {"pairs", std::move(pairs)}};
}

namespace {
SourceRef source_from_json(const json& j) {
  return {j.at("doc_id").get<std::string>(), j.at("chunk_index").get<std::size_t>()};
}
}  // namespace

EdPair ed_pair_from_json(const json& j) {
  EdPair p{j.at("entity").get<std::string>(), j.at("description").get<std::string>(), {}};
  for (const auto& s : j.at("source_chunks")) p.source_chunks.push_back(source_from_json(s));
  return p;
}

ChunkExtraction chunk_extraction_from_json(const json& j) {
  ChunkExtraction e;
  e.chunk = source_from_json(j.at("chunk"));
  e.ok = j.at("ok").get<bool>();
  e.dropped_entries = j.at("dropped_entries").get<std::size_t>();
  e.error = j.at("error").get<std::string>();
  for (const auto& p : j.at("pairs")) e.pairs.push_back(ed_pair_from_json(p));
  return e;
}

}  // namespace embgen
