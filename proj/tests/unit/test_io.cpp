#include <gtest/gtest.h>

#include <fstream>

#include "embgen/corpus.hpp"
#include "embgen/embedding.hpp"
#include "embgen/errors.hpp"
#include "embgen/extraction.hpp"
#include "embgen/jsonio.hpp"
#include "embgen/llm.hpp"
#include "embgen/payload.hpp"
#include "embgen/prompts.hpp"
#include "support/fixtures.hpp"

using namespace embgen;
namespace fs = std::filesystem;

TEST(Payload, StripsFencesAndProse) {
  const auto p = parse_json_payload("Sure!\n```json\n{\"pattern_nature\": \"x\"}\n```\nDone.", PayloadKind::Pattern);
  EXPECT_EQ(p.value["pattern_nature"], "x");
}

TEST(Payload, DropsInvalidEntriesIndividually) {
  const auto p = parse_json_payload(R"([{"question": "q", "answer": "a"}, {"question": "q2"}])", PayloadKind::QaArray);
  EXPECT_EQ(p.value.size(), 1u);
  EXPECT_EQ(p.dropped, 1u);
  try {
    parse_json_payload(R"([{"question": "q2"}])", PayloadKind::QaArray);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("answer"), std::string::npos);
  }
}

TEST(Payload, RejectsNonJson) {
  EXPECT_THROW(parse_json_payload("no json here", PayloadKind::Entities), SchemaError);
  EXPECT_THROW(parse_json_payload(R"({"other": 1})", PayloadKind::Pattern), SchemaError);
}

TEST(Prompts, RenderLeavesUnknownBracesAlone) {
  EXPECT_EQ(render_template("{a} and {\"k\": 1} and {b}", {{"a", "{b}"}, {"b", "B"}}), "{b} and {\"k\": 1} and B");
}

TEST(Prompts, BuiltinsCoverEveryKeyAndOverridesApply) {
  const auto lib = PromptLibrary::builtin();
  for (auto key : {prompt_keys::kBase, prompt_keys::kExtractionSystem, prompt_keys::kJudgeSystem,
                   prompt_keys::kJudgeUser, prompt_keys::kMultiUser, prompt_keys::kDiversitySynthesis}) {
    EXPECT_FALSE(lib.get(key).empty()) << key;
  }
  EXPECT_THROW(lib.get("nope"), Error);
  const auto dir = fixture::temp_dir("prompts");
  std::ofstream(dir / "base_prompt.txt") << "custom base";
  EXPECT_EQ(PromptLibrary::with_overrides(dir).get(prompt_keys::kBase), "custom base");
}

TEST(Llm, ClassifiesStatuses) {
  EXPECT_EQ(classify_status(200), StatusClass::Success);
  EXPECT_EQ(classify_status(429), StatusClass::Retryable);
  EXPECT_EQ(classify_status(503), StatusClass::Retryable);
  EXPECT_EQ(classify_status(0), StatusClass::Retryable);
  EXPECT_EQ(classify_status(401), StatusClass::Auth);
  EXPECT_EQ(classify_status(403), StatusClass::Auth);
  EXPECT_EQ(classify_status(400), StatusClass::Fatal);
}

TEST(Llm, RetriesThenSucceedsOrGivesUp) {
  int calls = 0;
  const auto ok = send_with_retries(
      [&] { return ++calls < 3 ? HttpReply{503, "", ""} : HttpReply{200, "body", ""}; }, 3, 0.0, "test");
  EXPECT_EQ(ok.body, "body");
  EXPECT_EQ(calls, 3);

  calls = 0;
  try {
    send_with_retries([&] { ++calls; return HttpReply{429, "", ""}; }, 2, 0.0, "test");
    FAIL() << "expected TransportError";
  } catch (const TransportError& e) {
    EXPECT_EQ(e.status(), 429);
    EXPECT_EQ(calls, 3);
  }

  calls = 0;
  EXPECT_THROW(send_with_retries([&] { ++calls; return HttpReply{401, "", ""}; }, 3, 0.0, "test"), AuthError);
  EXPECT_EQ(calls, 1);
  EXPECT_THROW(send_with_retries([] { return HttpReply{400, "", ""}; }, 3, 0.0, "test"), TransportError);
}

TEST(Llm, RequestBodyCarriesModelTemperatureAndMessages) {
  LlmEndpoint e;
  e.model = "m";
  e.temperature = 0.001;
  const auto body = json::parse(HttpChatClient::request_body(e, {"sys", "usr"}));
  EXPECT_EQ(body["model"], "m");
  EXPECT_EQ(body["temperature"], 0.001);
  EXPECT_EQ(body["messages"][0]["role"], "system");
  EXPECT_EQ(body["messages"][1]["content"], "usr");
  const auto r = HttpChatClient::parse_response(
      R"({"choices": [{"message": {"content": "hi"}}], "usage": {"prompt_tokens": 3, "completion_tokens": 1, "total_tokens": 4}})");
  EXPECT_EQ(r.content, "hi");
  ASSERT_TRUE(r.usage.has_value());
  EXPECT_EQ(r.usage->total_tokens, 4);
}

TEST(Llm, MockPrefersCannedThenResponderThenDefault) {
  MockChatClient m([](const ChatRequest& r) { return r.user == "dyn" ? std::string("dynamic") : std::string(); });
  m.set_reply({"s", "u"}, "canned");
  m.set_default_reply("fallback");
  EXPECT_EQ(m.complete({"s", "u"}).content, "canned");
  EXPECT_EQ(m.complete({"s", "dyn"}).content, "dynamic");
  EXPECT_EQ(m.call_count(), 2u);
  EXPECT_EQ(m.transcript()[0].reply, "canned");
}

TEST(Llm, ApiKeyComesFromEnvironment) {
  LlmEndpoint e;
  e.api_key_env = "EMBGEN_TEST_KEY_VAR";
  ::setenv("EMBGEN_TEST_KEY_VAR", "secret-value", 1);
  EXPECT_EQ(e.resolved_api_key(), "secret-value");
  ::unsetenv("EMBGEN_TEST_KEY_VAR");
}

TEST(Corpus, LoadsTextAndJsonlInPathOrder) {
  const auto dir = fixture::temp_dir("corpus");
  fs::create_directories(dir / "sub");
  std::ofstream(dir / "b.txt") << "Bee text.";
  std::ofstream(dir / "sub" / "a.txt") << "Sub text.";
  const auto docs = load_corpus(dir, CorpusFormat::PlainText);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].id, "b");
  EXPECT_EQ(docs[1].id, "sub/a");

  std::ofstream(dir / "docs.jsonl") << R"({"id": "x", "text": "one"})" << "\n" << R"({"id": "y", "text": "two"})" << "\n";
  const auto j = load_corpus(dir / "docs.jsonl", CorpusFormat::Jsonl);
  ASSERT_EQ(j.size(), 2u);
  EXPECT_EQ(j[1].text, "two");
}

TEST(Corpus, ChunksOverlapAndReassemble) {
  Document d{"d", "w0 w1  w2 w3 w4\nw5 w6 w7 w8 w9", "src"};
  const auto zero = chunk_document(d, {4, 0});
  std::string joined;
  for (const auto& c : zero) joined += c.text;
  EXPECT_EQ(joined, d.text);
  const auto over = chunk_document(d, {4, 2});
  ASSERT_GE(over.size(), 2u);
  EXPECT_EQ(over[1].token_offset, 2u);
  for (std::size_t i = 0; i < over.size(); ++i) {
    EXPECT_EQ(over[i].index, i);
    EXPECT_LE(over[i].token_count, 4u);
  }
}

TEST(Extraction, RetriesOnceThenSkipsChunk) {
  Chunk chunk{"doc", 0, "text", 1, 0};
  const auto prompts = PromptLibrary::builtin();
  MockChatClient bad([](const ChatRequest&) { return std::string("not json"); });
  const auto skipped = extract_ed_pairs(chunk, bad, prompts);
  EXPECT_FALSE(skipped.ok);
  EXPECT_EQ(bad.call_count(), 2u);

  MockChatClient good([](const ChatRequest&) {
    return std::string(R"({"entities": [{"entity": "Ada", "entity_explanation": "A person."}, {"entity": "X"}]})");
  });
  const auto r = extract_ed_pairs(chunk, good, prompts);
  ASSERT_TRUE(r.ok);
  ASSERT_EQ(r.pairs.size(), 1u);
  EXPECT_EQ(r.pairs[0].entity, "Ada");
  EXPECT_EQ(r.pairs[0].source_chunks[0], (SourceRef{"doc", 0}));
  EXPECT_EQ(r.dropped_entries, 1u);
  EXPECT_EQ(to_json(chunk_extraction_from_json(to_json(r))), to_json(r));
}

TEST(Embedding, NormalizesAndRoundTripsThroughBinary) {
  const auto v = normalize_embedding({3.0f, 4.0f});
  EXPECT_DOUBLE_EQ(v[0], static_cast<double>(0.6f));
  EXPECT_THROW(normalize_embedding({0.0f, 0.0f}), Error);

  MockEmbeddingClient enc(16);
  const auto entities = fixture::entities(5);
  const auto vecs = embed_entities(entities, enc, {"m", 2, 512});
  ASSERT_EQ(vecs.size(), 5u);
  EXPECT_EQ(enc.calls(), 3u);
  EXPECT_NEAR(cosine_similarity(vecs[0], vecs[0]), 1.0, 1e-6);

  const auto dir = fixture::temp_dir("embeddings");
  write_embeddings(dir / "e.bin", dir / "e.json", vecs, {0, 1, 2, 3, 4});
  const auto back = read_embeddings(dir / "e.bin", dir / "e.json");
  EXPECT_EQ(back.vectors, vecs);
  EXPECT_EQ(back.ids, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
}

TEST(Embedding, InputIsNameAndDescriptionTruncated) {
  CanonicalEntity e;
  e.canonical_name = "Ada";
  e.description = "one two three four";
  EXPECT_EQ(embedding_input(e, 512), "Ada one two three four");
  EXPECT_EQ(embedding_input(e, 3), "Ada one two");
}

TEST(JsonIo, NamesTheBadLine) {
  const auto dir = fixture::temp_dir("jsonio");
  std::ofstream(dir / "x.jsonl") << "{\"a\": 1}\n{broken\n";
  try {
    read_jsonl(dir / "x.jsonl");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
