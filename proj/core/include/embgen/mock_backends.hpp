#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "embgen/llm.hpp"
#include "embgen/prompts.hpp"

namespace embgen {

/// Inverse of PromptLibrary::render for a single template: recovers the
/// values substituted for `keys`, or nullopt when `rendered` does not fit
/// the template's literal text.
std::optional<PromptVars> match_template(std::string_view tmpl, std::string_view rendered,
                                         const std::vector<std::string>& keys);

/// Offline teacher. Recognizes each pipeline prompt by its system text and
/// answers from the content of the user message alone: capitalized phrases
/// become entities, descriptions are merged by concatenation, patterns name
/// the dominant content word, QA pairs restate entity descriptions.
/// Deterministic: the same request always gets the same reply.
MockChatClient::Responder mock_teacher_responder(const PromptLibrary& prompts);

/// Offline judge grading the predicted answer by unigram overlap with the
/// reference (factual accuracy: F1, completeness: recall, relevance: overlap
/// with the question, clarity: length ratio).
MockChatClient::Responder mock_judge_responder(const PromptLibrary& prompts);

enum class ChatRole { Teacher, Judge };

/// HTTP client for provider "openai"; the matching mock for provider "mock".
std::unique_ptr<ChatClient> make_chat_client(const LlmEndpoint& endpoint, ChatRole role,
                                             const PromptLibrary& prompts);
std::unique_ptr<EmbeddingClient> make_embedding_client(const LlmEndpoint& endpoint);

}  // namespace embgen
