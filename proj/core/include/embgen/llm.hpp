#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace embgen {

/// Connection and decoding settings for one OpenAI-compatible endpoint.
/// `provider == "mock"` selects the offline synthetic backends.
struct LlmEndpoint {
  std::string provider = "openai";
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4o-mini";
  std::string api_key_env = "OPENAI_API_KEY";
  std::string api_key;  // resolved from api_key_env when empty
  double temperature = 0.001;
  int max_retries = 3;
  double request_timeout_s = 120.0;
  double backoff_initial_s = 1.0;
  std::size_t max_concurrency = 8;

  std::string resolved_api_key() const;
};

struct ChatRequest {
  std::string system;
  std::string user;
};

struct TokenUsage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
  long total_tokens = 0;
};

struct ChatResponse {
  std::string content;
  std::optional<TokenUsage> usage;
};

/// Shared by all pipeline workers; implementations must be thread-safe.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
  virtual std::size_t max_concurrency() const { return 8; }
};

class EmbeddingClient {
 public:
  virtual ~EmbeddingClient() = default;
  /// One raw (unnormalized) vector per input text, in input order.
  virtual std::vector<std::vector<float>> embed(std::span<const std::string> texts) = 0;
  virtual std::size_t max_concurrency() const { return 1; }
};

/// Retry classification for HTTP statuses. 0 means no response.
enum class StatusClass { Success, Retryable, Auth, Fatal };
StatusClass classify_status(int status);

struct HttpReply {
  int status = 0;
  std::string body;
  std::string error;  // transport-level message when status == 0
};

/// Issues `attempt()` until it succeeds, retrying retryable statuses up to
/// `max_retries` times with exponential backoff (initial * 2^k seconds).
/// Throws AuthError on 401/403, TransportError on other non-retryable codes
/// or once retries are exhausted.
HttpReply send_with_retries(const std::function<HttpReply()>& attempt, int max_retries,
                            double backoff_initial_s, const std::string& what);

/// POST {base_url}/chat/completions with {model, temperature, messages}.
class HttpChatClient final : public ChatClient {
 public:
  explicit HttpChatClient(LlmEndpoint endpoint);
  ChatResponse complete(const ChatRequest& request) override;
  std::size_t max_concurrency() const override { return endpoint_.max_concurrency; }

  static std::string request_body(const LlmEndpoint& endpoint, const ChatRequest& request);
  static ChatResponse parse_response(const std::string& body);

 private:
  LlmEndpoint endpoint_;
};

/// POST {base_url}/embeddings with {model, input: [...]}.
class HttpEmbeddingClient final : public EmbeddingClient {
 public:
  explicit HttpEmbeddingClient(LlmEndpoint endpoint);
  std::vector<std::vector<float>> embed(std::span<const std::string> texts) override;
  std::size_t max_concurrency() const override { return endpoint_.max_concurrency; }

 private:
  LlmEndpoint endpoint_;
};

/// POSTs a JSON body to `base_url` + `path` and returns the raw reply without
/// retrying. Shared by the HTTP clients.
HttpReply http_post_json(const LlmEndpoint& endpoint, const std::string& path, const std::string& body);

/// Key used by the mock to look up canned replies: SHA-256 of system, a unit
/// separator, and user.
std::string mock_key(const ChatRequest& request);

/// Deterministic offline chat client. Replies are looked up by
/// mock_key(request); unmatched requests go to the responder, then to the
/// default reply. Every exchange is recorded in call order.
class MockChatClient final : public ChatClient {
 public:
  using Responder = std::function<std::string(const ChatRequest&)>;

  struct Exchange {
    std::string key;
    ChatRequest request;
    std::string reply;
  };

  MockChatClient() = default;
  explicit MockChatClient(Responder responder) : responder_(std::move(responder)) {}

  void set_reply(const ChatRequest& request, std::string reply);
  void set_default_reply(std::string reply);
  void set_responder(Responder responder);
  void set_max_concurrency(std::size_t n) { max_concurrency_ = n; }

  ChatResponse complete(const ChatRequest& request) override;
  std::size_t max_concurrency() const override { return max_concurrency_; }

  std::vector<Exchange> transcript() const;
  std::size_t call_count() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::string> canned_;
  std::optional<std::string> default_reply_;
  Responder responder_;
  std::vector<Exchange> transcript_;
  std::size_t max_concurrency_ = 8;
};

/// Feature-hashing encoder: lowercase alphanumeric tokens and token bigrams
/// hashed into `dim` signed buckets. Texts sharing vocabulary land close
/// together, which is enough structure for offline runs. Explicit vectors
/// can be pinned per text.
class MockEmbeddingClient final : public EmbeddingClient {
 public:
  explicit MockEmbeddingClient(std::size_t dim = 64) : dim_(dim) {}
  void set_vector(const std::string& text, std::vector<float> v);
  std::vector<std::vector<float>> embed(std::span<const std::string> texts) override;
  std::size_t calls() const;

 private:
  std::size_t dim_;
  mutable std::mutex mu_;
  std::map<std::string, std::vector<float>> pinned_;
  std::size_t calls_ = 0;
};

}  // namespace embgen
