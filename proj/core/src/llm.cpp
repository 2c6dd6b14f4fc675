#include "embgen/llm.hpp"

#include <httplib.h>

#include <chrono>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <thread>

#include <spdlog/spdlog.h>

#include "embgen/errors.hpp"
#include "embgen/jsonio.hpp"

namespace embgen {

std::string LlmEndpoint::resolved_api_key() const {
  if (!api_key.empty()) return api_key;
  if (api_key_env.empty()) return {};
  const char* v = std::getenv(api_key_env.c_str());
  return v ? std::string(v) : std::string();
}

StatusClass classify_status(int status) {
  if (status >= 200 && status < 300) return StatusClass::Success;
  if (status == 401 || status == 403) return StatusClass::Auth;
  if (status == 0 || status == 408 || status == 409 || status == 425 || status == 429 || status >= 500) {
    return StatusClass::Retryable;
  }
  return StatusClass::Fatal;
}

HttpReply send_with_retries(const std::function<HttpReply()>& attempt, int max_retries,
                            double backoff_initial_s, const std::string& what) {
  HttpReply last;
  for (int k = 0; k <= max_retries; ++k) {
    if (k > 0) {
      const double delay = backoff_initial_s * std::pow(2.0, k - 1);
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
    last = attempt();
    switch (classify_status(last.status)) {
      case StatusClass::Success:
        return last;
      case StatusClass::Auth:
        throw AuthError(what + ": authentication failed (HTTP " + std::to_string(last.status) + ")",
                        last.status);
      case StatusClass::Fatal:
        throw TransportError(what + ": HTTP " + std::to_string(last.status) + ": " + last.body.substr(0, 300),
                             last.status, k + 1);
      case StatusClass::Retryable:
        spdlog::debug("{}: retryable status {} (attempt {}/{})", what, last.status, k + 1, max_retries + 1);
        break;
    }
  }
  const std::string detail = last.status == 0 ? last.error : "HTTP " + std::to_string(last.status);
  throw TransportError(what + ": giving up after " + std::to_string(max_retries + 1) + " attempts (" + detail + ")",
                       last.status, max_retries + 1);
}

HttpReply http_post_json(const LlmEndpoint& endpoint, const std::string& path, const std::string& body) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint.base_url, m, url_re)) {
    throw ConfigError({"endpoint base_url is not an http(s) URL: " + endpoint.base_url});
  }
  std::string prefix = m[2].matched ? m[2].str() : std::string();
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client cli(m[1].str());
  const auto secs = static_cast<time_t>(endpoint.request_timeout_s);
  const auto usecs = static_cast<time_t>((endpoint.request_timeout_s - static_cast<double>(secs)) * 1e6);
  cli.set_connection_timeout(secs, usecs);
  cli.set_read_timeout(secs, usecs);
  cli.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  const std::string key = endpoint.resolved_api_key();
  if (!key.empty()) headers.emplace("Authorization", "Bearer " + key);

  auto res = cli.Post(prefix + path, headers, body, "application/json");
  HttpReply reply;
  if (!res) {
    reply.status = 0;
    reply.error = httplib::to_string(res.error());
    return reply;
  }
  reply.status = res->status;
  reply.body = res->body;
  return reply;
}

HttpChatClient::HttpChatClient(LlmEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

std::string HttpChatClient::request_body(const LlmEndpoint& endpoint, const ChatRequest& request) {
  json body;
  body["model"] = endpoint.model;
  body["temperature"] = endpoint.temperature;
  body["messages"] = json::array({
      {{"role", "system"}, {"content", request.system}},
      {{"role", "user"}, {"content", request.user}},
  });
  return body.dump();
}

ChatResponse HttpChatClient::parse_response(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw TransportError(std::string("chat completion: response is not JSON: ") + e.what(), 200, 1);
  }
  const auto& choices = j.value("choices", json::array());
  if (!choices.is_array() || choices.empty() || !choices[0].contains("message")) {
    throw TransportError("chat completion: response has no choices[0].message", 200, 1);
  }
  ChatResponse out;
  const auto& content = choices[0]["message"].value("content", json());
  out.content = content.is_string() ? content.get<std::string>() : std::string();
  if (j.contains("usage") && j["usage"].is_object()) {
    const auto& u = j["usage"];
    out.usage = TokenUsage{u.value("prompt_tokens", 0L), u.value("completion_tokens", 0L),
                           u.value("total_tokens", 0L)};
  }
  return out;
}

ChatResponse HttpChatClient::complete(const ChatRequest& request) {
  if (request.system.empty() || request.user.empty()) {
    throw Error("chat request needs non-empty system and user messages");
  }
  const std::string body = request_body(endpoint_, request);
  const HttpReply reply = send_with_retries([&] { return http_post_json(endpoint_, "/chat/completions", body); },
                                            endpoint_.max_retries, endpoint_.backoff_initial_s,
                                            "chat completion (" + endpoint_.model + ")");
  return parse_response(reply.body);
}

HttpEmbeddingClient::HttpEmbeddingClient(LlmEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

std::vector<std::vector<float>> HttpEmbeddingClient::embed(std::span<const std::string> texts) {
  json body;
  body["model"] = endpoint_.model;
  body["input"] = json::array();
  for (const auto& t : texts) body["input"].push_back(t);
  const std::string payload = body.dump();
  const HttpReply reply = send_with_retries([&] { return http_post_json(endpoint_, "/embeddings", payload); },
                                            endpoint_.max_retries, endpoint_.backoff_initial_s,
                                            "embeddings (" + endpoint_.model + ")");
  json j;
  try {
    j = json::parse(reply.body);
  } catch (const json::parse_error& e) {
    throw TransportError(std::string("embeddings: response is not JSON: ") + e.what(), reply.status, 1);
  }
  const auto& data = j.value("data", json::array());
  if (!data.is_array() || data.size() != texts.size()) {
    throw TransportError("embeddings: expected " + std::to_string(texts.size()) + " vectors", reply.status, 1);
  }
  std::vector<std::vector<float>> out(texts.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::size_t idx = data[i].value("index", i);
    if (idx >= out.size()) throw TransportError("embeddings: index out of range", reply.status, 1);
    out[idx] = data[i].at("embedding").get<std::vector<float>>();
  }
  return out;
}

std::string mock_key(const ChatRequest& request) {
  return sha256_hex(request.system + '\x1f' + request.user);
}

void MockChatClient::set_reply(const ChatRequest& request, std::string reply) {
  std::lock_guard lock(mu_);
  canned_[mock_key(request)] = std::move(reply);
}

void MockChatClient::set_default_reply(std::string reply) {
  std::lock_guard lock(mu_);
  default_reply_ = std::move(reply);
}

void MockChatClient::set_responder(Responder responder) {
  std::lock_guard lock(mu_);
  responder_ = std::move(responder);
}

ChatResponse MockChatClient::complete(const ChatRequest& request) {
  const std::string key = mock_key(request);
  std::string reply;
  Responder responder;
  {
    std::lock_guard lock(mu_);
    if (auto it = canned_.find(key); it != canned_.end()) {
      reply = it->second;
    } else if (responder_) {
      responder = responder_;
    } else if (default_reply_) {
      reply = *default_reply_;
    } else {
      throw TransportError("mock: no reply configured for request " + key.substr(0, 12), 0, 1);
    }
  }
  if (responder) reply = responder(request);
  std::lock_guard lock(mu_);
  transcript_.push_back({key, request, reply});
  return ChatResponse{reply, std::nullopt};
}

std::vector<MockChatClient::Exchange> MockChatClient::transcript() const {
  std::lock_guard lock(mu_);
  return transcript_;
}

std::size_t MockChatClient::call_count() const {
  std::lock_guard lock(mu_);
  return transcript_.size();
}

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> mock_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur += static_cast<char>(std::tolower(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace

void MockEmbeddingClient::set_vector(const std::string& text, std::vector<float> v) {
  std::lock_guard lock(mu_);
  pinned_[text] = std::move(v);
}

std::size_t MockEmbeddingClient::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::vector<std::vector<float>> MockEmbeddingClient::embed(std::span<const std::string> texts) {
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  std::lock_guard lock(mu_);
  ++calls_;
  for (const auto& text : texts) {
    if (auto it = pinned_.find(text); it != pinned_.end()) {
      out.push_back(it->second);
      continue;
    }
    std::vector<float> v(dim_, 0.0f);
    const auto toks = mock_tokens(text);
    auto add = [&](std::string_view feature, float weight) {
      const std::uint64_t h = fnv1a(feature);
      const float sign = (h >> 63) ? -1.0f : 1.0f;
      v[h % dim_] += sign * weight;
    };
    for (std::size_t i = 0; i < toks.size(); ++i) {
      add(toks[i], 1.0f);
      if (i + 1 < toks.size()) add(toks[i] + "_" + toks[i + 1], 0.5f);
    }
    if (toks.empty()) v[0] = 1.0f;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace embgen
