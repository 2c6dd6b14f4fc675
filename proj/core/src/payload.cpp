#include "embgen/payload.hpp"

#include <array>
#include <optional>

#include "embgen/errors.hpp"

namespace embgen {

std::string_view to_string(PayloadKind kind) {
  switch (kind) {
    case PayloadKind::Entities: return "entities";
    case PayloadKind::Pattern: return "pattern";
    case PayloadKind::ConsolidationAction: return "consolidation-action";
    case PayloadKind::QaArray: return "qa-array";
    case PayloadKind::JudgeVerdict: return "judge-verdict";
  }
  return "unknown";
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

// Contents of the first ``` fenced block, or the input unchanged.
std::string_view strip_fence(std::string_view s) {
  const auto open = s.find("```");
  if (open == std::string_view::npos) return s;
  auto body_start = s.find('\n', open);
  if (body_start == std::string_view::npos) return s;
  ++body_start;
  const auto close = s.find("```", body_start);
  if (close == std::string_view::npos) return s.substr(body_start);
  return s.substr(body_start, close - body_start);
}

// Index one past the bracket matching s[open], honouring JSON strings.
std::optional<std::size_t> match_bracket(std::string_view s, std::size_t open) {
  std::vector<char> stack;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{' || c == '[') stack.push_back(c == '{' ? '}' : ']');
    else if (c == '}' || c == ']') {
      if (stack.empty() || stack.back() != c) return std::nullopt;
      stack.pop_back();
      if (stack.empty()) return i + 1;
    }
  }
  return std::nullopt;
}

std::optional<std::string> required_string(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) return std::string("missing key: ") + key;
  const auto& v = obj[key];
  if (!v.is_string()) return std::string("key '") + key + "' must be a string";
  if (trim(v.get_ref<const std::string&>()).empty()) return std::string("empty value for key: ") + key;
  return std::nullopt;
}

ParsedPayload filter_array(json items, std::initializer_list<const char*> keys) {
  ParsedPayload out;
  out.value = json::array();
  for (auto& item : items) {
    std::optional<std::string> problem;
    if (!item.is_object()) problem = "entry is not an object";
    for (const char* k : keys) {
      if (problem) break;
      problem = required_string(item, k);
    }
    if (problem) {
      ++out.dropped;
      out.drop_reasons.push_back(*problem);
    } else {
      out.value.push_back(std::move(item));
    }
  }
  if (out.value.empty() && out.dropped > 0) throw SchemaError(out.drop_reasons.front());
  return out;
}

const std::array<const char*, 4> kVerdictDimensions = {"factual_accuracy", "completeness", "relevance", "clarity"};

}  // namespace

std::string extract_json_region(std::string_view text, char preferred_open) {
  const std::string_view body = trim(strip_fence(text));
  if (body.empty()) return {};
  const char other = preferred_open == '[' ? '{' : '[';
  for (char open : {preferred_open, other}) {
    for (auto pos = body.find(open); pos != std::string_view::npos; pos = body.find(open, pos + 1)) {
      if (auto end = match_bracket(body, pos)) {
        const std::string candidate(body.substr(pos, *end - pos));
        if (json::accept(candidate)) return candidate;
      }
    }
  }
  return {};
}

ParsedPayload parse_json_payload(std::string_view text, PayloadKind kind) {
  const char preferred = kind == PayloadKind::QaArray ? '[' : '{';
  const std::string region = extract_json_region(text, preferred);
  if (region.empty()) {
    throw SchemaError(std::string(to_string(kind)) + ": no parseable JSON in model output");
  }
  json value = json::parse(region);

  switch (kind) {
    case PayloadKind::Entities: {
      json items;
      if (value.is_array()) items = std::move(value);
      else if (value.is_object() && value.contains("entities") && value["entities"].is_array()) items = value["entities"];
      else throw SchemaError("missing key: entities");
      return filter_array(std::move(items), {"entity", "entity_explanation"});
    }
    case PayloadKind::QaArray: {
      json items;
      if (value.is_array()) items = std::move(value);
      else if (value.is_object() && value.contains("question")) items = json::array({value});
      else throw SchemaError("qa-array: expected a JSON array of QA objects");
      return filter_array(std::move(items), {"question", "answer"});
    }
    case PayloadKind::Pattern: {
      if (auto problem = required_string(value, "pattern_nature")) throw SchemaError(*problem);
      return ParsedPayload{std::move(value), 0, {}};
    }
    case PayloadKind::ConsolidationAction: {
      if (auto problem = required_string(value, "action")) throw SchemaError(*problem);
      return ParsedPayload{std::move(value), 0, {}};
    }
    case PayloadKind::JudgeVerdict: {
      if (!value.is_object()) throw SchemaError("judge-verdict: expected a JSON object");
      for (const char* dim : kVerdictDimensions) {
        if (!value.contains(dim)) throw SchemaError(std::string("missing key: ") + dim);
        json& entry = value[dim];
        if (entry.is_string()) entry = json{{"score", entry}, {"reasoning", ""}};
        if (!entry.is_object() || !entry.contains("score") || !entry["score"].is_string()) {
          throw SchemaError(std::string("missing key: ") + dim + ".score");
        }
        const auto& score = entry["score"].get_ref<const std::string&>();
        if (score != "Strong" && score != "Adequate" && score != "Weak") {
          throw SchemaError(std::string(dim) + ": score '" + score + "' is not one of Strong|Adequate|Weak");
        }
      }
      return ParsedPayload{std::move(value), 0, {}};
    }
  }
  throw SchemaError("unknown payload kind");
}

}  // namespace embgen
