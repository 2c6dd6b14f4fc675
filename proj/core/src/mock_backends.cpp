#include "embgen/mock_backends.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "embgen/errors.hpp"
#include "embgen/jsonio.hpp"
#include "embgen/metrics.hpp"

namespace embgen {

namespace {

bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    cur += c == '\n' ? ' ' : c;
    const bool boundary = (c == '.' || c == '!' || c == '?') &&
                          (i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1])));
    if (boundary) {
      if (auto t = trim(cur); !t.empty()) out.push_back(std::move(t));
      cur.clear();
    }
  }
  if (auto t = trim(cur); !t.empty()) out.push_back(std::move(t));
  return out;
}

const std::set<std::string, std::less<>>& capitalized_stopwords() {
  static const std::set<std::string, std::less<>> words = {
      "A",     "An",   "The",  "In",    "On",    "At",    "By",    "For",  "Of",    "And",   "But",
      "Or",    "It",   "Its",  "This",  "That",  "These", "Those", "They", "Their", "He",    "She",
      "His",   "Her",  "We",   "Our",   "After", "Before", "During", "When", "While", "Since", "Although",
      "Most",  "Many", "Some", "Each",  "Every", "Both",  "Today", "Later", "Over",  "Under", "With",
      "From",  "As",   "To",   "Unlike", "Like", "Because", "However", "There", "Here", "Its"};
  return words;
}

// Maximal runs of capitalized words; a lone stopword run is not an entity.
std::vector<std::string> capitalized_phrases(std::string_view sentence) {
  std::vector<std::string> words;
  std::string w;
  for (char c : sentence) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '\'') {
      w += c;
    } else {
      words.push_back(w);
      w.clear();
      if (c == ',' || c == ';' || c == ':' || c == '(' || c == ')' || c == '.') words.emplace_back();
    }
  }
  words.push_back(w);

  std::vector<std::string> phrases;
  std::vector<std::string> run;
  auto flush = [&] {
    while (!run.empty() && capitalized_stopwords().count(run.front())) run.erase(run.begin());
    if (!run.empty()) {
      std::string p;
      for (const auto& r : run) p += (p.empty() ? "" : " ") + r;
      phrases.push_back(std::move(p));
    }
    run.clear();
  };
  for (const auto& word : words) {
    if (word.empty()) {
      flush();
      continue;
    }
    if (std::isupper(static_cast<unsigned char>(word[0]))) {
      run.push_back(word);
    } else {
      flush();
    }
  }
  flush();
  return phrases;
}

// "Source i: text" blocks back into their texts.
std::vector<std::string> parse_sources(std::string_view text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t start = text.find("Source ", pos);
    if (start == std::string_view::npos) break;
    const std::size_t colon = text.find(": ", start);
    if (colon == std::string_view::npos) break;
    std::size_t next = text.find("\n\nSource ", colon);
    const std::size_t end = next == std::string_view::npos ? text.size() : next;
    out.push_back(trim(text.substr(colon + 2, end - colon - 2)));
    if (next == std::string_view::npos) break;
    pos = next + 2;
  }
  return out;
}

struct NamedText {
  std::string name;
  std::string text;
};

// "Entity i: name\n\ndescription" blocks.
std::vector<NamedText> parse_entity_blocks(std::string_view text) {
  std::vector<NamedText> out;
  std::size_t pos = 0;
  for (std::size_t i = 1;; ++i) {
    const std::string head = "Entity " + std::to_string(i) + ": ";
    const std::size_t start = text.find(head, pos);
    if (start == std::string_view::npos) break;
    const std::size_t name_end = text.find("\n\n", start);
    if (name_end == std::string_view::npos) break;
    const std::string next_head = "\n\nEntity " + std::to_string(i + 1) + ": ";
    std::size_t next = text.find(next_head, name_end);
    const std::size_t end = next == std::string_view::npos ? text.size() : next;
    out.push_back({trim(text.substr(start + head.size(), name_end - start - head.size())),
                   trim(text.substr(name_end + 2, end - name_end - 2))});
    if (next == std::string_view::npos) break;
    pos = next;
  }
  return out;
}

struct GroupBlock {
  std::string group_id;
  std::vector<NamedText> entities;
};

std::vector<GroupBlock> parse_group_blocks(std::string_view text) {
  std::vector<GroupBlock> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t start = text.find("PROXIMITY GROUP ", pos);
    if (start == std::string_view::npos) break;
    std::size_t next = text.find("\n\nPROXIMITY GROUP ", start);
    const std::size_t end = next == std::string_view::npos ? text.size() : next;
    const std::string_view block = text.substr(start, end - start);
    GroupBlock g;
    if (auto id = block.find("Group ID: "); id != std::string_view::npos) {
      const std::size_t eol = block.find('\n', id);
      g.group_id = trim(block.substr(id + 10, eol - id - 10));
    }
    // Entity entries: "\n\n  n.j name\n\n  description".
    std::size_t p = block.find("\n\n  ");
    while (p != std::string_view::npos) {
      const std::size_t name_line = p + 4;
      const std::size_t name_end = block.find("\n\n  ", name_line);
      if (name_end == std::string_view::npos) break;
      const std::size_t desc_start = name_end + 4;
      const std::size_t desc_end = block.find("\n\n  ", desc_start);
      std::string label = trim(block.substr(name_line, name_end - name_line));
      if (auto sp = label.find(' '); sp != std::string::npos) label = label.substr(sp + 1);
      g.entities.push_back(
          {label, trim(block.substr(desc_start, (desc_end == std::string_view::npos ? block.size() : desc_end) -
                                                    desc_start))});
      p = desc_end;
    }
    out.push_back(std::move(g));
    if (next == std::string_view::npos) break;
    pos = next + 2;
  }
  return out;
}

const std::set<std::string, std::less<>>& content_stopwords() {
  static const std::set<std::string, std::less<>> words = {
      "about", "after", "again", "along", "among", "around", "because", "before", "being", "between",
      "built", "could", "during", "every", "first", "founded", "their", "there", "these", "those",
      "through", "under", "until", "where", "which", "while", "would", "known", "later", "other",
      "since", "still", "three", "today", "years", "named", "opened"};
  return words;
}

std::string dominant_word(const std::vector<std::string>& texts) {
  std::map<std::string, std::size_t> counts;
  for (const auto& t : texts) {
    for (const auto& tok : metric_tokens(t)) {
      if (tok.size() >= 5 && !content_stopwords().count(tok) &&
          !std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
        ++counts[tok];
      }
    }
  }
  std::string best = "general";
  std::size_t best_n = 0;
  for (const auto& [w, n] : counts) {
    if (n > best_n) {
      best = w;
      best_n = n;
    }
  }
  return best;
}

constexpr std::string_view kPatternLead = "Knowledge related to ";

std::string pattern_topic(std::string_view pattern) {
  const std::size_t at = pattern.find(kPatternLead);
  if (at == std::string_view::npos) return trim(pattern);
  const std::size_t start = at + kPatternLead.size();
  std::size_t end = start;
  while (end < pattern.size() && is_ident_char(pattern[end])) ++end;
  return std::string(pattern.substr(start, end - start));
}

json qa(const std::string& question, const std::string& answer, json primary, json supporting,
        const std::string& type, const std::string& rationale) {
  return json{{"question", question},       {"answer", answer},    {"primary_entities", std::move(primary)},
              {"supporting_entities", std::move(supporting)}, {"question_type", type}, {"rationale", rationale}};
}

std::string respond_extraction(std::string_view document) {
  json entities = json::array();
  std::set<std::string> seen;
  for (const auto& sentence : split_sentences(document)) {
    for (const auto& phrase : capitalized_phrases(sentence)) {
      if (!seen.insert(phrase).second) continue;
      entities.push_back({{"entity", phrase}, {"entity_explanation", sentence}});
    }
  }
  return json{{"entities", entities}}.dump(2);
}

std::string respond_proximity(std::string_view user) {
  const auto blocks = parse_entity_blocks(user);
  json out = json::array();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    out.push_back(qa("What is " + blocks[i].name + "?", blocks[i].text, json::array({blocks[i].name}), json::array(),
                     "factual", "Entity " + std::to_string(i + 1) + " states this directly."));
  }
  if (blocks.size() >= 2) {
    const auto& a = blocks[0];
    const auto& b = blocks[1];
    out.push_back(qa("How does " + a.name + " relate to " + b.name + "?", a.text + " " + b.text,
                     json::array({a.name}), json::array({b.name}), "relationship",
                     "Combines entities 1 and 2."));
  }
  return out.dump(2);
}

std::string respond_single(std::string_view name, std::string_view explanation) {
  json out = json::array();
  out.push_back(qa("What is " + std::string(name) + "?", std::string(explanation), json::array({std::string(name)}),
                   json::array(), "factual", "Taken from the entity explanation."));
  return out.dump(2);
}

std::string respond_multi(std::string_view user) {
  const auto groups = parse_group_blocks(user);
  json out = json::array();
  json all_ids = json::array();
  json firsts = json::array();
  std::string combined;
  for (const auto& g : groups) {
    all_ids.push_back(g.group_id);
    if (g.entities.empty()) continue;
    const auto& e = g.entities.front();
    firsts.push_back(e.name);
    combined += (combined.empty() ? "" : " ") + e.text;
    json item = qa("What is " + e.name + "?", e.text, json::array({e.name}), json::array(), "within_group",
                   "Group " + g.group_id + " describes " + e.name + ".");
    item["source_groups"] = json::array({g.group_id});
    item["cross_group"] = false;
    out.push_back(std::move(item));
  }
  if (firsts.size() >= 2) {
    std::string names;
    for (std::size_t i = 0; i < firsts.size(); ++i) {
      if (i) names += i + 1 == firsts.size() ? " and " : ", ";
      names += firsts[i].get<std::string>();
    }
    json item = qa("Compare " + names + ".", combined, firsts, json::array(), "comparative",
                   "Draws on the first entity of every group.");
    item["source_groups"] = all_ids;
    item["cross_group"] = true;
    out.push_back(std::move(item));
  }
  return out.dump(2);
}

}  // namespace

std::optional<PromptVars> match_template(std::string_view tmpl, std::string_view rendered,
                                         const std::vector<std::string>& keys) {
  // Split into literal, key, literal, key, ..., literal.
  std::vector<std::string> literals(1);
  std::vector<std::string> order;
  for (std::size_t i = 0; i < tmpl.size();) {
    if (tmpl[i] == '{') {
      const std::size_t close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        const std::string name(tmpl.substr(i + 1, close - i - 1));
        if (std::find(keys.begin(), keys.end(), name) != keys.end()) {
          order.push_back(name);
          literals.emplace_back();
          i = close + 1;
          continue;
        }
      }
    }
    literals.back() += tmpl[i++];
  }
  if (!rendered.starts_with(literals.front())) return std::nullopt;
  if (!rendered.substr(literals.front().size()).ends_with(literals.back()) && !order.empty()) return std::nullopt;

  PromptVars vars;
  std::size_t pos = literals.front().size();
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::string& next = literals[k + 1];
    std::size_t end;
    if (k + 1 == order.size()) {
      if (rendered.size() < next.size() || rendered.size() - next.size() < pos) return std::nullopt;
      end = rendered.size() - next.size();
    } else {
      end = rendered.find(next, pos);
      if (end == std::string_view::npos) return std::nullopt;
    }
    vars[order[k]] = std::string(rendered.substr(pos, end - pos));
    pos = end + next.size();
  }
  if (order.empty() && rendered != literals.front()) return std::nullopt;
  return vars;
}

MockChatClient::Responder mock_teacher_responder(const PromptLibrary& prompts) {
  namespace k = prompt_keys;
  // Templates are copied so the responder does not depend on the library's lifetime.
  struct Templates {
    std::map<std::string, std::string> system;
    std::map<std::string, std::string> user;
  };
  auto t = std::make_shared<Templates>();
  for (std::string_view key : {k::kExtractionSystem, k::kConsolidationSystem, k::kContradictionSystem, k::kPatternSystem,
                          k::kPatternMergeSystem, k::kSpecializeSystem, k::kProximitySystem, k::kSingleSystem,
                          k::kMultiSystem}) {
    t->system[prompts.get(key)] = std::string(key);
  }
  for (std::string_view key : {k::kExtractionUser, k::kConsolidationUser, k::kContradictionUser, k::kPatternUser,
                          k::kPatternMergeUser, k::kSpecializeUser, k::kProximityUser, k::kSingleUser,
                          k::kMultiUser}) {
    t->user[std::string(key)] = prompts.get(key);
  }

  return [t](const ChatRequest& request) -> std::string {
    auto kind = t->system.find(request.system);
    if (kind == t->system.end()) throw TransportError("mock teacher: unrecognized system prompt", 0, 1);
    const std::string& key = kind->second;
    auto vars_for = [&](std::string_view user_key, const std::vector<std::string>& names) {
      auto v = match_template(t->user.at(std::string(user_key)), request.user, names);
      if (!v) throw TransportError("mock teacher: user prompt does not match " + std::string(user_key), 0, 1);
      return *v;
    };

    if (key == k::kExtractionSystem) {
      return respond_extraction(vars_for(k::kExtractionUser, {"document_content"})["document_content"]);
    }
    if (key == k::kConsolidationSystem || key == k::kContradictionSystem) {
      const std::string_view user_key = key == k::kConsolidationSystem ? k::kConsolidationUser : k::kContradictionUser;
      auto v = vars_for(user_key, {"entity_variations", "entity_name", "explanations_text"});
      auto sources = parse_sources(v["explanations_text"]);
      std::string merged;
      for (const auto& s : sources) merged += (merged.empty() ? "" : " ") + s;
      return merged;
    }
    if (key == k::kPatternSystem) {
      auto v = vars_for(k::kPatternUser, {"group_size", "group_entities"});
      std::vector<std::string> lines;
      std::string first;
      std::size_t pos = 0;
      const std::string& body = v["group_entities"];
      while (pos <= body.size()) {
        std::size_t eol = body.find('\n', pos);
        if (eol == std::string::npos) eol = body.size();
        std::string line = body.substr(pos, eol - pos);
        if (auto dot = line.find(". "); dot != std::string::npos) line = line.substr(dot + 2);
        if (auto colon = line.find(": "); colon != std::string::npos) {
          if (first.empty()) first = line.substr(0, colon);
          lines.push_back(line.substr(colon + 2));
        }
        pos = eol + 1;
      }
      const std::string topic = dominant_word(lines);
      return json{{"pattern_nature", std::string(kPatternLead) + topic + " and entities such as " + first}}.dump(2);
    }
    if (key == k::kPatternMergeSystem) {
      auto v = vars_for(k::kPatternMergeUser, {"current_list", "new_pattern"});
      const std::string topic = pattern_topic(v["new_pattern"]);
      if (v["current_list"].find(std::string(kPatternLead) + topic + " ") != std::string::npos) {
        return json{{"action", "redundant"}, {"merge_with_index", nullptr}, {"reasoning", "same topic"}}.dump(2);
      }
      return json{{"action", "add_new"}, {"merge_with_index", nullptr}, {"reasoning", "new topic"}}.dump(2);
    }
    if (key == k::kSpecializeSystem) {
      auto v = vars_for(k::kSpecializeUser, {"base_prompt", "cluster_patterns"});
      return v["base_prompt"] + "\n\nYou are especially familiar with the following knowledge areas:\n" +
             v["cluster_patterns"];
    }
    if (key == k::kProximitySystem) return respond_proximity(vars_for(k::kProximityUser, {"N", "entity_blocks"})["entity_blocks"]);
    if (key == k::kSingleSystem) {
      auto v = vars_for(k::kSingleUser, {"entity_name", "entity_explanation"});
      return respond_single(v["entity_name"], v["entity_explanation"]);
    }
    return respond_multi(request.user);
  };
}

MockChatClient::Responder mock_judge_responder(const PromptLibrary& prompts) {
  const std::string system = prompts.get(prompt_keys::kJudgeSystem);
  const std::string user = prompts.get(prompt_keys::kJudgeUser);
  return [system, user](const ChatRequest& request) -> std::string {
    if (request.system != system) throw TransportError("mock judge: unrecognized system prompt", 0, 1);
    auto v = match_template(user, request.user, {"question", "ground_truth", "predicted"});
    if (!v) throw TransportError("mock judge: user prompt does not match the judge template", 0, 1);

    auto bag = [](const std::string& text) {
      std::map<std::string, std::size_t> m;
      for (auto& tok : metric_tokens(text)) ++m[porter_stem(tok)];
      return m;
    };
    auto overlap = [](const std::map<std::string, std::size_t>& a, const std::map<std::string, std::size_t>& b) {
      std::size_t n = 0;
      for (const auto& [w, c] : a) {
        if (auto it = b.find(w); it != b.end()) n += std::min(c, it->second);
      }
      return n;
    };
    auto total = [](const std::map<std::string, std::size_t>& m) {
      std::size_t n = 0;
      for (const auto& [w, c] : m) n += c;
      return n;
    };
    const auto ref = bag((*v)["ground_truth"]);
    const auto pred = bag((*v)["predicted"]);
    const auto question = bag((*v)["question"]);
    const double common = static_cast<double>(overlap(ref, pred));
    const double precision = total(pred) ? common / static_cast<double>(total(pred)) : 0.0;
    const double recall = total(ref) ? common / static_cast<double>(total(ref)) : 0.0;
    const double f1 = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    const double q_cover =
        total(question) ? static_cast<double>(overlap(question, pred)) / static_cast<double>(total(question)) : 0.0;
    const double ratio = total(ref) ? static_cast<double>(total(pred)) / static_cast<double>(total(ref)) : 0.0;

    auto level = [](double x, double strong, double adequate) {
      return x >= strong ? "Strong" : x >= adequate ? "Adequate" : "Weak";
    };
    auto dim = [](const char* score, const std::string& why) { return json{{"score", score}, {"reasoning", why}}; };
    return json{{"factual_accuracy", dim(level(f1, 0.8, 0.5), "unigram F1 " + std::to_string(f1))},
                {"completeness", dim(level(recall, 0.8, 0.5), "reference recall " + std::to_string(recall))},
                {"relevance", dim(level(q_cover, 0.5, 0.2), "question coverage " + std::to_string(q_cover))},
                {"clarity", dim(ratio >= 0.5 && ratio <= 2.0 ? "Strong" : "Adequate",
                                "length ratio " + std::to_string(ratio))}}
        .dump(2);
  };
}

std::unique_ptr<ChatClient> make_chat_client(const LlmEndpoint& endpoint, ChatRole role,
                                             const PromptLibrary& prompts) {
  if (endpoint.provider == "mock") {
    auto client = std::make_unique<MockChatClient>(role == ChatRole::Teacher ? mock_teacher_responder(prompts)
                                                                             : mock_judge_responder(prompts));
    client->set_max_concurrency(endpoint.max_concurrency);
    return client;
  }
  if (endpoint.provider == "openai") return std::make_unique<HttpChatClient>(endpoint);
  throw ConfigError({"unknown chat provider: " + endpoint.provider});
}

std::unique_ptr<EmbeddingClient> make_embedding_client(const LlmEndpoint& endpoint) {
  if (endpoint.provider == "mock") return std::make_unique<MockEmbeddingClient>();
  if (endpoint.provider == "openai") return std::make_unique<HttpEmbeddingClient>(endpoint);
  throw ConfigError({"unknown embedding provider: " + endpoint.provider});
}

}  // namespace embgen
