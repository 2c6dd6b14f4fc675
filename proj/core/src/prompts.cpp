#include "embgen/prompts.hpp"

#include "embgen/errors.hpp"
#include "embgen/jsonio.hpp"

namespace embgen {
namespace detail {
const std::map<std::string, std::string>& builtin_prompt_table();
}

namespace {

bool is_ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

// Asset files end with a newline; templates are used without it.
std::string strip_trailing_newline(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

}  // namespace

std::string render_template(std::string_view tmpl, const PromptVars& vars) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t j = i + 1;
      while (j < tmpl.size() && is_ident_char(tmpl[j])) ++j;
      if (j < tmpl.size() && tmpl[j] == '}' && j > i + 1) {
        if (auto it = vars.find(tmpl.substr(i + 1, j - i - 1)); it != vars.end()) {
          out += it->second;
          i = j + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

PromptLibrary PromptLibrary::builtin() {
  PromptLibrary lib;
  for (const auto& [k, v] : detail::builtin_prompt_table()) lib.templates_.emplace(k, strip_trailing_newline(v));
  return lib;
}

PromptLibrary PromptLibrary::with_overrides(const std::filesystem::path& dir) {
  PromptLibrary lib = builtin();
  if (dir.empty()) return lib;
  if (!std::filesystem::is_directory(dir)) throw IoError("prompt directory not found: " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::string key = entry.path().filename().string();
    key.resize(key.size() - 4);
    lib.templates_[key] = strip_trailing_newline(read_text(entry.path()));
  }
  return lib;
}

const std::string& PromptLibrary::get(std::string_view key) const {
  auto it = templates_.find(key);
  if (it == templates_.end()) throw Error("unknown prompt template: " + std::string(key));
  return it->second;
}

std::string PromptLibrary::render(std::string_view key, const PromptVars& vars) const {
  return render_template(get(key), vars);
}

}  // namespace embgen
