#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace embgen {

namespace prompt_keys {
inline constexpr std::string_view kBase = "base_prompt";
inline constexpr std::string_view kExtractionSystem = "entity_extraction.system";
inline constexpr std::string_view kExtractionUser = "entity_extraction.user";
inline constexpr std::string_view kConsolidationSystem = "entity_consolidation.system";
inline constexpr std::string_view kConsolidationUser = "entity_consolidation.user";
inline constexpr std::string_view kContradictionSystem = "contradiction_resolution.system";
inline constexpr std::string_view kContradictionUser = "contradiction_resolution.user";
inline constexpr std::string_view kPatternSystem = "pattern_extraction.system";
inline constexpr std::string_view kPatternUser = "pattern_extraction.user";
inline constexpr std::string_view kPatternMergeSystem = "pattern_consolidation.system";
inline constexpr std::string_view kPatternMergeUser = "pattern_consolidation.user";
inline constexpr std::string_view kSpecializeSystem = "prompt_specialization.system";
inline constexpr std::string_view kSpecializeUser = "prompt_specialization.user";
inline constexpr std::string_view kProximitySystem = "proximity_qa.system";
inline constexpr std::string_view kProximityUser = "proximity_qa.user";
inline constexpr std::string_view kSingleSystem = "single_entity_qa.system";
inline constexpr std::string_view kSingleUser = "single_entity_qa.user";
inline constexpr std::string_view kMultiSystem = "multi_group_qa.system";
inline constexpr std::string_view kMultiUser = "multi_group_qa.user";
inline constexpr std::string_view kVarietyFraming = "multi_group_framing.variety";
inline constexpr std::string_view kDiversityFraming = "multi_group_framing.diversity";
inline constexpr std::string_view kVarietySynthesis = "multi_group_synthesis.variety";
inline constexpr std::string_view kDiversitySynthesis = "multi_group_synthesis.diversity";
inline constexpr std::string_view kJudgeSystem = "judge.system";
inline constexpr std::string_view kJudgeUser = "judge.user";
}  // namespace prompt_keys

using PromptVars = std::map<std::string, std::string, std::less<>>;

/// Replaces every `{name}` whose name is a key of `vars`. Other brace runs
/// (JSON examples inside prompts) pass through untouched. Substituted text is
/// not rescanned.
std::string render_template(std::string_view tmpl, const PromptVars& vars);

/// The prompt templates, keyed by asset file stem (e.g. "judge.system").
/// Templates are compiled in from assets/prompts; a directory overlay can
/// replace individual files.
class PromptLibrary {
 public:
  static PromptLibrary builtin();
  /// Builtins overlaid with every `<key>.txt` found in `dir`.
  static PromptLibrary with_overrides(const std::filesystem::path& dir);

  const std::string& get(std::string_view key) const;
  std::string render(std::string_view key, const PromptVars& vars) const;
  const std::map<std::string, std::string, std::less<>>& all() const { return templates_; }

 private:
  std::map<std::string, std::string, std::less<>> templates_;
};

}  // namespace embgen
