#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "embgen/jsonio.hpp"

namespace embgen {

/// Response schemas the teacher and judge are asked to produce.
enum class PayloadKind { Entities, Pattern, ConsolidationAction, QaArray, JudgeVerdict };

std::string_view to_string(PayloadKind kind);

struct ParsedPayload {
  json value;
  /// Array entries removed because a required key was missing or empty.
  std::size_t dropped = 0;
  std::vector<std::string> drop_reasons;
};

/// Strips code fences and surrounding prose, parses the JSON value, and
/// validates required keys for `kind`. For array payloads (entities,
/// qa-array) invalid entries are dropped individually; if every entry is
/// invalid the whole payload is rejected with the first entry's reason
/// (e.g. "missing key: answer"). Throws SchemaError.
ParsedPayload parse_json_payload(std::string_view text, PayloadKind kind);

/// The JSON text `parse_json_payload` would try to parse, or empty if no
/// JSON-looking region exists.
std::string extract_json_region(std::string_view text, char preferred_open);

}  // namespace embgen
