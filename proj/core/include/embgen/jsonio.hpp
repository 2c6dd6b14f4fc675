#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace embgen {

using json = nlohmann::json;

/// Reads one JSON value per non-empty line. Throws IoError naming the line
/// number of the first malformed record.
std::vector<json> read_jsonl(const std::filesystem::path& path);

/// Writes through a temporary file and renames, so a crash never leaves a
/// half-written artifact behind.
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& records);
void write_json(const std::filesystem::path& path, const json& value);
json read_json(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& content);
std::string read_text(const std::filesystem::path& path);

/// Lowercase hex SHA-256 of `data`.
std::string sha256_hex(const std::string& data);

}  // namespace embgen
