#pragma once

#include <nlohmann/json.hpp>

#include <string>

namespace responsivity {

std::string read_text_file(const std::string& path);

// Writes through a temporary sibling and renames, so readers never observe a
// partially written file.
void write_text_file(const std::string& path, const std::string& content);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& doc);

} // namespace responsivity
