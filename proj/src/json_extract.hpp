#pragma once

#include <nlohmann/json.hpp>

#include <string_view>

namespace responsivity::detail {

// Parses the first balanced {...} object found in free text. Trailing commas
// before a closing bracket are tolerated. Throws Error(parse) when no object
// can be recovered.
nlohmann::json extract_json_object(std::string_view text);

} // namespace responsivity::detail
