#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace responsivity::detail {

// Quotes a field only when it needs it.
std::string csv_field(std::string_view text);
// Shortest round-trip decimal form.
std::string csv_number(double value);
// RFC 4180-ish reader; blank lines are skipped. Throws Error(parse) on an
// unterminated quote.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

} // namespace responsivity::detail
