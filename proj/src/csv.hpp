// Minimal delimited-text helpers shared by the record and report writers.

#pragma once

#include <optional>
#include <string>
#include <vector>

namespace crowd::csv {

/// Splits one line on commas; double quotes group a field and "" escapes a
/// quote. Returns nullopt when a quoted field is left open.
std::optional<std::vector<std::string>> split(const std::string& line);

/// Quotes `s` only when it contains a comma, quote or line break.
std::string quote(const std::string& s);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_number(double v);

}  // namespace crowd::csv
