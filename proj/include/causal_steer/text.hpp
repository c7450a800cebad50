#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace causal_steer::text {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

/// Lowercased alphanumeric word tokens. Apostrophes are dropped before
/// splitting so "doesn't" yields "doesnt".
std::vector<std::string> words(std::string_view s);

bool contains_ci(std::string_view haystack, std::string_view needle);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Substitutes `{name}` slots in one left-to-right pass. Substituted values are
/// never re-scanned, and braces that do not name a known slot are kept as-is.
std::string fill_slots(std::string_view tmpl,
                       const std::map<std::string, std::string>& slots);

/// "a", "a or b", "a, b, or c".
std::string disjunction(const std::vector<std::string>& items);

}  // namespace causal_steer::text
