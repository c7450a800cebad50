#pragma once

#include <optional>
#include <string_view>

namespace causal_steer {

/// Text resources compiled in from resources/ (templates, default graph,
/// mock tables). Keys are paths relative to that directory.
std::optional<std::string_view> embedded_resource(std::string_view key);

}  // namespace causal_steer
