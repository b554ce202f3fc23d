#pragma once

#include <optional>
#include <string_view>

#include <json.hpp>

namespace codekg {

// First well-formed JSON array in free text whose elements are all objects
// (an empty array qualifies). Raw line breaks inside string literals, which
// models emit when they wrap long values, are read as spaces.
std::optional<nlohmann::json> first_object_array(std::string_view raw);

}  // namespace codekg
