#include "codekg/json_extract.hpp"

namespace codekg {

namespace {

// Index one past the bracket closing raw[open], honouring string literals, or
// npos. Line breaks inside strings are copied to `out` as spaces.
std::size_t balanced_end(std::string_view raw, std::size_t open, std::string& out) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  out.clear();
  for (std::size_t i = open; i < raw.size(); ++i) {
    char c = raw[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      } else if (c == '\n' || c == '\r' || c == '\t') {
        c = ' ';
      }
      out += c;
      continue;
    }
    out += c;
    if (c == '"') {
      in_string = true;
    } else if (c == '[' || c == '{') {
      ++depth;
    } else if (c == ']' || c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

}  // namespace

std::optional<nlohmann::json> first_object_array(std::string_view raw) {
  std::string candidate;
  for (std::size_t pos = raw.find('['); pos != std::string_view::npos;
       pos = raw.find('[', pos + 1)) {
    if (balanced_end(raw, pos, candidate) == std::string_view::npos) continue;
    auto doc = nlohmann::json::parse(candidate, nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) continue;
    bool all_objects = true;
    for (const auto& el : doc) all_objects = all_objects && el.is_object();
    if (all_objects) return doc;
  }
  return std::nullopt;
}

}  // namespace codekg
