#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace codekg::assets {

// Shipped data files (prompt templates, lexicons, abbreviation list) are
// compiled into the library from assets/ and data/. Setting CODEKG_ASSET_DIR
// makes lookups read `<dir>/<path>` from disk first, so users can edit them
// without rebuilding.
//
// Paths are relative, e.g. "prompts/coref/COT_FICL.txt" or
// "data/abbreviations.txt". Throws IoError if the asset does not exist.
std::string load(std::string_view path);

bool exists(std::string_view path);

// All embedded asset paths, sorted.
std::vector<std::string> list();

}  // namespace codekg::assets
