#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace codekg::csv {

// Quotes a field when it holds a comma, quote or line break.
std::string escape(std::string_view field);
std::string row(const std::vector<std::string>& fields);

// RFC 4180 reader: quoted fields may contain commas, doubled quotes and line
// breaks. Throws ParseError on an unterminated quote.
std::vector<std::vector<std::string>> parse(std::string_view content);

}  // namespace codekg::csv
