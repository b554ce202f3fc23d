#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace codekg::text {

bool is_space(char c);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// Splits on runs of ASCII whitespace; never yields empty pieces.
std::vector<std::string> split_whitespace(std::string_view s);

// Collapses whitespace runs to one space and trims the ends.
std::string collapse_whitespace(std::string_view s);

// Lowercased, whitespace-collapsed form; the canonical identity of entity and
// relation strings.
std::string normalize(std::string_view s);

// Drops a leading "a", "an" or "the" word from an already normalized string.
std::string strip_leading_article(std::string_view normalized);

// Removes leading/trailing characters that are neither alphanumeric nor part of
// a multibyte UTF-8 sequence.
std::string_view strip_edge_punctuation(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

bool starts_with_ci(std::string_view s, std::string_view prefix);
bool ends_with_ci(std::string_view s, std::string_view suffix);

std::string sha256_hex(std::string_view data);

// Reads a whole file; throws IoError when it cannot be opened.
std::string read_file(const std::string& path);

// Writes through a sibling temp file and renames it into place, so readers
// never observe a partially written file.
void write_file_atomic(const std::string& path, std::string_view content);

// Lines of a text file with "#" comments and blank lines removed.
std::vector<std::string> parse_word_list(std::string_view content);

std::string format_double(double v, int precision = 6);

}  // namespace codekg::text
