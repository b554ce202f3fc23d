#include "codekg/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "codekg/assets.hpp"
#include "codekg/text.hpp"

namespace codekg {

using nlohmann::json;

std::string_view to_string(Source s) {
  switch (s) {
    case Source::pubmed: return "pubmed";
    case Source::rebel: return "rebel";
    case Source::webnlg: return "webnlg";
    case Source::wikinre: return "wikinre";
    case Source::carb: return "carb";
    case Source::local: return "local";
  }
  return "local";
}

Source parse_source(std::string_view s) {
  for (Source v : {Source::pubmed, Source::rebel, Source::webnlg, Source::wikinre, Source::carb,
                   Source::local}) {
    if (to_string(v) == s) return v;
  }
  throw SchemaError("unknown source: " + std::string(s));
}

std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::original: return "original";
    case Origin::coref_resolved: return "coref_resolved";
    case Origin::simplified: return "simplified";
  }
  return "original";
}

Origin parse_origin(std::string_view s) {
  for (Origin v : {Origin::original, Origin::coref_resolved, Origin::simplified}) {
    if (to_string(v) == s) return v;
  }
  throw SchemaError("unknown sentence origin: " + std::string(s));
}

std::string TokenizedAbstract::joined() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i].surface;
  }
  return out;
}

std::vector<Token> tokenize(std::string_view text) {
  auto pieces = text::split_whitespace(text);
  if (pieces.empty()) throw EmptyInput();
  std::vector<Token> out;
  out.reserve(pieces.size());
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    out.push_back(Token{std::move(pieces[i]), static_cast<int>(i)});
  }
  return out;
}

TokenizedAbstract tokenize(const Abstract& abstract) {
  return TokenizedAbstract{abstract.id, tokenize(abstract.text)};
}

std::string format_token_list(const TokenizedAbstract& abstract) {
  std::string out;
  for (std::size_t i = 0; i < abstract.tokens.size(); ++i) {
    if (i) out += ", ";
    out += "(";
    // json::dump gives a correctly escaped double-quoted string literal.
    out += json(abstract.tokens[i].surface).dump();
    out += ", ";
    out += std::to_string(abstract.tokens[i].index);
    out += ")";
  }
  return out;
}

std::string sentence_ref(const SentenceRecord& s) {
  return s.abstract_id + "/" + std::string(to_string(s.origin)) + "/" +
         std::to_string(s.sentence_index);
}

// ---------------------------------------------------------------------------
// Sentence splitting

SentenceSplitter::SentenceSplitter(std::vector<std::string> abbreviations)
    : abbreviations_(std::move(abbreviations)) {}

const SentenceSplitter& SentenceSplitter::standard() {
  static const SentenceSplitter splitter(
      text::parse_word_list(assets::load("data/abbreviations.txt")));
  return splitter;
}

bool SentenceSplitter::protected_period(std::string_view text, std::size_t period) const {
  std::string_view head = text.substr(0, period + 1);
  for (const auto& abbr : abbreviations_) {
    if (!text::ends_with_ci(head, abbr)) continue;
    std::size_t start = head.size() - abbr.size();
    if (start == 0 || text::is_space(head[start - 1]) || head[start - 1] == '(') return true;
  }
  return false;
}

namespace {
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }
bool is_opener(char c) { return c == '"' || c == '\'' || c == '(' || c == '['; }
bool starts_sentence(std::string_view text, std::size_t k) {
  if (k >= text.size()) return false;
  auto c = static_cast<unsigned char>(text[k]);
  if (std::isupper(c) || std::isdigit(c)) return true;
  if (is_opener(text[k]) && k + 1 < text.size()) {
    auto d = static_cast<unsigned char>(text[k + 1]);
    return std::isupper(d) || std::isdigit(d);
  }
  // UTF-8 curly opening quotes (U+201C, U+2018).
  if (text.substr(k, 3) == "\xE2\x80\x9C" || text.substr(k, 3) == "\xE2\x80\x98") {
    return k + 3 < text.size() && (std::isupper(static_cast<unsigned char>(text[k + 3])) ||
                                   std::isdigit(static_cast<unsigned char>(text[k + 3])));
  }
  return false;
}
std::size_t skip_closers(std::string_view text, std::size_t j) {
  while (j < text.size()) {
    if (is_closer(text[j])) {
      ++j;
    } else if (text.substr(j, 3) == "\xE2\x80\x9D" || text.substr(j, 3) == "\xE2\x80\x99") {
      j += 3;
    } else {
      break;
    }
  }
  return j;
}
}  // namespace

std::vector<SentenceSpan> SentenceSplitter::spans(std::string_view text) const {
  std::vector<SentenceSpan> out;
  std::size_t start = 0;
  while (start < text.size() && text::is_space(text[start])) ++start;
  if (start == text.size()) return out;

  for (std::size_t i = start; i < text.size(); ++i) {
    char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t j = skip_closers(text, i + 1);
    if (j >= text.size() || !text::is_space(text[j])) continue;
    std::size_t k = j;
    while (k < text.size() && text::is_space(text[k])) ++k;
    if (!starts_sentence(text, k)) continue;
    if (c == '.' && protected_period(text, i)) continue;
    out.push_back({start, j});
    start = k;
    i = k - 1;
  }
  std::size_t end = text.size();
  while (end > start && text::is_space(text[end - 1])) --end;
  if (end > start) out.push_back({start, end});
  return out;
}

std::vector<std::string> SentenceSplitter::split(std::string_view text) const {
  std::vector<std::string> out;
  for (const auto& s : spans(text)) out.emplace_back(text.substr(s.begin, s.end - s.begin));
  return out;
}

std::vector<std::string> split_sentences(std::string_view text) {
  return SentenceSplitter::standard().split(text);
}

std::vector<SentenceRecord> sentences_of(const Abstract& abstract, Origin origin) {
  std::vector<SentenceRecord> out;
  int index = 0;
  for (auto& s : split_sentences(abstract.text)) {
    out.push_back(SentenceRecord{abstract.id, index++, std::move(s), origin, -1});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Corpus files

Corpus parse_corpus_jsonl(std::string_view content) {
  Corpus corpus;
  std::set<std::string> seen;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line_no);
    }
    if (!record.is_object()) throw ParseError("record is not an object", line_no);
    if (!record.contains("id") || !record["id"].is_string()) {
      throw ParseError("record missing string field \"id\"", line_no);
    }
    if (!record.contains("text") || !record["text"].is_string()) {
      throw ParseError("record missing string field \"text\"", line_no);
    }
    Abstract a;
    a.id = record["id"].get<std::string>();
    a.text = record["text"].get<std::string>();
    if (text::trim(a.text).empty()) throw ParseError("record has blank \"text\"", line_no);
    if (record.contains("source")) {
      if (!record["source"].is_string()) throw ParseError("\"source\" is not a string", line_no);
      try {
        a.source = parse_source(record["source"].get<std::string>());
      } catch (const SchemaError& e) {
        throw ParseError(e.what(), line_no);
      }
    }
    if (!seen.insert(a.id).second) throw DuplicateId(a.id);
    corpus.push_back(std::move(a));
  }
  return corpus;
}

Corpus load_corpus(const std::string& path, CorpusFormat format) {
  namespace fs = std::filesystem;
  if (format == CorpusFormat::jsonl) return parse_corpus_jsonl(text::read_file(path));

  if (!fs::is_directory(path)) throw IoError("not a directory: " + path);
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  Corpus corpus;
  std::set<std::string> seen;
  for (const auto& f : files) {
    Abstract a{f.stem().string(), text::read_file(f.string()), Source::local};
    if (text::trim(a.text).empty()) throw ParseError("blank file " + f.string(), 1);
    if (!seen.insert(a.id).second) throw DuplicateId(a.id);
    corpus.push_back(std::move(a));
  }
  return corpus;
}

std::string corpus_to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& a : corpus) {
    json j = {{"id", a.id}, {"text", a.text}, {"source", std::string(to_string(a.source))}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_corpus(const std::string& path, const Corpus& corpus) {
  text::write_file_atomic(path, corpus_to_jsonl(corpus));
}

std::string corpus_hash(const Corpus& corpus) { return text::sha256_hex(corpus_to_jsonl(corpus)); }

namespace detail {
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound <= 1) return 0;
  // Rejection sampling on the largest multiple of bound below 2^64.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              (std::numeric_limits<std::uint64_t>::max() % bound);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}
}  // namespace detail

}  // namespace codekg
