#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "codekg/error.hpp"

namespace codekg {

enum class Source { pubmed, rebel, webnlg, wikinre, carb, local };

std::string_view to_string(Source s);
Source parse_source(std::string_view s);  // throws SchemaError

struct Abstract {
  std::string id;
  std::string text;
  Source source = Source::local;

  bool operator==(const Abstract&) const = default;
};

// Abstracts in load order; ids are unique.
using Corpus = std::vector<Abstract>;

struct Token {
  std::string surface;
  int index = 0;

  bool operator==(const Token&) const = default;
};

// The coordinate system used by coreference annotations: token i is the i-th
// whitespace-delimited piece of the abstract, punctuation attached.
struct TokenizedAbstract {
  std::string abstract_id;
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  std::string joined() const;
};

// Whitespace split with punctuation left attached ("(PBC)." is one token).
// Throws EmptyInput when the text is blank.
std::vector<Token> tokenize(std::string_view text);
TokenizedAbstract tokenize(const Abstract& abstract);

// Renders tokens the way the coreference prompts expect them:
// ("BACKGROUND:", 0), ("There", 1), ...
std::string format_token_list(const TokenizedAbstract& abstract);

enum class Origin { original, coref_resolved, simplified };

std::string_view to_string(Origin o);
Origin parse_origin(std::string_view s);

struct SentenceRecord {
  std::string abstract_id;
  int sentence_index = 0;
  std::string text;
  Origin origin = Origin::original;
  // For simplified sentences: index of the sentence they were derived from.
  int source_sentence_index = -1;

  bool operator==(const SentenceRecord&) const = default;
};

// Stable reference to one sentence, e.g. "pmid123/coref_resolved/4".
std::string sentence_ref(const SentenceRecord& s);

struct SentenceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

// Heuristic splitter: a sentence ends at '.', '!' or '?' (plus any closing
// quotes or brackets) followed by whitespace and an uppercase letter or digit,
// unless the period closes a protected abbreviation.
class SentenceSplitter {
 public:
  explicit SentenceSplitter(std::vector<std::string> abbreviations);

  // Uses the shipped data/abbreviations.txt list.
  static const SentenceSplitter& standard();

  // Byte ranges of each sentence; the gaps between ranges are the original
  // separators, so the input can be rebuilt exactly.
  std::vector<SentenceSpan> spans(std::string_view text) const;
  std::vector<std::string> split(std::string_view text) const;

  const std::vector<std::string>& abbreviations() const { return abbreviations_; }

 private:
  bool protected_period(std::string_view text, std::size_t period) const;

  std::vector<std::string> abbreviations_;
};

std::vector<std::string> split_sentences(std::string_view text);

// Sentence records for one abstract, indexed from 0.
std::vector<SentenceRecord> sentences_of(const Abstract& abstract, Origin origin);

enum class CorpusFormat { jsonl, plain_dir };

// One Abstract per JSONL record ({id, text, source}) or per *.txt file in a
// directory (file stem as id, files taken in name order).
// Throws ParseError with the offending line, DuplicateId, or IoError.
Corpus load_corpus(const std::string& path, CorpusFormat format);
Corpus parse_corpus_jsonl(std::string_view content);
std::string corpus_to_jsonl(const Corpus& corpus);
void write_corpus(const std::string& path, const Corpus& corpus);

// Content hash of a corpus, independent of the file it came from.
std::string corpus_hash(const Corpus& corpus);

namespace detail {
// Unbiased draw in [0, bound) from a 64-bit engine. Avoids
// std::uniform_int_distribution, whose output differs between standard
// libraries, so seeded samples are reproducible everywhere.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound);
}  // namespace detail

// Uniform sample without replacement via a partial Fisher-Yates shuffle.
// Deterministic for a given seed; the result is in sampled order.
template <typename T>
std::vector<T> uniform_sample(std::span<const T> items, std::size_t size, std::uint64_t seed) {
  if (size > items.size()) throw SampleTooLarge(size, items.size());
  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::vector<T> out;
  out.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    std::size_t j = i + static_cast<std::size_t>(detail::bounded_draw(rng, order.size() - i));
    std::swap(order[i], order[j]);
    out.push_back(items[order[i]]);
  }
  return out;
}

template <typename T>
std::vector<T> uniform_sample(const std::vector<T>& items, std::size_t size, std::uint64_t seed) {
  return uniform_sample(std::span<const T>(items), size, seed);
}

}  // namespace codekg
