#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "codekg/assignment.hpp"
#include "codekg/backend.hpp"
#include "codekg/corpus.hpp"
#include "codekg/prompts.hpp"
#include "codekg/similarity.hpp"
#include "codekg/syntax.hpp"

namespace codekg {

// Categories that get decomposed into simple sentences.
inline constexpr SentenceLabel kDecomposable[] = {SentenceLabel::comx, SentenceLabel::comp,
                                                  SentenceLabel::comx_comp};

bool decomposable(SentenceLabel label);

// Prompt task for a category. Throws PreconditionError for simp and incomp.
Task simplify_task(SentenceLabel category);

// Appends '.' when the sentence lacks terminal punctuation; a trailing ',' or
// ';' becomes '.'.
std::string ensure_terminal(std::string_view sentence);

struct ParsedDecomposition {
  std::vector<std::string> outputs;
  // True when the response had no "S<k>" or numbered lines and was taken as a
  // single verbatim sentence.
  bool verbatim = false;
  std::string diagnostic;
};

// Reads "S<k> → text" lines ("->", ":" and bullets tolerated) or "1." / "1)"
// numbered lines, ordered by k; a repeated k keeps its first line. A response
// with no marked lines and a single non-empty line is one verbatim output.
ParsedDecomposition parse_decomposition(std::string_view response);

// "S1 → text" lines, the inverse of parse_decomposition.
std::string format_decomposition(const std::vector<std::string>& outputs);

struct Decomposition {
  SentenceRecord source;
  SentenceLabel category = SentenceLabel::comx;
  std::vector<std::string> outputs;
  bool verbatim = false;
  std::string diagnostic;
};

Decomposition decompose(const SentenceRecord& source, SentenceLabel category, Strategy strategy,
                        ModelBackend& backend, Generator& generator);
Decomposition decompose(const std::string& sentence, SentenceLabel category, Strategy strategy,
                        ModelBackend& backend, Generator& generator);

struct ConversionItem {
  double match_fraction = 0;
  bool exact = false;
  int count_error = 0;  // |pred| - |gold|
  std::vector<ScoredPair> matches;  // row = pred index, col = gold index
};

struct ConversionScore {
  double macro_avg = 0;
  double exact_match = 0;
  double rmse = 0;
  std::size_t items = 0;
};

// Greedy one-to-one matching of predicted to gold sentences by descending
// similarity; pairs below the threshold never match. Throws PreconditionError
// when gold is empty.
ConversionItem score_conversion(const std::vector<std::string>& pred,
                                const std::vector<std::string>& gold, const Similarity& similarity);

// Throws EmptyBatch on an empty list.
ConversionScore aggregate_conversion(const std::vector<ConversionItem>& items);

struct GoldConversion {
  std::string text;
  SentenceLabel category = SentenceLabel::comx;
  std::vector<std::string> gold;
};

// JSONL {text, category, gold: [...]}.
std::vector<GoldConversion> parse_conversion_jsonl(std::string_view content);
std::vector<GoldConversion> load_conversion_jsonl(const std::string& path);
std::string conversion_jsonl(const std::vector<GoldConversion>& items);

enum class SelectionMetric { macro_avg, exact_match };

std::string_view to_string(SelectionMetric m);
SelectionMetric parse_selection_metric(std::string_view s);

struct SimplifierCell {
  std::string strategy;
  std::string model;
  ConversionScore score;
  std::size_t unparsable = 0;
  bool failed = false;
  std::string error;
};

struct CategorySelection {
  SentenceLabel category = SentenceLabel::comx;
  std::string strategy;
  std::string model;
  std::vector<SimplifierCell> table;  // strategies-major
};

// Evaluates every (strategy, backend) cell for each category on that
// category's gold items and keeps the argmax of the selection metric, ties
// going to the lexicographically first (strategy, model). Cells whose backend
// fails score 0 and are flagged. Throws PreconditionError when a requested
// category has no gold items.
std::map<SentenceLabel, CategorySelection> select_simplifier(
    const std::vector<SentenceLabel>& categories, const std::vector<Strategy>& strategies,
    const std::vector<ModelBackend*>& backends, const std::vector<GoldConversion>& gold,
    Generator& generator, const Similarity& similarity,
    SelectionMetric metric = SelectionMetric::macro_avg, int jobs = 1);

// strategy,model,macro_avg,exact_match,rmse,flag
std::string simplifier_table_csv(const std::vector<SimplifierCell>& table);

// One row per strategy, one column per model, macro_avg values.
std::string strategy_comparison_csv(const std::vector<SimplifierCell>& table);

struct SimplifierConfig {
  Strategy strategy = Strategy::COT_FICL;
  ModelBackend* backend = nullptr;
};

struct SimplifyResult {
  // Simplified sentences. sentence_index counts per abstract from 0;
  // source_sentence_index points at the decomposed sentence.
  std::vector<SentenceRecord> simplified;
  std::vector<Decomposition> decompositions;
  std::vector<std::string> failures;  // "<sentence ref>: <message>"
};

// Decomposes every comx/comp/comx_comp sentence. Per-sentence backend
// failures are recorded and skipped. Throws ConfigError unless every
// decomposable category has a configured backend.
SimplifyResult simplify_corpus(const std::vector<LabeledSentence>& labeled,
                               const std::map<SentenceLabel, SimplifierConfig>& configs,
                               Generator& generator, int jobs = 1);

// JSONL of simplified records: {abstract_id, sentence_index, origin, text,
// source_sentence_index}.
std::string sentence_records_jsonl(const std::vector<SentenceRecord>& records);
std::vector<SentenceRecord> parse_sentence_records_jsonl(std::string_view content);

// Share of outputs that re-analyze as IC=1, DC=0.
double simple_output_rate(const std::vector<std::string>& outputs,
                          const Lexicon& lexicon = Lexicon::standard());

}  // namespace codekg
