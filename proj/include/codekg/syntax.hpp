#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "codekg/backend.hpp"
#include "codekg/corpus.hpp"
#include "codekg/metrics.hpp"

namespace codekg {

enum class SentenceLabel { simp, comx, comp, comx_comp, incomp };

inline constexpr SentenceLabel kAllLabels[] = {SentenceLabel::simp, SentenceLabel::comx,
                                               SentenceLabel::comp, SentenceLabel::comx_comp,
                                               SentenceLabel::incomp};

std::string_view to_string(SentenceLabel l);
// "simple", "complex", "compound", "compound-complex", "incomplete".
std::string_view long_name(SentenceLabel l);
// Accepts short and long names (and "compound_complex"). Throws SchemaError.
SentenceLabel parse_label(std::string_view s);

enum class ClauseKind { independent, dependent };

struct ClauseSpan {
  ClauseKind kind = ClauseKind::independent;
  std::size_t begin = 0;  // token range [begin, end) into ClauseAnalysis::tokens
  std::size_t end = 0;
};

struct ClauseAnalysis {
  int independent_clauses = 0;
  int dependent_clauses = 0;
  int coordinators_between_ics = 0;
  std::vector<ClauseSpan> spans;
  // The analyser's own tokenization: words with edge punctuation split off.
  std::vector<std::string> tokens;
};

// Word lists driving the clause heuristic; the shipped ones live in
// data/lexicon/.
struct Lexicon {
  std::set<std::string> coordinators;
  std::set<std::string> comma_only_coordinators;
  std::set<std::string> subordinators;
  std::set<std::string> reduced_subordinators;
  std::set<std::string> relative_pronouns;
  std::set<std::string> auxiliaries;
  std::set<std::string> determiners;
  std::set<std::string> prepositions;
  std::set<std::string> subject_pronouns;
  std::set<std::string> irregular_past;
  std::set<std::string> verbs;

  static const Lexicon& standard();
};

// Deterministic clause analysis. The sentence is cut into segments at commas,
// semicolons, colons and before coordinators, subordinators and relative
// pronouns. A segment with a subject and a finite verb and no subordinating
// opener is an independent clause; a subordinator or relative opener with a
// finite verb (or, for the "reduced" subordinators, a participle) makes a
// dependent clause. Segments without a finite verb attach to the clause
// before them, so coordinated noun phrases never count as clauses.
// Throws PreconditionError for a blank sentence.
ClauseAnalysis analyze_clauses(std::string_view sentence, const Lexicon& lexicon = Lexicon::standard());

// IC=0 -> incomp; IC=1,DC=0 -> simp; IC=1,DC>=1 -> comx; IC>=2,DC=0 -> comp;
// IC>=2,DC>=1 -> comx_comp.
SentenceLabel classify(const ClauseAnalysis& analysis);
SentenceLabel classify_counts(int independent_clauses, int dependent_clauses);

struct Classification {
  SentenceLabel label = SentenceLabel::incomp;
  // Set when a backend answer could not be parsed and the fallback was used.
  bool flagged = false;
  std::string diagnostic;
};

struct GoldSentence {
  std::string text;
  SentenceLabel label = SentenceLabel::incomp;
};

class SentenceClassifier {
 public:
  virtual ~SentenceClassifier() = default;
  virtual std::string name() const = 0;
  // Optional training step; the rule and constant classifiers ignore it.
  virtual void fit(const std::vector<GoldSentence>& /*train*/) {}
  virtual Classification classify(const std::string& sentence) = 0;
};

class RuleClassifier : public SentenceClassifier {
 public:
  explicit RuleClassifier(const Lexicon& lexicon = Lexicon::standard()) : lexicon_(&lexicon) {}
  std::string name() const override { return "rule"; }
  Classification classify(const std::string& sentence) override;

 private:
  const Lexicon* lexicon_;
};

class ConstantClassifier : public SentenceClassifier {
 public:
  explicit ConstantClassifier(SentenceLabel label) : label_(label) {}
  std::string name() const override { return "constant:" + std::string(to_string(label_)); }
  Classification classify(const std::string&) override { return {label_, false, ""}; }

 private:
  SentenceLabel label_;
};

// First category named in a model answer. A "Category:" line wins when
// present; longer names are tried before their prefixes so "compound-complex"
// is not read as "compound".
std::optional<SentenceLabel> parse_label_response(std::string_view response);

// Prompts a backend with a classify template. fit() turns the training split
// into the few-shot pool filling the {examples} slot.
class BackendClassifier : public SentenceClassifier {
 public:
  BackendClassifier(PromptStrategy strategy, ModelBackend& backend, Generator& generator,
                    std::size_t examples_per_class = 2);

  std::string name() const override;
  void fit(const std::vector<GoldSentence>& train) override;
  Classification classify(const std::string& sentence) override;
  const std::string& examples() const { return examples_; }

 private:
  PromptStrategy strategy_;
  ModelBackend* backend_;
  Generator* generator_;
  std::size_t examples_per_class_;
  std::string examples_;
};

// The few-shot block used by BackendClassifier: up to k sentences per class
// in label order, each as `Sentence: "..."` followed by `Category: <name>`.
std::string format_examples(const std::vector<GoldSentence>& pool, std::size_t per_class);

struct ClassifierReport {
  std::size_t total = 0;
  double accuracy = 0;
  double macro_f1 = 0;
  // Only classes present in the gold labels.
  std::map<SentenceLabel, PRF> per_class;
  // confusion[gold][predicted], indexed by SentenceLabel.
  std::array<std::array<std::size_t, 5>, 5> confusion{};
  std::size_t flagged = 0;
};

ClassifierReport report_from_pairs(
    const std::vector<std::pair<SentenceLabel, SentenceLabel>>& gold_and_predicted);
ClassifierReport evaluate_classifier(SentenceClassifier& classifier,
                                     const std::vector<GoldSentence>& labeled);

std::string confusion_csv(const ClassifierReport& report);
std::string classifier_report_csv(const ClassifierReport& report);

struct SplitSpec {
  double train_fraction = 0.8;
  double val_fraction = 0.2;
  std::uint64_t seed = 13;
};

struct DatasetSplit {
  std::vector<GoldSentence> train;
  std::vector<GoldSentence> val;
};

// Seeded shuffle, then the first train_fraction for training and the next
// val_fraction for validation.
DatasetSplit split_dataset(const std::vector<GoldSentence>& dataset, const SplitSpec& spec);

struct ClassifierRow {
  std::string name;
  double accuracy = 0;
  double macro_f1 = 0;
};

struct ClassifierSelection {
  std::string best;
  std::size_t best_index = 0;
  std::vector<ClassifierRow> table;
};

// Fits each candidate on the train split and keeps the best validation
// macro-F1; ties go to the lexicographically smallest name.
ClassifierSelection select_classifier(const std::vector<SentenceClassifier*>& candidates,
                                      const std::vector<GoldSentence>& dataset,
                                      const SplitSpec& split);

std::string classifier_table_csv(const std::vector<ClassifierRow>& table);

enum class LabelSource { rule, backend, gold };
std::string_view to_string(LabelSource s);
LabelSource parse_label_source(std::string_view s);

struct LabeledSentence {
  SentenceRecord sentence;
  SentenceLabel label = SentenceLabel::incomp;
  LabelSource source = LabelSource::rule;
  bool flagged = false;

  bool operator==(const LabeledSentence&) const = default;
};

// Splits every abstract into sentences and labels each one.
std::vector<LabeledSentence> label_corpus(SentenceClassifier& classifier, const Corpus& abstracts,
                                          Origin origin = Origin::coref_resolved,
                                          LabelSource source = LabelSource::rule, int jobs = 1);

// Labeled sentence JSONL: {abstract_id, sentence_index, origin, text, label,
// source, flagged}.
std::string labeled_jsonl(const std::vector<LabeledSentence>& labeled);
std::vector<LabeledSentence> parse_labeled_jsonl(std::string_view content);

// Gold classification data as JSONL {text, label} or CSV with text and label
// columns (header required).
std::vector<GoldSentence> parse_gold_sentences(std::string_view content);
std::vector<GoldSentence> load_gold_sentences(const std::string& path);

}  // namespace codekg
