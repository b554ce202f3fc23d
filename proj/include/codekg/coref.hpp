#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "codekg/backend.hpp"
#include "codekg/corpus.hpp"
#include "codekg/metrics.hpp"
#include "codekg/similarity.hpp"

namespace codekg {

struct CorefAnnotation {
  std::string expression;
  int start_token = 0;
  int end_token = 0;
  std::string refers_to;

  bool operator==(const CorefAnnotation&) const = default;
};

struct AnnotationSet {
  std::string abstract_id;
  std::vector<CorefAnnotation> annotations;
  // Human id, or "model:<name>/<strategy>" for generated sets.
  std::string annotator;

  bool operator==(const AnnotationSet&) const = default;
};

// Gold sets keyed by abstract id; the abstracts themselves come from a corpus.
struct GoldCorpus {
  std::map<std::string, AnnotationSet> annotations;

  std::size_t size() const { return annotations.size(); }
  bool empty() const { return annotations.empty(); }
};

// Checks the span and expression invariants against the abstract. The
// expression is compared to the covered tokens case-insensitively after
// trimming edge punctuation, so "PBC" is a valid surface for "(PBC).".
bool valid_annotation(const CorefAnnotation& a, const TokenizedAbstract& abstract);

struct ParsedAnnotations {
  AnnotationSet set;
  std::size_t dropped = 0;
};

// Reads the first JSON array of {Expression, StartToken, EndToken, RefersTo}
// objects in a model response. Invalid objects and repeated spans are dropped
// and counted. Throws NoParsableOutput when the response holds no such array.
ParsedAnnotations parse_annotations(std::string_view raw, const TokenizedAbstract& abstract,
                                    const std::string& annotator = "");

// Unanimous gold: the annotators must mark identical span sets, and for every
// span all refers_to strings must match pairwise under the similarity.
// Throws PreconditionError with fewer than two sets.
std::optional<AnnotationSet> build_gold(const std::vector<AnnotationSet>& per_annotator,
                                        const Similarity& similarity);

// Default matcher for antecedent strings: token TF cosine with a leading
// article ignored, so "a house" and "house" agree at 0.9.
Similarity antecedent_similarity(double threshold = 0.9);

using Chain = std::set<std::string>;
using Chains = std::vector<Chain>;

struct ChainPair {
  Chains key;
  Chains response;
};

// Bridges the flat span -> antecedent schema to entity chains. Antecedent
// strings from both sides are grouped greedily (gold first, in order) against
// each group's first string; each group contributes a synthetic mention
// "a:<k>" and every span is the mention "s:<start>:<end>".
ChainPair build_chains(const AnnotationSet& pred, const AnnotationSet& gold,
                       const Similarity& similarity);

struct CorefScores {
  PRF muc;
  PRF b3;
  PRF ceaf;
  double conll = 0;
};

// MUC (links), B-cubed (mentions) and CEAF-phi4 (optimal entity alignment),
// with CoNLL the mean of the three F1 values. Zero denominators give 0.
PRF muc_score(const Chains& key, const Chains& response);
PRF b_cubed_score(const Chains& key, const Chains& response);
PRF ceaf_e_score(const Chains& key, const Chains& response);
CorefScores score_chains(const Chains& key, const Chains& response);

CorefScores score_coref(const AnnotationSet& pred, const AnnotationSet& gold,
                        const Similarity& similarity);

// Replaces each annotated span with its antecedent, right to left. Punctuation
// glued to the outer edges of the span is kept ("(PBC)." becomes
// "(Primary biliary cirrhosis)."). Throws OverlappingSpans and
// PreconditionError for spans outside the abstract.
std::string apply_resolution(const TokenizedAbstract& abstract, const AnnotationSet& annotations);

// kappa = (po - pe) / (1 - pe). Throws DegenerateExpected when pe = 1 and
// PreconditionError for values outside [0,1].
double cohen_kappa(double p_observed, double p_expected);
// Observed agreement |A and B| / |A or B|; two empty sets agree fully.
double observed_agreement(std::size_t intersection, std::size_t union_size);
double observed_agreement(const std::set<std::string>& a, const std::set<std::string>& b);
double cohen_kappa(const std::set<std::string>& a, const std::set<std::string>& b,
                   double p_expected);

// Links of an annotation set as "start:end->normalized antecedent" strings,
// the unit compared by the agreement statistics.
std::set<std::string> annotation_links(const AnnotationSet& set);

struct CorefCell {
  std::string strategy;
  std::string model;
  double muc_f1 = 0;
  double b3_f1 = 0;
  double ceaf_f1 = 0;
  double conll_f1 = 0;
  std::size_t unparsable = 0;
  bool failed = false;
  std::string error;
};

struct CorefSelection {
  std::string strategy;
  std::string model;
  std::vector<CorefCell> table;
};

struct GoldDocument {
  TokenizedAbstract abstract;
  AnnotationSet gold;
};

// Predicted annotations for one abstract with one (strategy, backend) pair.
// Unparsable output yields an empty set with `unparsable` set.
struct CorefPrediction {
  AnnotationSet set;
  bool unparsable = false;
  std::size_t dropped = 0;
};
CorefPrediction predict_coref(Generator& generator, ModelBackend& backend,
                              const PromptStrategy& strategy, const TokenizedAbstract& abstract);

// Grid search over every (strategy, backend) pair: mean of each F1 over the
// gold documents. A cell whose backend fails scores 0 and is flagged. The
// winner maximises CoNLL F1; ties go to the lexicographically smallest
// (strategy, model). Throws PreconditionError for an empty grid or gold set.
CorefSelection select_coref_config(const std::vector<PromptStrategy>& strategies,
                                   const std::vector<ModelBackend*>& backends,
                                   const std::vector<GoldDocument>& gold, Generator& generator,
                                   const Similarity& similarity, int jobs = 1);

std::string coref_table_csv(const std::vector<CorefCell>& table);

// Annotation JSONL: {abstract_id, annotator, annotations: [{Expression,
// StartToken, EndToken, RefersTo}]}.
std::vector<AnnotationSet> parse_annotation_jsonl(std::string_view content);
std::vector<AnnotationSet> load_annotation_jsonl(const std::string& path);
std::string annotation_jsonl(const std::vector<AnnotationSet>& sets);

// Groups annotation sets by abstract and keeps the unanimous ones.
GoldCorpus gold_from_annotations(const std::vector<AnnotationSet>& sets,
                                 const Similarity& similarity);

}  // namespace codekg
