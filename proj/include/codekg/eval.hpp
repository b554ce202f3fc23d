#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "codekg/metrics.hpp"
#include "codekg/relex.hpp"
#include "codekg/similarity.hpp"

namespace codekg {

// per_field: entity1, relation and entity2 must each reach the threshold.
// whole: the three fields are joined and compared once.
enum class MatchMode { per_field, whole };

std::string_view to_string(MatchMode m);
MatchMode parse_match_mode(std::string_view s);

struct FieldScores {
  double entity1 = 0;
  double relation = 0;
  double entity2 = 0;

  double mean() const { return (entity1 + relation + entity2) / 3.0; }
};

FieldScores field_scores(const Triple& pred, const Triple& gold, const Similarity& similarity);

struct TripleMatch {
  std::size_t pred = 0;
  std::size_t gold = 0;
  FieldScores scores;
};

struct TripleMatchResult {
  std::vector<TripleMatch> matches;
  std::vector<std::size_t> unmatched_pred;
  std::vector<std::size_t> unmatched_gold;
  // Unmatched predictions found on the allowlist; they count for neither
  // precision nor recall.
  std::vector<std::size_t> excused_pred;
  std::size_t pred_count = 0;  // predictions in the precision denominator
  std::size_t gold_count = 0;
};

// Candidate pairs are those meeting the threshold under `mode`, ranked by mean
// field similarity; the one-to-one selection is greedy_match.
TripleMatchResult match_triples(const std::vector<Triple>& pred, const std::vector<Triple>& gold,
                                const Similarity& similarity,
                                MatchMode mode = MatchMode::per_field);

// Moves unmatched predictions that match an allowlisted triple from
// unmatched_pred to excused_pred.
void apply_allowlist(TripleMatchResult& result, const std::vector<Triple>& pred,
                     const std::vector<Triple>& allowlist, const Similarity& similarity,
                     MatchMode mode = MatchMode::per_field);

struct DocumentPRF {
  double precision = 0;
  double recall = 0;
};

// P = matches/pred and R = matches/gold, each 1 when both lists are empty and
// 0 when only its own denominator is empty.
DocumentPRF document_prf(const TripleMatchResult& r);

struct TripleScore {
  double exact_match = 0;
  PRF macro;  // macro F1 is the mean of per-document F1
  PRF micro;
  double rmse = 0;
  std::size_t documents = 0;
  std::size_t pred_total = 0;
  std::size_t gold_total = 0;
  std::size_t matched_total = 0;
};

// Throws EmptyBatch when there are no documents.
TripleScore score_triples(const std::vector<TripleMatchResult>& documents);

// Triples grouped by document id. Sources that are sentence references
// ("<abstract>/<origin>/<index>") are grouped by abstract.
using DocumentTriples = std::map<std::string, std::vector<Triple>>;

std::string document_of(const std::string& source);
DocumentTriples group_by_document(const std::vector<Triple>& triples);

// Gold triple JSONL: {doc_id, triples: [{...}, ...]} per line, either key
// convention inside. Also used for allowlists.
DocumentTriples parse_gold_triples_jsonl(std::string_view content);
DocumentTriples load_gold_triples_jsonl(const std::string& path);
std::string gold_triples_jsonl(const DocumentTriples& docs);

struct DocumentMatch {
  std::string doc_id;
  std::vector<Triple> pred;
  std::vector<Triple> gold;
  TripleMatchResult result;
};

// Matches every document present in gold or pred (sorted by id).
std::vector<DocumentMatch> match_documents(const DocumentTriples& pred, const DocumentTriples& gold,
                                           const Similarity& similarity,
                                           MatchMode mode = MatchMode::per_field,
                                           const DocumentTriples* allowlist = nullptr);

std::vector<TripleMatchResult> results_of(const std::vector<DocumentMatch>& docs);

// Metrics rows as in the benchmark table (Exact-Match, Prec Macro, Rec Macro,
// F1-Score Macro, Prec Micro, Rec Micro, F1-Score Micro, RMSE), one column per
// named run.
std::string triple_score_csv(const std::vector<std::pair<std::string, TripleScore>>& runs);

// ---------------------------------------------------------------------------
// Error analysis

enum class ErrorKind { missing, spurious, relation_mismatch };

std::string_view to_string(ErrorKind k);

struct ErrorBucket {
  ErrorKind kind = ErrorKind::missing;
  std::optional<Triple> pred;
  std::optional<Triple> gold;
};

struct ErrorHistogram {
  std::size_t missing = 0;
  std::size_t spurious = 0;
  std::size_t relation_mismatch = 0;
  // Documents with at least one missing and at least one spurious error.
  std::size_t missing_and_spurious_documents = 0;
  std::size_t documents = 0;

  ErrorHistogram& operator+=(const ErrorHistogram& o);
};

struct BucketResult {
  std::vector<ErrorBucket> buckets;
  ErrorHistogram histogram;
};

// Unmatched gold whose two entities both find partners in one unmatched pred
// (directly or swapped) pairs with it as relation_mismatch; the rest of the
// unmatched gold is missing and the rest of the unmatched pred spurious.
BucketResult bucketize_errors(const TripleMatchResult& result, const std::vector<Triple>& pred,
                              const std::vector<Triple>& gold, const Similarity& similarity);

// kind,count,share plus the co-occurrence row.
std::string error_histogram_csv(const ErrorHistogram& h);
// Bar chart of the three pure buckets and the co-occurrence count.
std::string error_histogram_svg(const ErrorHistogram& h);

}  // namespace codekg
