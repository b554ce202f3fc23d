#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "codekg/backend.hpp"
#include "codekg/corpus.hpp"
#include "codekg/prompts.hpp"
#include "codekg/syntax.hpp"

namespace codekg {

struct Triple {
  std::string entity1;
  std::string relation;
  std::string entity2;
  // Reference of the sentence the triple came from (see sentence_ref); may be
  // empty for gold triples.
  std::string source;

  bool operator==(const Triple&) const = default;
};

// All three fields non-empty after whitespace normalization.
bool valid_triple(const Triple& t);

// Canonical identity of an entity or relation string; optionally without a
// leading article.
std::string normalize_field(std::string_view s, bool strip_articles = false);

// Normalized (entity1, relation, entity2) joined by \x1f.
std::string triple_key(const Triple& t, bool strip_articles = false);

struct ParsedTriples {
  std::vector<Triple> triples;
  std::size_t dropped = 0;  // objects missing a field or with an empty one
  bool parsable = true;
  std::string diagnostic;
};

// Reads the first JSON array of objects with keys "Entity 1", "Relationship",
// "Entity 2" (snake_case entity1/relation/entity2 also accepted). Field text
// is whitespace-collapsed. With no array found, parsable is false and the
// list is empty.
ParsedTriples parse_triples(std::string_view raw, const std::string& source = "");

ParsedTriples extract_triples(const SentenceRecord& sentence, Strategy strategy,
                              ModelBackend& backend, Generator& generator);
ParsedTriples extract_triples(const std::string& sentence, Strategy strategy,
                              ModelBackend& backend, Generator& generator);

struct WorkingSentence {
  std::string text;
  std::vector<SentenceRecord> provenance;  // at least one
};

// S = S_simp united with the simp-labeled sentences of the labeled corpus,
// deduplicated on normalized text. Labeled sentences come first, then
// simplified ones, each in input order.
std::vector<WorkingSentence> build_working_set(const std::vector<LabeledSentence>& labeled,
                                               const std::vector<SentenceRecord>& simplified);

// Every sentence of the corpus as its own working sentence, for runs that skip
// classification and decomposition.
std::vector<WorkingSentence> working_set_from_records(const std::vector<SentenceRecord>& records);

struct ExtractionRun {
  std::vector<Triple> triples;
  std::size_t dropped = 0;
  std::vector<std::string> failures;  // "<sentence ref>: <message>"
};

// Extracts from every working sentence; a triple's source is the first
// provenance reference of its sentence. Backend failures and unparsable
// output are recorded per sentence and skipped.
ExtractionRun extract_corpus(const std::vector<WorkingSentence>& sentences, Strategy strategy,
                             ModelBackend& backend, Generator& generator, int jobs = 1);

struct GraphOptions {
  bool strip_articles = false;
};

struct GraphEdge {
  std::string entity1;  // node keys
  std::string relation;
  std::string entity2;
  std::set<std::string> sources;

  bool operator==(const GraphEdge&) const = default;
};

// Nodes and edges keyed by normalized form. Display strings are the
// lexicographically smallest surface seen for a key, so the graph does not
// depend on insertion order.
class KnowledgeGraph {
 public:
  explicit KnowledgeGraph(GraphOptions options = {});

  void add(const Triple& t);

  // node key -> display string
  const std::map<std::string, std::string>& nodes() const { return nodes_; }
  // triple key -> edge
  const std::map<std::string, GraphEdge>& edges() const { return edges_; }
  const std::string& node_label(const std::string& key) const { return nodes_.at(key); }
  const std::string& relation_label(const std::string& triple_key) const {
    return relation_labels_.at(triple_key);
  }

  // Edges as display-form triples in key order; source is the first
  // provenance reference.
  std::vector<Triple> triples() const;

  const GraphOptions& options() const { return options_; }

  bool operator==(const KnowledgeGraph& other) const;

 private:
  GraphOptions options_;
  std::map<std::string, std::string> nodes_;
  std::map<std::string, GraphEdge> edges_;
  std::map<std::string, std::string> relation_labels_;
};

KnowledgeGraph assemble_graph(const std::vector<Triple>& triples, GraphOptions options = {});

enum class GraphFormat { jsonl_triples, csv_edges, graphviz_dot };

std::string_view to_string(GraphFormat f);
GraphFormat parse_graph_format(std::string_view s);
std::string_view extension(GraphFormat f);

// jsonl: {entity1, relation, entity2, sources}; csv: entity1,relation,entity2;
// dot: one "a" -> "b" [label="r"] line per edge.
std::string render_graph(const KnowledgeGraph& graph, GraphFormat format);
void export_graph(const KnowledgeGraph& graph, GraphFormat format, const std::string& path);

// Triple JSONL in either key convention; "sources" (array) or "source"
// (string) give provenance. Throws ParseError naming the line.
std::vector<Triple> parse_triples_jsonl(std::string_view content);
std::vector<Triple> load_triples_jsonl(const std::string& path);
KnowledgeGraph import_graph_jsonl(const std::string& path, GraphOptions options = {});

// One {entity1, relation, entity2, source} object per line.
std::string triples_jsonl(const std::vector<Triple>& triples);

// Rewrites display-convention records ("Entity 1", "Relationship", "Entity 2")
// to snake_case, one triple per line.
std::string convert_triples_jsonl(std::string_view content);

std::string working_set_jsonl(const std::vector<WorkingSentence>& sentences);
std::vector<WorkingSentence> parse_working_set_jsonl(std::string_view content);

}  // namespace codekg
