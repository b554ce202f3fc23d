#include "codekg/relex.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "codekg/csv.hpp"
#include "codekg/error.hpp"
#include "codekg/json_extract.hpp"
#include "codekg/parallel.hpp"
#include "codekg/text.hpp"

namespace codekg {

using nlohmann::json;

bool valid_triple(const Triple& t) {
  return !text::normalize(t.entity1).empty() && !text::normalize(t.relation).empty() &&
         !text::normalize(t.entity2).empty();
}

std::string normalize_field(std::string_view s, bool strip_articles) {
  std::string n = text::normalize(s);
  return strip_articles ? text::strip_leading_article(n) : n;
}

std::string triple_key(const Triple& t, bool strip_articles) {
  return normalize_field(t.entity1, strip_articles) + '\x1f' + normalize_field(t.relation) +
         '\x1f' + normalize_field(t.entity2, strip_articles);
}

namespace {

const std::pair<const char*, const char*> kFieldNames[] = {
    {"Entity 1", "entity1"}, {"Relationship", "relation"}, {"Entity 2", "entity2"}};

// Field value under either key convention, or nullopt when absent or not a
// string.
std::optional<std::string> field(const json& obj, int which) {
  for (const char* key : {kFieldNames[which].first, kFieldNames[which].second}) {
    auto it = obj.find(key);
    if (it != obj.end()) {
      if (!it->is_string()) return std::nullopt;
      return text::collapse_whitespace(it->get<std::string>());
    }
  }
  return std::nullopt;
}

std::optional<Triple> triple_from(const json& obj) {
  if (!obj.is_object()) return std::nullopt;
  auto e1 = field(obj, 0), r = field(obj, 1), e2 = field(obj, 2);
  if (!e1 || !r || !e2) return std::nullopt;
  Triple t{*e1, *r, *e2, ""};
  if (!valid_triple(t)) return std::nullopt;
  return t;
}

}  // namespace

ParsedTriples parse_triples(std::string_view raw, const std::string& source) {
  ParsedTriples out;
  auto arr = first_object_array(raw);
  if (!arr) {
    out.parsable = false;
    out.diagnostic = "no JSON array of objects in extraction response";
    return out;
  }
  for (const auto& obj : *arr) {
    if (auto t = triple_from(obj)) {
      t->source = source;
      out.triples.push_back(std::move(*t));
    } else {
      ++out.dropped;
    }
  }
  return out;
}

ParsedTriples extract_triples(const SentenceRecord& sentence, Strategy strategy,
                              ModelBackend& backend, Generator& generator) {
  if (text::trim(sentence.text).empty()) throw PreconditionError("extract_triples needs a sentence");
  const std::string raw = generator.generate(backend, load_strategy(Task::extract, strategy),
                                             task_bindings(Task::extract, sentence.text));
  return parse_triples(raw, sentence.abstract_id.empty() ? "" : sentence_ref(sentence));
}

ParsedTriples extract_triples(const std::string& sentence, Strategy strategy,
                              ModelBackend& backend, Generator& generator) {
  SentenceRecord rec;
  rec.text = sentence;
  return extract_triples(rec, strategy, backend, generator);
}

std::vector<WorkingSentence> build_working_set(const std::vector<LabeledSentence>& labeled,
                                               const std::vector<SentenceRecord>& simplified) {
  std::vector<WorkingSentence> out;
  std::map<std::string, std::size_t> index;
  auto add = [&](const SentenceRecord& rec) {
    const std::string key = text::normalize(rec.text);
    if (key.empty()) return;
    auto [it, fresh] = index.emplace(key, out.size());
    if (fresh) {
      out.push_back(WorkingSentence{rec.text, {rec}});
    } else {
      out[it->second].provenance.push_back(rec);
    }
  };
  for (const auto& l : labeled) {
    if (l.label == SentenceLabel::simp) add(l.sentence);
  }
  for (const auto& s : simplified) add(s);
  return out;
}

std::vector<WorkingSentence> working_set_from_records(const std::vector<SentenceRecord>& records) {
  std::vector<WorkingSentence> out;
  for (const auto& r : records) {
    if (!text::trim(r.text).empty()) out.push_back(WorkingSentence{r.text, {r}});
  }
  return out;
}

ExtractionRun extract_corpus(const std::vector<WorkingSentence>& sentences, Strategy strategy,
                             ModelBackend& backend, Generator& generator, int jobs) {
  std::vector<ParsedTriples> results(sentences.size());
  std::vector<std::string> errors(sentences.size());
  parallel_for(sentences.size(), jobs, [&](std::size_t i) {
    try {
      results[i] = extract_triples(sentences[i].provenance.front(), strategy, backend, generator);
    } catch (const BackendFailure& e) {
      errors[i] = e.what();
    }
  });
  ExtractionRun run;
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    const std::string ref = sentence_ref(sentences[i].provenance.front());
    if (!errors[i].empty()) {
      run.failures.push_back(ref + ": " + errors[i]);
      continue;
    }
    if (!results[i].parsable) run.failures.push_back(ref + ": " + results[i].diagnostic);
    run.dropped += results[i].dropped;
    for (auto& t : results[i].triples) run.triples.push_back(std::move(t));
  }
  return run;
}

// ---------------------------------------------------------------------------
// Graph

KnowledgeGraph::KnowledgeGraph(GraphOptions options) : options_(options) {}

namespace {

void keep_smallest(std::map<std::string, std::string>& labels, const std::string& key,
                   const std::string& surface) {
  auto [it, fresh] = labels.emplace(key, surface);
  if (!fresh && surface < it->second) it->second = surface;
}

}  // namespace

void KnowledgeGraph::add(const Triple& t) {
  if (!valid_triple(t)) return;
  const std::string k1 = normalize_field(t.entity1, options_.strip_articles);
  const std::string k2 = normalize_field(t.entity2, options_.strip_articles);
  const std::string kr = normalize_field(t.relation);
  keep_smallest(nodes_, k1, text::collapse_whitespace(t.entity1));
  keep_smallest(nodes_, k2, text::collapse_whitespace(t.entity2));
  const std::string key = k1 + '\x1f' + kr + '\x1f' + k2;
  keep_smallest(relation_labels_, key, text::collapse_whitespace(t.relation));
  auto& edge = edges_[key];
  edge.entity1 = k1;
  edge.relation = kr;
  edge.entity2 = k2;
  if (!t.source.empty()) edge.sources.insert(t.source);
}

std::vector<Triple> KnowledgeGraph::triples() const {
  std::vector<Triple> out;
  for (const auto& [key, e] : edges_) {
    out.push_back(Triple{nodes_.at(e.entity1), relation_labels_.at(key), nodes_.at(e.entity2),
                         e.sources.empty() ? "" : *e.sources.begin()});
  }
  return out;
}

bool KnowledgeGraph::operator==(const KnowledgeGraph& other) const {
  return nodes_ == other.nodes_ && edges_ == other.edges_ &&
         relation_labels_ == other.relation_labels_;
}

KnowledgeGraph assemble_graph(const std::vector<Triple>& triples, GraphOptions options) {
  KnowledgeGraph g(options);
  for (const auto& t : triples) g.add(t);
  return g;
}

std::string_view to_string(GraphFormat f) {
  switch (f) {
    case GraphFormat::jsonl_triples: return "jsonl";
    case GraphFormat::csv_edges: return "csv";
    case GraphFormat::graphviz_dot: return "dot";
  }
  return "jsonl";
}

GraphFormat parse_graph_format(std::string_view s) {
  if (s == "jsonl" || s == "jsonl_triples") return GraphFormat::jsonl_triples;
  if (s == "csv" || s == "csv_edges") return GraphFormat::csv_edges;
  if (s == "dot" || s == "graphviz_dot") return GraphFormat::graphviz_dot;
  throw ConfigError("unknown graph format: " + std::string(s));
}

std::string_view extension(GraphFormat f) {
  switch (f) {
    case GraphFormat::jsonl_triples: return ".jsonl";
    case GraphFormat::csv_edges: return ".csv";
    case GraphFormat::graphviz_dot: return ".dot";
  }
  return ".jsonl";
}

namespace {

std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string render_graph(const KnowledgeGraph& graph, GraphFormat format) {
  std::string out;
  switch (format) {
    case GraphFormat::jsonl_triples:
      for (const auto& [key, e] : graph.edges()) {
        json j = json::object();
        j["entity1"] = graph.node_label(e.entity1);
        j["relation"] = graph.relation_label(key);
        j["entity2"] = graph.node_label(e.entity2);
        j["sources"] = std::vector<std::string>(e.sources.begin(), e.sources.end());
        out += j.dump() + "\n";
      }
      break;
    case GraphFormat::csv_edges:
      out = "entity1,relation,entity2\n";
      for (const auto& [key, e] : graph.edges()) {
        out += csv::row({graph.node_label(e.entity1), graph.relation_label(key),
                         graph.node_label(e.entity2)});
      }
      break;
    case GraphFormat::graphviz_dot:
      out = "digraph kg {\n";
      for (const auto& [key, label] : graph.nodes()) out += "  " + dot_quote(label) + ";\n";
      for (const auto& [key, e] : graph.edges()) {
        out += "  " + dot_quote(graph.node_label(e.entity1)) + " -> " +
               dot_quote(graph.node_label(e.entity2)) +
               " [label=" + dot_quote(graph.relation_label(key)) + "];\n";
      }
      out += "}\n";
      break;
  }
  return out;
}

void export_graph(const KnowledgeGraph& graph, GraphFormat format, const std::string& path) {
  text::write_file_atomic(path, render_graph(graph, format));
}

std::vector<Triple> parse_triples_jsonl(std::string_view content) {
  std::vector<Triple> out;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(std::string("triple record: ") + e.what(), line_no);
    }
    const json items = j.is_array() ? j : json::array({j});
    for (const auto& obj : items) {
      auto t = triple_from(obj);
      if (!t) throw ParseError("triple record lacks a non-empty entity1, relation or entity2", line_no);
      std::vector<std::string> sources;
      if (obj.contains("sources") && obj["sources"].is_array()) {
        for (const auto& s : obj["sources"]) sources.push_back(s.get<std::string>());
      } else if (obj.contains("source") && obj["source"].is_string()) {
        sources.push_back(obj["source"].get<std::string>());
      }
      if (sources.empty()) sources.emplace_back();
      for (auto& s : sources) {
        t->source = s;
        out.push_back(*t);
      }
    }
  }
  return out;
}

std::vector<Triple> load_triples_jsonl(const std::string& path) {
  return parse_triples_jsonl(text::read_file(path));
}

KnowledgeGraph import_graph_jsonl(const std::string& path, GraphOptions options) {
  return assemble_graph(load_triples_jsonl(path), options);
}

std::string triples_jsonl(const std::vector<Triple>& triples) {
  std::string out;
  for (const auto& t : triples) {
    json j = json::object();
    j["entity1"] = t.entity1;
    j["relation"] = t.relation;
    j["entity2"] = t.entity2;
    j["source"] = t.source;
    out += j.dump() + "\n";
  }
  return out;
}

std::string convert_triples_jsonl(std::string_view content) {
  return triples_jsonl(parse_triples_jsonl(content));
}

namespace {

json record_json(const SentenceRecord& r) {
  json j = json::object();
  j["abstract_id"] = r.abstract_id;
  j["sentence_index"] = r.sentence_index;
  j["origin"] = to_string(r.origin);
  if (r.source_sentence_index >= 0) j["source_sentence_index"] = r.source_sentence_index;
  return j;
}

}  // namespace

std::string working_set_jsonl(const std::vector<WorkingSentence>& sentences) {
  std::string out;
  for (const auto& s : sentences) {
    json j = json::object();
    j["text"] = s.text;
    j["provenance"] = json::array();
    for (const auto& p : s.provenance) j["provenance"].push_back(record_json(p));
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<WorkingSentence> parse_working_set_jsonl(std::string_view content) {
  std::vector<WorkingSentence> out;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      WorkingSentence w;
      w.text = j.at("text").get<std::string>();
      for (const auto& p : j.at("provenance")) {
        SentenceRecord r;
        r.abstract_id = p.at("abstract_id").get<std::string>();
        r.sentence_index = p.at("sentence_index").get<int>();
        r.origin = parse_origin(p.at("origin").get<std::string>());
        r.source_sentence_index = p.value("source_sentence_index", -1);
        r.text = w.text;
        w.provenance.push_back(std::move(r));
      }
      if (w.provenance.empty()) throw SchemaError("working sentence without provenance");
      out.push_back(std::move(w));
    } catch (const json::exception& e) {
      throw ParseError(std::string("working sentence record: ") + e.what(), line_no);
    } catch (const SchemaError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

}  // namespace codekg
