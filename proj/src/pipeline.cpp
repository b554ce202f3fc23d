#include "codekg/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <iostream>

#include <json.hpp>

#include "codekg/error.hpp"
#include "codekg/csv.hpp"
#include "codekg/parallel.hpp"
#include "codekg/text.hpp"

namespace codekg {

using nlohmann::json;

namespace {

Similarity make_similarity(const PipelineConfig& c, const http::Transport& transport) {
  if (c.similarity.kind == SimilarityKind::embedding_endpoint) {
    EmbeddingConfig ec{c.similarity.endpoint, c.similarity.model, c.similarity.auth_env, c.cache_dir};
    return embedding_similarity(std::make_shared<EmbeddingClient>(ec, transport),
                                c.similarity.threshold, c.similarity.fallback);
  }
  return Similarity::token_tf(c.similarity.threshold, c.similarity.strip_articles);
}

}  // namespace

Runtime::Runtime(PipelineConfig config, http::Transport transport)
    : config_(std::move(config)),
      generator_(config_.cache_dir.empty() ? GenerationCache::in_memory()
                                           : GenerationCache::on_disk(config_.cache_dir)),
      similarity_(make_similarity(config_, transport)) {
  config_.validate();
  for (const auto& spec : config_.backends) {
    if (spec.kind == "mock") {
      auto mock = std::make_unique<MockBackend>(spec.name, std::map<std::string, std::string>{},
                                                spec.params);
      if (!spec.scenario.empty()) {
        try {
          load_scenario(*mock, spec.scenario);
        } catch (const IoError& e) {
          throw ConfigError("backends." + spec.name + ".scenario: " + e.what());
        }
      }
      backends_[spec.name] = std::move(mock);
    } else {
      HttpBackendConfig hc;
      hc.name = spec.name;
      hc.endpoint = spec.endpoint;
      hc.model = spec.model.empty() ? spec.name : spec.model;
      hc.params = spec.params;
      hc.auth_env = spec.auth_env;
      hc.max_in_flight = spec.max_in_flight;
      hc.retry.max_attempts = spec.max_attempts;
      hc.timeout = std::chrono::seconds(spec.timeout_seconds);
      backends_[spec.name] = std::make_unique<HttpChatBackend>(hc, transport);
    }
  }
}

ModelBackend& Runtime::backend(const std::string& name) {
  auto it = backends_.find(name);
  if (it == backends_.end()) throw ConfigError("backend '" + name + "' is not defined");
  return *it->second;
}

std::vector<ModelBackend*> Runtime::backends() {
  std::vector<ModelBackend*> out;
  for (auto& [name, b] : backends_) out.push_back(b.get());
  return out;
}

CorefRun resolve_corpus(const Corpus& corpus, Strategy strategy, ModelBackend& backend,
                        Generator& generator, int jobs) {
  const PromptStrategy prompt = load_strategy(Task::coref, strategy);
  CorefRun run;
  run.resolved = corpus;
  run.annotations.resize(corpus.size());
  std::vector<std::string> errors(corpus.size());
  std::vector<bool> backend_failed(corpus.size(), false);
  parallel_for(corpus.size(), jobs, [&](std::size_t i) {
    const TokenizedAbstract ta = tokenize(corpus[i]);
    try {
      auto pred = predict_coref(generator, backend, prompt, ta);
      run.annotations[i] = pred.set;
      if (pred.unparsable) {
        errors[i] = "unparsable coreference output";
        return;
      }
      run.resolved[i].text = apply_resolution(ta, pred.set);
    } catch (const BackendFailure& e) {
      errors[i] = e.what();
      backend_failed[i] = true;
      run.annotations[i].abstract_id = corpus[i].id;
    } catch (const OverlappingSpans& e) {
      errors[i] = e.what();
    } catch (const PreconditionError& e) {
      errors[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!errors[i].empty()) run.failures.push_back(corpus[i].id + ": " + errors[i]);
  }
  if (!corpus.empty() && std::all_of(backend_failed.begin(), backend_failed.end(), [](bool b) { return b; })) {
    throw BackendFailure("coref: every abstract failed: " + errors.front());
  }
  return run;
}

std::unique_ptr<SentenceClassifier> make_classifier(Runtime& runtime) {
  const auto& c = runtime.config();
  if (c.classifier == "rule") return std::make_unique<RuleClassifier>();
  auto cls = std::make_unique<BackendClassifier>(load_strategy(Task::classify, c.classify.strategy),
                                                 runtime.backend(c.classify.backend),
                                                 runtime.generator());
  if (!c.classify_examples.empty()) cls->fit(load_gold_sentences(c.classify_examples));
  return cls;
}

std::map<SentenceLabel, SimplifierConfig> simplifier_configs(Runtime& runtime) {
  std::map<SentenceLabel, SimplifierConfig> out;
  for (const auto& [cat, spec] : runtime.config().simplify) {
    out[cat] = SimplifierConfig{spec.strategy, &runtime.backend(spec.backend)};
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

void report_failures(const std::string& stage, const std::vector<std::string>& failures) {
  for (const auto& f : failures) std::cerr << "warning: " << stage << ": " << f << '\n';
}

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) {
  try {
    return fn();
  } catch (const BackendFailure&) {
    throw;
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e.what());
  }
}

bool all_failed(std::size_t attempted, std::size_t failures) {
  return attempted > 0 && failures == attempted;
}

}  // namespace

PipelineResult run_pipeline(const Corpus& corpus, Runtime& runtime, StageToggles toggles) {
  const auto& c = runtime.config();
  PipelineResult r;
  r.toggles = toggles;
  r.input = corpus;
  r.graph = KnowledgeGraph(GraphOptions{c.similarity.strip_articles});

  auto t = Clock::now();
  if (toggles.coref) {
    r.coref = stage("coref", [&] {
      return resolve_corpus(corpus, c.coref.strategy, runtime.backend(c.coref.backend),
                            runtime.generator(), c.jobs);
    });
    report_failures("coref", r.coref.failures);
  } else {
    r.coref.resolved = corpus;
  }
  r.seconds["coref"] = since(t);
  const Origin origin = toggles.coref ? Origin::coref_resolved : Origin::original;

  if (toggles.decomposition) {
    t = Clock::now();
    r.labeled = stage("classify", [&] {
      auto classifier = make_classifier(runtime);
      return label_corpus(*classifier, r.coref.resolved, origin, c.classifier == "rule" ? LabelSource::rule
                                                                                      : LabelSource::backend,
                          c.jobs);
    });
    r.seconds["classify"] = since(t);

    t = Clock::now();
    r.simplified = stage("simplify", [&] {
      return simplify_corpus(r.labeled, simplifier_configs(runtime), runtime.generator(), c.jobs);
    });
    report_failures("simplify", r.simplified.failures);
    if (all_failed(r.simplified.decompositions.size(),
                   r.simplified.failures.size())) {
      throw BackendFailure("simplify: every sentence failed: " + r.simplified.failures.front());
    }
    r.seconds["simplify"] = since(t);
    r.working = build_working_set(r.labeled, r.simplified.simplified);
  } else {
    std::vector<SentenceRecord> all;
    for (const auto& a : r.coref.resolved) {
      auto recs = sentences_of(a, origin);
      all.insert(all.end(), recs.begin(), recs.end());
    }
    r.working = working_set_from_records(all);
  }

  t = Clock::now();
  r.extraction = stage("extract", [&] {
    return extract_corpus(r.working, c.extract.strategy, runtime.backend(c.extract.backend),
                          runtime.generator(), c.jobs);
  });
  report_failures("extract", r.extraction.failures);
  if (all_failed(r.working.size(), r.extraction.failures.size())) {
    throw BackendFailure("extract: every sentence failed: " + r.extraction.failures.front());
  }
  r.graph = assemble_graph(r.extraction.triples, GraphOptions{c.similarity.strip_articles});
  r.seconds["extract"] = since(t);
  return r;
}

// ---------------------------------------------------------------------------
// Manifest and outputs

std::string Manifest::to_json() const {
  json j = json::object();
  j["command"] = command;
  j["config_hash"] = config_hash;
  j["corpus_hash"] = corpus_hash;
  j["counts"] = counts;
  j["outputs"] = outputs;
  return j.dump(2) + "\n";
}

Manifest Manifest::parse(std::string_view json_text) {
  Manifest m;
  try {
    json j = json::parse(json_text);
    m.command = j.value("command", "");
    m.config_hash = j.value("config_hash", "");
    m.corpus_hash = j.value("corpus_hash", "");
    if (j.contains("counts")) m.counts = j["counts"].get<std::map<std::string, std::size_t>>();
    if (j.contains("outputs")) m.outputs = j["outputs"].get<std::map<std::string, std::string>>();
  } catch (const json::exception& e) {
    throw SchemaError(std::string("manifest: ") + e.what());
  }
  return m;
}

void Manifest::merge(const Manifest& other) {
  if (!other.command.empty()) command = other.command;
  if (!other.config_hash.empty()) config_hash = other.config_hash;
  if (!other.corpus_hash.empty()) corpus_hash = other.corpus_hash;
  for (const auto& [k, v] : other.counts) counts[k] = v;
  for (const auto& [k, v] : other.outputs) outputs[k] = v;
}

void write_output(const std::string& out_dir, const std::string& name, std::string_view content,
                  Manifest& manifest) {
  text::write_file_atomic((std::filesystem::path(out_dir) / name).string(), content);
  manifest.outputs[name] = text::sha256_hex(content);
}

void update_manifest(const std::string& out_dir, const Manifest& update) {
  const auto path = (std::filesystem::path(out_dir) / "manifest.json").string();
  Manifest m;
  if (std::filesystem::exists(path)) m = Manifest::parse(text::read_file(path));
  m.merge(update);
  text::write_file_atomic(path, m.to_json());
}

void write_timings(const std::string& out_dir, const std::map<std::string, double>& seconds) {
  const auto path = (std::filesystem::path(out_dir) / "timings.json").string();
  json j = json::object();
  if (std::filesystem::exists(path)) {
    try {
      j = json::parse(text::read_file(path));
    } catch (const json::exception&) {
      j = json::object();
    }
  }
  for (const auto& [k, v] : seconds) j[k] = v;
  text::write_file_atomic(path, j.dump(2) + "\n");
}

void write_coref_outputs(const std::string& out_dir, const CorefRun& run, Manifest& manifest) {
  write_output(out_dir, "resolved.jsonl", corpus_to_jsonl(run.resolved), manifest);
  write_output(out_dir, "coref_annotations.jsonl", annotation_jsonl(run.annotations), manifest);
  manifest.counts["coref.abstracts"] = run.resolved.size();
  manifest.counts["coref.failures"] = run.failures.size();
}

void write_classify_outputs(const std::string& out_dir, const std::vector<LabeledSentence>& labeled,
                            Manifest& manifest) {
  write_output(out_dir, "labeled.jsonl", labeled_jsonl(labeled), manifest);
  manifest.counts["classify.sentences"] = labeled.size();
  for (SentenceLabel l : kAllLabels) {
    manifest.counts["classify." + std::string(to_string(l))] =
        static_cast<std::size_t>(std::count_if(labeled.begin(), labeled.end(),
                                               [&](const LabeledSentence& s) { return s.label == l; }));
  }
}

void write_simplify_outputs(const std::string& out_dir, const SimplifyResult& result,
                            Manifest& manifest) {
  write_output(out_dir, "simplified.jsonl", sentence_records_jsonl(result.simplified), manifest);
  manifest.counts["simplify.decomposed"] = result.decompositions.size();
  manifest.counts["simplify.outputs"] = result.simplified.size();
  manifest.counts["simplify.failures"] = result.failures.size();
}

void write_extract_outputs(const std::string& out_dir, const std::vector<WorkingSentence>& working,
                           const ExtractionRun& run, const KnowledgeGraph& graph,
                           Manifest& manifest) {
  write_output(out_dir, "working_set.jsonl", working_set_jsonl(working), manifest);
  write_output(out_dir, "triples.jsonl", triples_jsonl(run.triples), manifest);
  for (GraphFormat f : {GraphFormat::jsonl_triples, GraphFormat::csv_edges, GraphFormat::graphviz_dot}) {
    write_output(out_dir, "graph" + std::string(extension(f)), render_graph(graph, f), manifest);
  }
  manifest.counts["extract.sentences"] = working.size();
  manifest.counts["extract.triples"] = run.triples.size();
  manifest.counts["extract.dropped"] = run.dropped;
  manifest.counts["extract.failures"] = run.failures.size();
  manifest.counts["graph.nodes"] = graph.nodes().size();
  manifest.counts["graph.edges"] = graph.edges().size();
}

Manifest write_pipeline(const PipelineResult& result, const std::string& out_dir,
                        const PipelineConfig& config) {
  std::filesystem::create_directories(out_dir);
  Manifest m;
  m.command = "pipeline";
  m.config_hash = config.hash();
  m.corpus_hash = corpus_hash(result.input);
  if (result.toggles.coref) write_coref_outputs(out_dir, result.coref, m);
  if (result.toggles.decomposition) {
    write_classify_outputs(out_dir, result.labeled, m);
    write_simplify_outputs(out_dir, result.simplified, m);
  }
  write_extract_outputs(out_dir, result.working, result.extraction, result.graph, m);
  text::write_file_atomic((std::filesystem::path(out_dir) / "manifest.json").string(), m.to_json());
  write_timings(out_dir, result.seconds);
  return m;
}

// ---------------------------------------------------------------------------
// Ablation

std::vector<AblationConfig> standard_ablations() {
  return {{"Full Model", {true, true}},
          {"Remove Coref Resolution", {false, true}},
          {"Remove Sentence Decomposition", {true, false}},
          {"Remove Coref + Sentence Decomposition", {false, false}}};
}

DocumentTriples predictions_by_document(const std::vector<Triple>& triples, bool strip_articles) {
  DocumentTriples out;
  std::map<std::string, std::set<std::string>> seen;
  for (const auto& t : triples) {
    const std::string doc = document_of(t.source);
    if (seen[doc].insert(triple_key(t, strip_articles)).second) out[doc].push_back(t);
  }
  return out;
}

namespace {

AblationRow score_row(const std::string& name, const DocumentTriples& pred, const DocumentTriples& gold,
                      const Runtime& runtime) {
  const auto& c = runtime.config();
  DocumentTriples restricted;
  for (const auto& [doc, list] : pred) {
    if (gold.count(doc)) restricted[doc] = list;
  }
  auto docs = match_documents(restricted, gold, runtime.similarity(), c.similarity.match_mode);
  AblationRow row;
  row.configuration = name;
  for (const auto& [doc, list] : restricted) row.triples += list.size();
  row.score = score_triples(results_of(docs));
  return row;
}

}  // namespace

std::vector<AblationRow> run_ablation(const Corpus& corpus, const DocumentTriples& gold,
                                      Runtime& runtime, const std::vector<AblationConfig>& configs) {
  if (gold.empty()) throw PreconditionError("ablation needs gold triples");
  std::vector<AblationRow> rows;
  rows.push_back(score_row("Human Standard", gold, gold, runtime));
  for (const auto& cfg : configs) {
    auto result = run_pipeline(corpus, runtime, cfg.toggles);
    rows.push_back(score_row(cfg.name,
                             predictions_by_document(result.extraction.triples,
                                                     runtime.config().similarity.strip_articles),
                             gold, runtime));
  }
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "Configuration,Triples,Precision,Recall,F1 Score\n";
  for (const auto& r : rows) {
    out += csv::row({r.configuration, std::to_string(r.triples), text::format_double(r.score.micro.precision),
                     text::format_double(r.score.micro.recall), text::format_double(r.score.micro.f1)});
  }
  return out;
}

}  // namespace codekg
