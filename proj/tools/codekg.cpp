#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "codekg/config.hpp"
#include "codekg/coref.hpp"
#include "codekg/corpus.hpp"
#include "codekg/csv.hpp"
#include "codekg/error.hpp"
#include "codekg/eval.hpp"
#include "codekg/pipeline.hpp"
#include "codekg/pubmed.hpp"
#include "codekg/relex.hpp"
#include "codekg/simplify.hpp"
#include "codekg/syntax.hpp"
#include "codekg/text.hpp"

namespace fs = std::filesystem;
using namespace codekg;

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kBackend = 3, kSchema = 4 };

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> cache_dir;
  std::optional<int> jobs;
  std::vector<std::string> backend_overrides;
};

PipelineConfig resolve_config(const Globals& g) {
  PipelineConfig c = g.config_path.empty() ? default_config() : load_config(g.config_path);
  if (g.seed) c.seed = *g.seed;
  if (g.cache_dir) c.cache_dir = *g.cache_dir;
  if (g.jobs) c.jobs = *g.jobs;
  for (const auto& o : g.backend_overrides) apply_backend_override(c, o);
  c.validate();
  return c;
}

Corpus read_corpus(const std::string& path) {
  return load_corpus(path, fs::is_directory(path) ? CorpusFormat::plain_dir : CorpusFormat::jsonl);
}

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

void warn_all(const std::string& stage, const std::vector<std::string>& failures) {
  for (const auto& f : failures) std::cerr << "warning: " << stage << ": " << f << '\n';
}

std::vector<PromptStrategy> strategies_for(const PipelineConfig& c, Task task) {
  std::vector<PromptStrategy> out;
  for (Strategy s : c.strategies) out.push_back(load_strategy(task, s));
  return out;
}

// Stage manifests accumulate in out/manifest.json.
void finish_stage(const std::string& out, const std::string& command, Manifest m,
                  const PipelineConfig& c, const std::string& input_hash, double seconds) {
  m.command = command;
  m.config_hash = c.hash();
  if (!input_hash.empty()) m.corpus_hash = input_hash;
  update_manifest(out, m);
  write_timings(out, {{command, seconds}});
}

// ---------------------------------------------------------------------------

struct CorefArgs {
  std::string corpus, out = "out", gold, gold_corpus;
  bool select = false;
};

int cmd_coref(const Globals& g, const CorefArgs& a) {
  auto c = resolve_config(g);
  if (a.select && a.gold.empty()) throw PreconditionError("--select needs --gold");
  Runtime rt(c);
  auto t = Clock::now();
  Corpus corpus = read_corpus(a.corpus);
  fs::create_directories(a.out);
  Manifest m;
  Strategy strategy = c.coref.strategy;
  ModelBackend* backend = &rt.backend(c.coref.backend);
  if (a.select) {
    Corpus gold_corpus = a.gold_corpus.empty() ? corpus : read_corpus(a.gold_corpus);
    GoldCorpus gold = gold_from_annotations(load_annotation_jsonl(a.gold), antecedent_similarity(c.similarity.threshold));
    std::vector<GoldDocument> docs;
    for (const auto& ab : gold_corpus) {
      auto it = gold.annotations.find(ab.id);
      if (it != gold.annotations.end()) docs.push_back(GoldDocument{tokenize(ab), it->second});
    }
    if (docs.empty()) throw PreconditionError("no gold annotations match the gold corpus");
    auto sel = select_coref_config(strategies_for(c, Task::coref), rt.backends(), docs, rt.generator(),
                                   antecedent_similarity(c.similarity.threshold), c.jobs);
    write_output(a.out, "coref_scores.csv", coref_table_csv(sel.table), m);
    strategy = parse_strategy(sel.strategy);
    backend = &rt.backend(sel.model);
    std::cerr << "selected " << sel.strategy << " @ " << sel.model << '\n';
  }
  auto run = resolve_corpus(corpus, strategy, *backend, rt.generator(), c.jobs);
  warn_all("coref", run.failures);
  write_coref_outputs(a.out, run, m);
  finish_stage(a.out, "coref", m, c, corpus_hash(corpus), since(t));
  return kOk;
}

struct ClassifyArgs {
  std::string input, out = "out", gold, origin = "coref_resolved";
  bool select = false;
};

int cmd_classify(const Globals& g, const ClassifyArgs& a) {
  auto c = resolve_config(g);
  if (a.select && a.gold.empty()) throw PreconditionError("--select needs --gold");
  Runtime rt(c);
  auto t = Clock::now();
  Corpus corpus = read_corpus(a.input);
  fs::create_directories(a.out);
  Manifest m;
  std::unique_ptr<SentenceClassifier> chosen;
  LabelSource source = c.classifier == "rule" ? LabelSource::rule : LabelSource::backend;
  if (a.select) {
    auto gold = load_gold_sentences(a.gold);
    std::vector<std::unique_ptr<SentenceClassifier>> owned;
    owned.push_back(std::make_unique<RuleClassifier>());
    for (const auto& ps : strategies_for(c, Task::classify)) {
      for (ModelBackend* b : rt.backends()) {
        owned.push_back(std::make_unique<BackendClassifier>(ps, *b, rt.generator()));
      }
    }
    std::vector<SentenceClassifier*> cands;
    for (auto& o : owned) cands.push_back(o.get());
    SplitSpec split;
    split.seed = c.seed;
    auto sel = select_classifier(cands, gold, split);
    write_output(a.out, "classifier_scores.csv", classifier_table_csv(sel.table), m);
    chosen = std::move(owned[sel.best_index]);
    auto parts = split_dataset(gold, split);
    auto report = evaluate_classifier(*chosen, parts.val);
    write_output(a.out, "confusion.csv", confusion_csv(report), m);
    write_output(a.out, "classifier_report.csv", classifier_report_csv(report), m);
    source = sel.best == "rule" ? LabelSource::rule : LabelSource::backend;
    std::cerr << "selected " << sel.best << '\n';
  } else {
    chosen = make_classifier(rt);
  }
  auto labeled = label_corpus(*chosen, corpus, parse_origin(a.origin), source, c.jobs);
  write_classify_outputs(a.out, labeled, m);
  finish_stage(a.out, "classify", m, c, corpus_hash(corpus), since(t));
  return kOk;
}

struct SimplifyArgs {
  std::string input, out = "out", gold, metric = "macro_avg";
  bool select = false;
};

int cmd_simplify(const Globals& g, const SimplifyArgs& a) {
  auto c = resolve_config(g);
  if (a.select && a.gold.empty()) throw PreconditionError("--select needs --gold");
  Runtime rt(c);
  auto t = Clock::now();
  const std::string content = text::read_file(a.input);
  auto labeled = parse_labeled_jsonl(content);
  fs::create_directories(a.out);
  Manifest m;
  auto configs = simplifier_configs(rt);
  if (a.select) {
    auto gold = load_conversion_jsonl(a.gold);
    std::vector<SentenceLabel> cats;
    for (SentenceLabel l : kDecomposable) {
      if (std::any_of(gold.begin(), gold.end(), [&](const GoldConversion& x) { return x.category == l; })) {
        cats.push_back(l);
      }
    }
    auto sel = select_simplifier(cats, c.strategies, rt.backends(), gold, rt.generator(), rt.similarity(),
                                 parse_selection_metric(a.metric), c.jobs);
    for (const auto& [cat, s] : sel) {
      const std::string name(to_string(cat));
      write_output(a.out, "simplify_scores_" + name + ".csv", simplifier_table_csv(s.table), m);
      write_output(a.out, "strategy_comparison_" + name + ".csv", strategy_comparison_csv(s.table), m);
      configs[cat] = SimplifierConfig{parse_strategy(s.strategy), &rt.backend(s.model)};
      std::cerr << "selected " << name << ": " << s.strategy << " @ " << s.model << '\n';
    }
  }
  auto result = simplify_corpus(labeled, configs, rt.generator(), c.jobs);
  warn_all("simplify", result.failures);
  write_simplify_outputs(a.out, result, m);
  finish_stage(a.out, "simplify", m, c, text::sha256_hex(content), since(t));
  return kOk;
}

struct ExtractArgs {
  std::string labeled, simplified, corpus, origin = "coref_resolved", out = "out";
};

int cmd_extract(const Globals& g, const ExtractArgs& a) {
  auto c = resolve_config(g);
  if (a.corpus.empty() == a.labeled.empty()) {
    throw PreconditionError("give either --labeled (with --simplified) or --corpus");
  }
  Runtime rt(c);
  auto t = Clock::now();
  std::vector<WorkingSentence> working;
  std::string input_hash;
  if (!a.corpus.empty()) {
    Corpus corpus = read_corpus(a.corpus);
    std::vector<SentenceRecord> all;
    for (const auto& ab : corpus) {
      auto recs = sentences_of(ab, parse_origin(a.origin));
      all.insert(all.end(), recs.begin(), recs.end());
    }
    working = working_set_from_records(all);
    input_hash = corpus_hash(corpus);
  } else {
    const std::string lab = text::read_file(a.labeled);
    const std::string simp = a.simplified.empty() ? std::string() : text::read_file(a.simplified);
    working = build_working_set(parse_labeled_jsonl(lab), parse_sentence_records_jsonl(simp));
    input_hash = text::sha256_hex(lab + '\x1f' + simp);
  }
  fs::create_directories(a.out);
  auto run = extract_corpus(working, c.extract.strategy, rt.backend(c.extract.backend), rt.generator(), c.jobs);
  warn_all("extract", run.failures);
  if (!working.empty() && run.failures.size() == working.size()) {
    throw BackendFailure("extract: every sentence failed: " + run.failures.front());
  }
  auto graph = assemble_graph(run.triples, GraphOptions{c.similarity.strip_articles});
  Manifest m;
  write_extract_outputs(a.out, working, run, graph, m);
  finish_stage(a.out, "extract", m, c, input_hash, since(t));
  std::cout << graph.nodes().size() << " nodes, " << graph.edges().size() << " edges\n";
  return kOk;
}

// ---------------------------------------------------------------------------

struct ScoreArgs {
  std::string task, pred, gold, out = "out", allowlist, errors, name;
};

// {text, outputs} per line; "gold" is accepted in place of "outputs" so gold
// conversion files can be scored against themselves.
std::map<std::string, std::vector<std::string>> read_predicted_conversions(const std::string& path) {
  std::map<std::string, std::vector<std::string>> out;
  std::istringstream in(text::read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      const auto& list = j.contains("outputs") ? j.at("outputs") : j.at("gold");
      out[text::normalize(j.at("text").get<std::string>())] = list.get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("conversion prediction: ") + e.what(), line_no);
    }
  }
  return out;
}

int cmd_score(const Globals& g, const ScoreArgs& a) {
  auto c = resolve_config(g);
  Runtime rt(c);
  fs::create_directories(a.out);
  Manifest m;
  const std::string run_name = a.name.empty() ? fs::path(a.pred).stem().string() : a.name;

  if (a.task == "coref") {
    const auto sim = antecedent_similarity(c.similarity.threshold);
    auto gold = gold_from_annotations(load_annotation_jsonl(a.gold), sim);
    std::map<std::string, AnnotationSet> pred;
    for (auto& s : load_annotation_jsonl(a.pred)) pred[s.abstract_id] = std::move(s);
    if (gold.empty()) throw PreconditionError("no usable gold annotations");
    CorefCell cell;
    cell.strategy = "-";
    cell.model = run_name;
    for (const auto& [id, gset] : gold.annotations) {
      auto it = pred.find(id);
      AnnotationSet p = it == pred.end() ? AnnotationSet{id, {}, ""} : it->second;
      auto s = score_coref(p, gset, sim);
      cell.muc_f1 += s.muc.f1;
      cell.b3_f1 += s.b3.f1;
      cell.ceaf_f1 += s.ceaf.f1;
      cell.conll_f1 += s.conll;
      if (it == pred.end()) ++cell.unparsable;
    }
    const double n = static_cast<double>(gold.size());
    cell.muc_f1 /= n;
    cell.b3_f1 /= n;
    cell.ceaf_f1 /= n;
    cell.conll_f1 /= n;
    write_output(a.out, "coref_score.csv", coref_table_csv({cell}), m);
    std::cout << "CoNLL F1 " << text::format_double(cell.conll_f1) << '\n';
  } else if (a.task == "classification") {
    auto gold = load_gold_sentences(a.gold);
    std::map<std::string, SentenceLabel> pred;
    for (const auto& l : parse_labeled_jsonl(text::read_file(a.pred))) {
      pred[text::normalize(l.sentence.text)] = l.label;
    }
    std::vector<std::pair<SentenceLabel, SentenceLabel>> pairs;
    for (const auto& gs : gold) {
      auto it = pred.find(text::normalize(gs.text));
      if (it == pred.end()) {
        std::cerr << "warning: no prediction for: " << gs.text << '\n';
        continue;
      }
      pairs.emplace_back(gs.label, it->second);
    }
    auto report = report_from_pairs(pairs);
    write_output(a.out, "classifier_report.csv", classifier_report_csv(report), m);
    write_output(a.out, "confusion.csv", confusion_csv(report), m);
    std::cout << "accuracy " << text::format_double(report.accuracy) << ", macro F1 "
              << text::format_double(report.macro_f1) << '\n';
  } else if (a.task == "conversion") {
    auto gold = load_conversion_jsonl(a.gold);
    auto pred = read_predicted_conversions(a.pred);
    std::vector<ConversionItem> items;
    for (const auto& gc : gold) {
      auto it = pred.find(text::normalize(gc.text));
      items.push_back(score_conversion(it == pred.end() ? std::vector<std::string>{} : it->second, gc.gold,
                                       rt.similarity()));
    }
    auto score = aggregate_conversion(items);
    std::string csv_text = "run,macro_avg,exact_match,rmse\n";
    csv_text += csv::row({run_name, text::format_double(score.macro_avg), text::format_double(score.exact_match),
                          text::format_double(score.rmse)});
    write_output(a.out, "conversion_score.csv", csv_text, m);
    std::cout << "macro_avg " << text::format_double(score.macro_avg) << '\n';
  } else if (a.task == "triples") {
    auto gold = load_gold_triples_jsonl(a.gold);
    auto pred = predictions_by_document(load_triples_jsonl(a.pred), c.similarity.strip_articles);
    std::optional<DocumentTriples> allow;
    if (!a.allowlist.empty()) allow = load_gold_triples_jsonl(a.allowlist);
    auto docs = match_documents(pred, gold, rt.similarity(), c.similarity.match_mode, allow ? &*allow : nullptr);
    auto score = score_triples(results_of(docs));
    write_output(a.out, "triple_score.csv", triple_score_csv({{run_name, score}}), m);
    if (!a.errors.empty()) {
      ErrorHistogram h;
      for (const auto& d : docs) h += bucketize_errors(d.result, d.pred, d.gold, rt.similarity()).histogram;
      write_output(a.out, a.errors + ".csv", error_histogram_csv(h), m);
      write_output(a.out, a.errors + ".svg", error_histogram_svg(h), m);
    }
    std::cout << "micro F1 " << text::format_double(score.micro.f1) << ", macro F1 "
              << text::format_double(score.macro.f1) << '\n';
  } else {
    throw PreconditionError("unknown --task " + a.task);
  }
  finish_stage(a.out, "score", m, c, "", 0.0);
  return kOk;
}

struct AblateArgs {
  std::string corpus, gold, out = "out";
  bool no_coref = false, no_decomposition = false;
};

int cmd_ablate(const Globals& g, const AblateArgs& a) {
  auto c = resolve_config(g);
  Runtime rt(c);
  auto t = Clock::now();
  Corpus corpus = read_corpus(a.corpus);
  auto gold = load_gold_triples_jsonl(a.gold);
  std::vector<AblationConfig> configs;
  if (!a.no_coref && !a.no_decomposition) {
    configs = standard_ablations();
  } else {
    for (const auto& cfg : standard_ablations()) {
      if (cfg.toggles.coref == !a.no_coref && cfg.toggles.decomposition == !a.no_decomposition) {
        configs.push_back(cfg);
      }
    }
  }
  auto rows = run_ablation(corpus, gold, rt, configs);
  fs::create_directories(a.out);
  Manifest m;
  const std::string table = ablation_csv(rows);
  write_output(a.out, "ablation.csv", table, m);
  finish_stage(a.out, "ablate", m, c, corpus_hash(corpus), since(t));
  std::cout << table;
  return kOk;
}

struct PipelineArgs {
  std::string corpus, out = "out";
  bool no_coref = false, no_decomposition = false;
};

int cmd_pipeline(const Globals& g, const PipelineArgs& a) {
  auto c = resolve_config(g);
  if (a.no_coref) c.coref_enabled = false;
  if (a.no_decomposition) c.decomposition_enabled = false;
  Runtime rt(c);
  Corpus corpus = read_corpus(a.corpus);
  auto result = run_pipeline(corpus, rt, StageToggles{c.coref_enabled, c.decomposition_enabled});
  write_pipeline(result, a.out, c);
  std::cout << result.graph.nodes().size() << " nodes, " << result.graph.edges().size() << " edges\n";
  return kOk;
}

struct FetchArgs {
  std::string query, out = "corpus.jsonl", from, to;
  int max_results = 20;
};

int cmd_fetch(const Globals& g, const FetchArgs& a) {
  auto c = resolve_config(g);
  PubMedOptions o;
  o.cache_dir = c.cache_dir;
  o.email = c.pubmed.email;
  o.tool = c.pubmed.tool;
  o.requests_per_second = c.pubmed.requests_per_second;
  if (!c.pubmed.api_key_env.empty()) {
    if (const char* k = std::getenv(c.pubmed.api_key_env.c_str())) o.api_key = k;
  }
  if (const char* base = std::getenv("CODEKG_EUTILS_BASE")) o.base_url = base;
  std::optional<DateRange> range;
  if (!a.from.empty() || !a.to.empty()) range = DateRange{a.from, a.to};
  Corpus corpus = fetch_pubmed(a.query, a.max_results, range, o);
  write_corpus(a.out, corpus);
  std::cout << corpus.size() << " abstracts\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knowledge graph construction from abstracts"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Pipeline TOML file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Random seed");
  app.add_option("--cache-dir", g.cache_dir, "Generation and download cache");
  app.add_option("--jobs", g.jobs, "Worker threads per stage (default: CPU count)");
  app.add_option("--backend", g.backend_overrides, "Point a backend at an endpoint: name=url");

  int code = kOk;
  auto bind = [&](CLI::App* sub, auto fn) { sub->callback([&code, fn] { code = fn(); }); sub->fallthrough(); };

  CorefArgs coref;
  auto* s = app.add_subcommand("coref", "Resolve coreferences in a corpus");
  s->add_option("--corpus", coref.corpus, "Corpus JSONL or directory of .txt files")->required();
  s->add_option("--out", coref.out, "Output directory");
  s->add_flag("--select", coref.select, "Grid-search strategy x backend on gold first");
  s->add_option("--gold", coref.gold, "Gold annotation JSONL");
  s->add_option("--gold-corpus", coref.gold_corpus, "Abstracts for the gold set (default: --corpus)");
  bind(s, [&] { return cmd_coref(g, coref); });

  ClassifyArgs classify;
  s = app.add_subcommand("classify", "Split abstracts into sentences and label them");
  s->add_option("--input", classify.input, "Corpus JSONL (usually resolved.jsonl)")->required();
  s->add_option("--origin", classify.origin, "Origin recorded on sentences")
      ->check(CLI::IsMember({"original", "coref_resolved"}));
  s->add_option("--out", classify.out, "Output directory");
  s->add_flag("--select", classify.select, "Pick the classifier on a gold split first");
  s->add_option("--gold", classify.gold, "Gold sentences (JSONL or CSV)");
  bind(s, [&] { return cmd_classify(g, classify); });

  SimplifyArgs simplify;
  s = app.add_subcommand("simplify", "Decompose non-simple sentences");
  s->add_option("--input", simplify.input, "labeled.jsonl")->required();
  s->add_option("--out", simplify.out, "Output directory");
  s->add_flag("--select", simplify.select, "Grid-search per category on gold conversions first");
  s->add_option("--gold", simplify.gold, "Gold conversion JSONL");
  s->add_option("--metric", simplify.metric, "Selection metric")->check(CLI::IsMember({"macro_avg", "exact_match"}));
  bind(s, [&] { return cmd_simplify(g, simplify); });

  ExtractArgs extract;
  s = app.add_subcommand("extract", "Extract triples and assemble the graph");
  s->add_option("--labeled", extract.labeled, "labeled.jsonl");
  s->add_option("--simplified", extract.simplified, "simplified.jsonl");
  s->add_option("--corpus", extract.corpus, "Extract from every sentence of a corpus instead");
  s->add_option("--origin", extract.origin, "Origin of corpus sentences")
      ->check(CLI::IsMember({"original", "coref_resolved"}));
  s->add_option("--out", extract.out, "Output directory");
  bind(s, [&] { return cmd_extract(g, extract); });

  ScoreArgs score;
  s = app.add_subcommand("score", "Score predictions against gold");
  s->add_option("--task", score.task, "What to score")
      ->required()
      ->check(CLI::IsMember({"coref", "classification", "conversion", "triples"}));
  s->add_option("--pred", score.pred, "Predictions")->required()->check(CLI::ExistingFile);
  s->add_option("--gold", score.gold, "Gold file")->required()->check(CLI::ExistingFile);
  s->add_option("--allowlist", score.allowlist, "Triples: excused predictions (gold triples JSONL)");
  s->add_option("--errors", score.errors, "Triples: write an error histogram with this basename");
  s->add_option("--name", score.name, "Run name in the score table");
  s->add_option("--out", score.out, "Output directory");
  bind(s, [&] { return cmd_score(g, score); });

  AblateArgs ablate;
  s = app.add_subcommand("ablate", "Compare pipeline variants against gold triples");
  s->add_option("--corpus", ablate.corpus, "Corpus")->required();
  s->add_option("--gold", ablate.gold, "Gold triples JSONL")->required()->check(CLI::ExistingFile);
  s->add_flag("--no-coref", ablate.no_coref, "Only the variant without coreference resolution");
  s->add_flag("--no-decomposition", ablate.no_decomposition, "Only the variant without decomposition");
  s->add_option("--out", ablate.out, "Output directory");
  bind(s, [&] { return cmd_ablate(g, ablate); });

  PipelineArgs pipe;
  s = app.add_subcommand("pipeline", "Run every stage");
  s->add_option("--corpus", pipe.corpus, "Corpus")->required();
  s->add_flag("--no-coref", pipe.no_coref, "Skip coreference resolution");
  s->add_flag("--no-decomposition", pipe.no_decomposition, "Skip classification and decomposition");
  s->add_option("--out", pipe.out, "Output directory");
  bind(s, [&] { return cmd_pipeline(g, pipe); });

  FetchArgs fetch;
  s = app.add_subcommand("fetch", "Download PubMed abstracts");
  s->add_option("--query", fetch.query, "Search term")->required();
  s->add_option("--max", fetch.max_results, "Maximum abstracts");
  s->add_option("--from", fetch.from, "Earliest publication date (YYYY[/MM[/DD]])");
  s->add_option("--to", fetch.to, "Latest publication date");
  s->add_option("--out", fetch.out, "Corpus JSONL to write");
  bind(s, [&] { return cmd_fetch(g, fetch); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfig;
  } catch (const BackendFailure& e) {
    std::cerr << "backend failure: " << e.what() << '\n';
    return kBackend;
  } catch (const ParseError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return kSchema;
  } catch (const DuplicateId& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return kSchema;
  } catch (const SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return kSchema;
  } catch (const StageError& e) {
    std::cerr << "stage failed: " << e.what() << '\n';
    return kOther;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return code;
}
