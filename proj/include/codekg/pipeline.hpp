#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "codekg/backend.hpp"
#include "codekg/config.hpp"
#include "codekg/coref.hpp"
#include "codekg/corpus.hpp"
#include "codekg/eval.hpp"
#include "codekg/relex.hpp"
#include "codekg/simplify.hpp"
#include "codekg/syntax.hpp"

namespace codekg {

// Raised when a stage cannot continue; the message starts with the stage name.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& message)
      : Error(stage + ": " + message), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// Backends, generation cache and similarity built from a validated config.
class Runtime {
 public:
  explicit Runtime(PipelineConfig config, http::Transport transport = http::default_transport());

  const PipelineConfig& config() const { return config_; }
  ModelBackend& backend(const std::string& name);
  std::vector<ModelBackend*> backends();
  Generator& generator() { return generator_; }
  const Similarity& similarity() const { return similarity_; }
  int jobs() const { return config_.jobs; }

 private:
  PipelineConfig config_;
  std::map<std::string, std::unique_ptr<ModelBackend>> backends_;
  Generator generator_;
  Similarity similarity_;
};

struct StageToggles {
  bool coref = true;
  bool decomposition = true;
};

struct CorefRun {
  Corpus resolved;  // unresolvable abstracts keep their text
  std::vector<AnnotationSet> annotations;
  std::vector<std::string> failures;  // "<abstract id>: <message>"
};

// Predicts annotations for every abstract and rewrites it. Per-abstract
// failures are recorded; if every abstract hits a backend failure the stage
// throws BackendFailure.
CorefRun resolve_corpus(const Corpus& corpus, Strategy strategy, ModelBackend& backend,
                        Generator& generator, int jobs = 1);

// Classifier named by the config ("rule" or the classify stage backend).
std::unique_ptr<SentenceClassifier> make_classifier(Runtime& runtime);

struct PipelineResult {
  StageToggles toggles;
  Corpus input;
  CorefRun coref;  // resolved == input when coref is off
  std::vector<LabeledSentence> labeled;
  SimplifyResult simplified;
  std::vector<WorkingSentence> working;
  ExtractionRun extraction;
  KnowledgeGraph graph;
  std::map<std::string, double> seconds;  // stage -> wall time
};

// coref -> classify -> simplify -> extract -> assemble. With decomposition
// off every sentence goes straight to extraction.
PipelineResult run_pipeline(const Corpus& corpus, Runtime& runtime, StageToggles toggles);

std::map<SentenceLabel, SimplifierConfig> simplifier_configs(Runtime& runtime);

// Run record: hashes of config and input, per-stage counts, and output files
// (relative to the output directory) with their sha256. Timings are kept in
// a separate timings.json so the manifest is reproducible.
struct Manifest {
  std::string command;
  std::string config_hash;
  std::string corpus_hash;
  std::map<std::string, std::size_t> counts;
  std::map<std::string, std::string> outputs;  // file -> sha256

  std::string to_json() const;
  static Manifest parse(std::string_view json_text);

  // Adds another stage's entries; later values win.
  void merge(const Manifest& other);
};

// Writes `content` to out_dir/name and records it in the manifest.
void write_output(const std::string& out_dir, const std::string& name, std::string_view content,
                  Manifest& manifest);

// Loads out_dir/manifest.json (or an empty manifest), merges `update`, and
// writes it back atomically.
void update_manifest(const std::string& out_dir, const Manifest& update);
void write_timings(const std::string& out_dir, const std::map<std::string, double>& seconds);

// Stage writers shared by the stage subcommands and the full pipeline so both
// produce identical files.
void write_coref_outputs(const std::string& out_dir, const CorefRun& run, Manifest& manifest);
void write_classify_outputs(const std::string& out_dir, const std::vector<LabeledSentence>& labeled,
                            Manifest& manifest);
void write_simplify_outputs(const std::string& out_dir, const SimplifyResult& result,
                            Manifest& manifest);
void write_extract_outputs(const std::string& out_dir, const std::vector<WorkingSentence>& working,
                           const ExtractionRun& run, const KnowledgeGraph& graph,
                           Manifest& manifest);

// Runs the pipeline and writes every stage's outputs plus manifest.json and
// timings.json.
Manifest write_pipeline(const PipelineResult& result, const std::string& out_dir,
                        const PipelineConfig& config);

// ---------------------------------------------------------------------------
// Ablation

struct AblationRow {
  std::string configuration;
  std::size_t triples = 0;
  TripleScore score;
};

struct AblationConfig {
  std::string name;
  StageToggles toggles;
};

std::vector<AblationConfig> standard_ablations();

// Gold versus itself first ("Human Standard"), then one row per
// configuration. Predictions are deduplicated per document on the normalized
// triple; precision and recall are pooled over documents.
std::vector<AblationRow> run_ablation(const Corpus& corpus, const DocumentTriples& gold,
                                      Runtime& runtime,
                                      const std::vector<AblationConfig>& configs = standard_ablations());

// Configuration,Triples,Precision,Recall,F1 Score
std::string ablation_csv(const std::vector<AblationRow>& rows);

// Per-document prediction lists from an extraction run, deduplicated.
DocumentTriples predictions_by_document(const std::vector<Triple>& triples,
                                        bool strip_articles = false);

}  // namespace codekg
