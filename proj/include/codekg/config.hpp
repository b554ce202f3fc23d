#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "codekg/backend.hpp"
#include "codekg/eval.hpp"
#include "codekg/prompts.hpp"
#include "codekg/similarity.hpp"
#include "codekg/syntax.hpp"

namespace codekg {

struct BackendSpec {
  std::string name;
  std::string kind = "mock";  // "mock" or "http"
  // mock: JSONL replay scenario (see load_scenario); may be empty.
  std::string scenario;
  // http
  std::string endpoint;
  std::string model;
  std::string auth_env;
  GenerationParams params;
  int max_in_flight = 4;
  int timeout_seconds = 120;
  int max_attempts = 5;

  bool operator==(const BackendSpec& o) const;
};

struct StageSpec {
  Strategy strategy = Strategy::COT_FICL;
  std::string backend;

  bool operator==(const StageSpec&) const = default;
};

struct SimilaritySpec {
  SimilarityKind kind = SimilarityKind::token_tf_cosine;
  double threshold = 0.9;
  MatchMode match_mode = MatchMode::per_field;
  bool strip_articles = false;
  std::string endpoint;
  std::string model;
  std::string auth_env;
  bool fallback = false;

  bool operator==(const SimilaritySpec&) const = default;
};

struct PubMedSpec {
  std::string email;
  std::string api_key_env;
  std::string tool = "codekg";
  double requests_per_second = 3.0;

  bool operator==(const PubMedSpec&) const = default;
};

struct PipelineConfig {
  std::uint64_t seed = 13;
  std::string cache_dir = "cache";
  int jobs = 0;  // < 1: one per logical CPU
  std::vector<Strategy> strategies{std::begin(kAllStrategies), std::end(kAllStrategies)};
  std::vector<BackendSpec> backends;  // sorted by name

  bool coref_enabled = true;
  bool decomposition_enabled = true;

  StageSpec coref;
  std::string classifier = "rule";  // "rule" or "backend"
  StageSpec classify;
  std::string classify_examples;  // gold sentences for few-shot slots
  std::map<SentenceLabel, StageSpec> simplify;
  StageSpec extract;

  SimilaritySpec similarity;
  PubMedSpec pubmed;

  bool operator==(const PipelineConfig&) const = default;

  const BackendSpec* find_backend(const std::string& name) const;

  // Throws ConfigError naming the first problem: an undefined backend, an
  // unknown classifier, a bad threshold, a missing simplify category.
  void validate() const;

  // Canonical TOML text; parse_config(to_toml()) == *this.
  std::string to_toml() const;
  std::string hash() const;
};

// Throws ConfigError on TOML syntax errors, unknown keys and bad values.
// Relative scenario and example paths are kept as written.
PipelineConfig parse_config(std::string_view toml_text);

// Like parse_config; relative scenario and example paths are resolved against
// the file's directory.
PipelineConfig load_config(const std::string& path);

// A configuration driving every stage with one mock backend.
PipelineConfig default_config(const std::string& backend_name = "mock",
                              const std::string& scenario = "");

// Applies a --backend name=url override: the named backend becomes an HTTP
// backend at url (created when absent, with the name as model id).
void apply_backend_override(PipelineConfig& config, const std::string& assignment);

}  // namespace codekg
