#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "codekg/http.hpp"

namespace codekg {

using SimilarityFn = std::function<double(std::string_view, std::string_view)>;

// Lowercase, split on whitespace, drop punctuation at token edges, then cosine
// of the term-frequency vectors. Identical token bags score exactly 1.
double token_tf_cosine(std::string_view a, std::string_view b);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

enum class SimilarityKind { token_tf_cosine, embedding_endpoint };

std::string_view to_string(SimilarityKind k);
SimilarityKind parse_similarity_kind(std::string_view s);

// A similarity function plus the acceptance threshold used for matching.
class Similarity {
 public:
  Similarity();
  Similarity(SimilarityFn fn, double threshold, std::string description);

  static Similarity token_tf(double threshold = 0.9, bool strip_articles = false);

  double operator()(std::string_view a, std::string_view b) const { return fn_(a, b); }
  bool matches(std::string_view a, std::string_view b) const;
  double threshold() const { return threshold_; }
  const std::string& description() const { return description_; }

 private:
  SimilarityFn fn_;
  double threshold_ = 0.9;
  std::string description_;
};

struct EmbeddingConfig {
  // Base URL such as http://host:8000/v1; "/embeddings" is appended unless
  // already present.
  std::string endpoint;
  std::string model;
  std::string auth_env;
  // Vectors are cached under <cache_dir>/embed/<sha256>.json; empty keeps
  // them in memory only.
  std::string cache_dir;
};

// OpenAI-style embeddings client: POST {model, input: [text]} and read
// data[0].embedding. Throws EmbeddingUnavailable on any failure.
class EmbeddingClient {
 public:
  explicit EmbeddingClient(EmbeddingConfig config,
                           http::Transport transport = http::default_transport());

  std::vector<double> embed(const std::string& text);
  std::size_t http_calls() const;

 private:
  EmbeddingConfig config_;
  http::Transport transport_;
  std::string url_;
  mutable std::mutex mu_;
  std::map<std::string, std::vector<double>> memo_;
  std::size_t http_calls_ = 0;
};

// Cosine of endpoint embeddings. With fallback set, an unavailable endpoint
// degrades to token_tf_cosine and a warning is written to stderr once;
// otherwise EmbeddingUnavailable propagates.
Similarity embedding_similarity(std::shared_ptr<EmbeddingClient> client, double threshold,
                                bool fallback);

}  // namespace codekg
