#include "codekg/similarity.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include <json.hpp>

#include "codekg/error.hpp"
#include "codekg/text.hpp"

namespace codekg {

using nlohmann::json;

namespace {

std::map<std::string, int> term_frequencies(std::string_view s) {
  std::map<std::string, int> tf;
  for (const auto& tok : text::split_whitespace(text::to_lower(s))) {
    auto core = text::strip_edge_punctuation(tok);
    if (!core.empty()) ++tf[std::string(core)];
  }
  return tf;
}

}  // namespace

double token_tf_cosine(std::string_view a, std::string_view b) {
  auto ta = term_frequencies(a);
  auto tb = term_frequencies(b);
  if (ta.empty() && tb.empty()) return 1.0;
  if (ta.empty() || tb.empty()) return 0.0;
  if (ta == tb) return 1.0;
  double dot = 0, na = 0, nb = 0;
  for (const auto& [t, c] : ta) {
    na += static_cast<double>(c) * c;
    auto it = tb.find(t);
    if (it != tb.end()) dot += static_cast<double>(c) * it->second;
  }
  for (const auto& [t, c] : tb) nb += static_cast<double>(c) * c;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty()) return 0.0;
  if (a == b) return 1.0;
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

std::string_view to_string(SimilarityKind k) {
  return k == SimilarityKind::token_tf_cosine ? "token_tf_cosine" : "embedding_endpoint";
}

SimilarityKind parse_similarity_kind(std::string_view s) {
  if (s == "token_tf_cosine") return SimilarityKind::token_tf_cosine;
  if (s == "embedding_endpoint") return SimilarityKind::embedding_endpoint;
  throw ConfigError("unknown similarity kind: " + std::string(s));
}

Similarity::Similarity() : Similarity(token_tf_cosine, 0.9, "token_tf_cosine") {}

Similarity::Similarity(SimilarityFn fn, double threshold, std::string description)
    : fn_(std::move(fn)), threshold_(threshold), description_(std::move(description)) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw ConfigError("similarity threshold must lie in [0,1]");
  }
}

Similarity Similarity::token_tf(double threshold, bool strip_articles) {
  if (!strip_articles) return Similarity(token_tf_cosine, threshold, "token_tf_cosine");
  return Similarity(
      [](std::string_view a, std::string_view b) {
        return token_tf_cosine(text::strip_leading_article(text::normalize(a)),
                               text::strip_leading_article(text::normalize(b)));
      },
      threshold, "token_tf_cosine+strip_articles");
}

bool Similarity::matches(std::string_view a, std::string_view b) const {
  // Absorbs rounding in cosines that are mathematically equal to the threshold.
  return fn_(a, b) >= threshold_ - 1e-12;
}

EmbeddingClient::EmbeddingClient(EmbeddingConfig config, http::Transport transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
  std::string base = config_.endpoint;
  while (!base.empty() && base.back() == '/') base.pop_back();
  url_ = text::ends_with_ci(base, "/embeddings") ? base : base + "/embeddings";
}

std::size_t EmbeddingClient::http_calls() const {
  std::lock_guard lock(mu_);
  return http_calls_;
}

std::vector<double> EmbeddingClient::embed(const std::string& input) {
  const std::string key = text::sha256_hex(config_.model + '\x1f' + input);
  {
    std::lock_guard lock(mu_);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  std::string path;
  if (!config_.cache_dir.empty()) {
    path = (std::filesystem::path(config_.cache_dir) / "embed" / (key + ".json")).string();
    if (std::filesystem::exists(path)) {
      try {
        auto v = json::parse(text::read_file(path)).at("embedding").get<std::vector<double>>();
        std::lock_guard lock(mu_);
        memo_[key] = v;
        return v;
      } catch (const json::exception&) {
      }
    }
  }
  http::Request req;
  req.method = "POST";
  req.url = url_;
  req.body = json{{"model", config_.model}, {"input", json::array({input})}}.dump();
  if (!config_.auth_env.empty()) {
    if (const char* k = std::getenv(config_.auth_env.c_str())) {
      req.headers.emplace_back("Authorization", std::string("Bearer ") + k);
    }
  }
  http::Response resp;
  try {
    {
      std::lock_guard lock(mu_);
      ++http_calls_;
    }
    resp = transport_(req);
  } catch (const Error& e) {
    throw EmbeddingUnavailable(std::string("embedding endpoint unreachable: ") + e.what());
  }
  if (resp.status != 200) {
    throw EmbeddingUnavailable("embedding endpoint returned HTTP " + std::to_string(resp.status));
  }
  std::vector<double> v;
  try {
    v = json::parse(resp.body).at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception&) {
    throw EmbeddingUnavailable("embedding response has no data[0].embedding");
  }
  if (v.empty()) throw EmbeddingUnavailable("embedding endpoint returned an empty vector");
  if (!path.empty()) text::write_file_atomic(path, json{{"model", config_.model}, {"embedding", v}}.dump());
  std::lock_guard lock(mu_);
  memo_[key] = v;
  return v;
}

Similarity embedding_similarity(std::shared_ptr<EmbeddingClient> client, double threshold,
                                bool fallback) {
  auto warned = std::make_shared<std::atomic<bool>>(false);
  return Similarity(
      [client, fallback, warned](std::string_view a, std::string_view b) {
        if (text::normalize(a) == text::normalize(b)) return 1.0;
        try {
          return cosine(client->embed(std::string(a)), client->embed(std::string(b)));
        } catch (const EmbeddingUnavailable& e) {
          if (!fallback) throw;
          if (!warned->exchange(true)) {
            std::cerr << "warning: " << e.what() << "; falling back to token_tf_cosine\n";
          }
          return token_tf_cosine(a, b);
        }
      },
      threshold, fallback ? "embedding_endpoint+fallback" : "embedding_endpoint");
}

}  // namespace codekg
