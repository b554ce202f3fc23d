#pragma once

#include <atomic>
#include <chrono>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "codekg/corpus.hpp"
#include "codekg/http.hpp"
#include "codekg/retry.hpp"

namespace codekg {

struct DateRange {
  std::string from;  // "YYYY", "YYYY/MM" or "YYYY/MM/DD"
  std::string to;
};

struct PubMedOptions {
  std::string base_url = "https://eutils.ncbi.nlm.nih.gov/entrez/eutils";
  double requests_per_second = 3.0;
  RetryPolicy retry{};
  // Responses are stored verbatim under <cache_dir>/pubmed/<sha256>.json.
  std::string cache_dir = "cache";
  std::string api_key;
  std::string tool = "codekg";
  std::string email;
};

// Spaces calls at least 1/rate seconds apart. Safe to share between threads.
class RateLimiter {
 public:
  explicit RateLimiter(double per_second);
  void acquire();

 private:
  std::chrono::nanoseconds interval_;
  std::chrono::steady_clock::time_point next_;
  std::mutex mu_;
};

// E-utilities client: esearch for PMIDs, then efetch for the abstracts.
class PubMedClient {
 public:
  explicit PubMedClient(PubMedOptions options,
                        http::Transport transport = http::default_transport());

  // Throws PreconditionError when max_results < 1, EmptyResult when the search
  // matches nothing, NetworkError / RateLimited after retries are exhausted.
  Corpus fetch(const std::string& query, int max_results,
               const std::optional<DateRange>& range = std::nullopt);

  // Path of the cache entry for a given request.
  std::string cache_path(const std::string& query, int max_results,
                         const std::optional<DateRange>& range) const;

  std::size_t http_calls() const { return http_calls_.load(); }

 private:
  std::string get(const std::string& url);

  PubMedOptions options_;
  http::Transport transport_;
  RateLimiter limiter_;
  std::atomic<std::size_t> http_calls_{0};
};

Corpus fetch_pubmed(const std::string& query, int max_results,
                    const std::optional<DateRange>& range = std::nullopt,
                    PubMedOptions options = {});

std::vector<std::string> parse_esearch_ids(std::string_view esearch_json);

// Abstracts from an efetch PubmedArticleSet document. Labelled AbstractText
// sections are joined as "LABEL: text"; inline markup is stripped and XML
// entities decoded. Articles without abstract text are skipped.
Corpus parse_efetch_xml(std::string_view xml);

}  // namespace codekg
