#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include <json.hpp>

#include "codekg/error.hpp"
#include "codekg/pubmed.hpp"
#include "test_support.hpp"

using namespace codekg;
using testing_support::TempDir;
using testing_support::fixture;
using testing_support::read;

namespace {

// Serves the recorded esearch/efetch bodies and remembers every URL asked for.
struct FakeEutils {
  std::string esearch = read(fixture("pubmed/esearch.json"));
  std::string efetch = read(fixture("pubmed/efetch.xml"));
  std::vector<std::string> urls;
  int fail_first = 0;
  int fail_status = 429;

  http::Transport transport() {
    return [this](const http::Request& req) {
      urls.push_back(req.url);
      if (fail_first > 0) {
        --fail_first;
        return http::Response{fail_status, "slow down"};
      }
      if (req.url.find("/esearch.fcgi") != std::string::npos) return http::Response{200, esearch};
      if (req.url.find("/efetch.fcgi") != std::string::npos) return http::Response{200, efetch};
      return http::Response{404, ""};
    };
  }
};

PubMedOptions options(const TempDir& dir) {
  PubMedOptions o;
  o.base_url = "http://eutils.test";
  o.requests_per_second = 1000.0;
  o.retry.base_delay = std::chrono::milliseconds(1);
  o.cache_dir = dir.str();
  return o;
}

}  // namespace

TEST(Esearch, Ids) {
  auto ids = parse_esearch_ids(read(fixture("pubmed/esearch.json")));
  EXPECT_EQ(ids, (std::vector<std::string>{"38012345", "37998877"}));
  EXPECT_TRUE(parse_esearch_ids(R"({"esearchresult":{"count":"0","idlist":[]}})").empty());
  EXPECT_THROW(parse_esearch_ids("<html>busy</html>"), SchemaError);
  EXPECT_THROW(parse_esearch_ids(R"({"error":"bad"})"), SchemaError);
}

TEST(Efetch, LabelledSectionsEntitiesAndMissingAbstracts) {
  auto corpus = parse_efetch_xml(read(fixture("pubmed/efetch.xml")));
  ASSERT_EQ(corpus.size(), 2u);
  EXPECT_EQ(corpus[0].id, "38012345");
  EXPECT_EQ(corpus[0].source, Source::pubmed);
  EXPECT_EQ(corpus[0].text,
            "BACKGROUND: There are few cases of pulmonary granulomatous changes secondary to primary biliary "
            "cirrhosis (PBC). CONCLUSION: Diagnosis of PBC should be considered in patients with lung nodules & "
            "abnormal liver serology.");
  EXPECT_EQ(corpus[1].text, "Low-dose CT screening reduced lung cancer mortality by 20% in the trial.");
  EXPECT_TRUE(parse_efetch_xml("<PubmedArticleSet></PubmedArticleSet>").empty());
}

TEST(PubMedClient, FetchesThenServesFromCache) {
  TempDir dir;
  FakeEutils fake;
  PubMedClient client(options(dir), fake.transport());
  auto corpus = client.fetch("lung cancer", 2);
  ASSERT_EQ(corpus.size(), 2u);
  EXPECT_EQ(client.http_calls(), 2u);
  ASSERT_EQ(fake.urls.size(), 2u);
  EXPECT_EQ(fake.urls[0].rfind("http://eutils.test/esearch.fcgi?db=pubmed&retmode=json&retmax=2&term=lung", 0), 0u);
  EXPECT_NE(fake.urls[1].find("efetch.fcgi?db=pubmed&rettype=abstract&retmode=xml&id=38012345%2C37998877"),
            std::string::npos);
  EXPECT_NE(fake.urls[0].find("&tool=codekg"), std::string::npos);
  EXPECT_EQ(fake.urls[0].find("api_key"), std::string::npos);

  const std::string path = client.cache_path("lung cancer", 2, std::nullopt);
  ASSERT_TRUE(std::filesystem::exists(path));
  EXPECT_EQ(std::filesystem::path(path).parent_path().filename(), "pubmed");
  auto entry = nlohmann::json::parse(read(path));
  EXPECT_EQ(entry["esearch"], fake.esearch);
  EXPECT_EQ(entry["efetch"], fake.efetch);

  FakeEutils second;
  PubMedClient warm(options(dir), second.transport());
  EXPECT_EQ(warm.fetch("lung cancer", 2), corpus);
  EXPECT_EQ(warm.http_calls(), 0u);
  EXPECT_TRUE(second.urls.empty());
}

TEST(PubMedClient, DateRangeAndApiKeyInUrls) {
  TempDir dir;
  FakeEutils fake;
  auto o = options(dir);
  o.api_key = "k3y";
  o.email = "a@b.org";
  PubMedClient client(o, fake.transport());
  client.fetch("statins", 5, DateRange{"2020/01", "2021"});
  ASSERT_EQ(fake.urls.size(), 2u);
  EXPECT_NE(fake.urls[0].find("&datetype=pdat&mindate=2020%2F01&maxdate=2021"), std::string::npos);
  for (const auto& u : fake.urls) {
    EXPECT_NE(u.find("&api_key=k3y"), std::string::npos);
    EXPECT_NE(u.find("&email=a%40b.org"), std::string::npos);
  }
  EXPECT_NE(client.cache_path("statins", 5, DateRange{"2020/01", "2021"}), client.cache_path("statins", 5, std::nullopt));
  EXPECT_NE(client.cache_path("statins", 5, std::nullopt), client.cache_path("statins", 6, std::nullopt));
}

TEST(PubMedClient, Errors) {
  TempDir dir;
  FakeEutils fake;
  PubMedClient client(options(dir), fake.transport());
  EXPECT_THROW(client.fetch("x", 0), PreconditionError);
  EXPECT_TRUE(fake.urls.empty());

  fake.esearch = R"({"esearchresult":{"count":"0","idlist":[]}})";
  EXPECT_THROW(client.fetch("nothing matches", 3), EmptyResult);
  EXPECT_EQ(fake.urls.size(), 1u);
  EXPECT_FALSE(std::filesystem::exists(client.cache_path("nothing matches", 3, std::nullopt)));

  fake.esearch = read(fixture("pubmed/esearch.json"));
  fake.efetch = "<PubmedArticleSet></PubmedArticleSet>";
  EXPECT_THROW(client.fetch("no abstracts", 3), EmptyResult);

  fake.esearch = "<html>maintenance</html>";
  EXPECT_THROW(client.fetch("broken", 3), SchemaError);
}

TEST(PubMedClient, RetriesRateLimitThenSucceeds) {
  TempDir dir;
  FakeEutils fake;
  fake.fail_first = 2;
  PubMedClient client(options(dir), fake.transport());
  EXPECT_EQ(client.fetch("lung cancer", 2).size(), 2u);
  EXPECT_EQ(fake.urls.size(), 4u);

  FakeEutils always;
  always.fail_first = 100;
  TempDir other;
  PubMedClient limited(options(other), always.transport());
  EXPECT_THROW(limited.fetch("lung cancer", 2), RateLimited);
  EXPECT_EQ(always.urls.size(), 5u);

  FakeEutils server_error;
  server_error.fail_first = 1;
  server_error.fail_status = 500;
  PubMedClient failing(options(other), server_error.transport());
  EXPECT_THROW(failing.fetch("lung cancer", 2), BackendError);
  EXPECT_EQ(server_error.urls.size(), 1u);
}

TEST(RateLimiter, SpacesCalls) {
  RateLimiter limiter(50.0);
  auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < 4; ++i) limiter.acquire();
  auto elapsed = std::chrono::steady_clock::now() - start;
  EXPECT_GE(elapsed, std::chrono::milliseconds(55));
}

TEST(PubMedLive, FetchesRealAbstracts) {
  const char* flag = std::getenv("CODEKG_NETWORK_TESTS");
  if (!flag || std::string(flag) != "1") GTEST_SKIP() << "set CODEKG_NETWORK_TESTS=1 to query NCBI";
  TempDir dir;
  PubMedOptions o;
  o.cache_dir = dir.str();
  auto corpus = fetch_pubmed("lung cancer screening", 3, std::nullopt, o);
  EXPECT_FALSE(corpus.empty());
  for (const auto& a : corpus) EXPECT_FALSE(a.text.empty());
}
