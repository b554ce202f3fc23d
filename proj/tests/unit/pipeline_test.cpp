#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "codekg/config.hpp"
#include "codekg/coref.hpp"
#include "codekg/csv.hpp"
#include "codekg/error.hpp"
#include "codekg/pipeline.hpp"
#include "test_support.hpp"

using namespace codekg;
using testing_support::TempDir;
using testing_support::fixture;
using testing_support::read;
using testing_support::run_cli;

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kStageFiles = {
    "coref_annotations.jsonl", "resolved.jsonl", "labeled.jsonl", "simplified.jsonl", "working_set.jsonl",
    "triples.jsonl",           "graph.jsonl",    "graph.csv",     "graph.dot"};

std::string replay(const std::string& rel) { return fixture("replay/" + rel); }

std::string globals(const std::string& cache) {
  return "--config " + replay("config.toml") + " --cache-dir " + cache;
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

std::size_t line_count(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

void write(const std::string& path, const std::string& content) {
  std::ofstream(path, std::ios::binary) << content;
}

}  // namespace

TEST(Pipeline, SmokeOnThreeAbstracts) {
  TempDir dir;
  ASSERT_EQ(run_cli(globals(dir / "cache") + " pipeline --corpus " + replay("corpus_small.jsonl") + " --out " +
                    (dir / "out")),
            0);
  const std::string dot = read(dir / "out/graph.dot");
  EXPECT_EQ(dot.rfind("digraph kg {", 0), 0u);
  EXPECT_NE(dot.find("->"), std::string::npos);
  EXPECT_EQ(dot.back(), '\n');
  EXPECT_GT(line_count(read(dir / "out/graph.jsonl")), 0u);
  if (std::system("command -v dot >/dev/null 2>&1") == 0) {
    EXPECT_EQ(std::system(("dot -Tsvg " + (dir / "out/graph.dot") + " -o " + (dir / "g.svg")).c_str()), 0);
  }
}

TEST(Pipeline, GoldenCountsAndHashes) {
  TempDir dir;
  ASSERT_EQ(run_cli(globals(dir / "cache") + " pipeline --corpus " + replay("corpus.jsonl") + " --out " +
                    (dir / "out")),
            0);
  auto expected = nlohmann::json::parse(read(replay("expected_manifest.json")));
  auto got = Manifest::parse(read(dir / "out/manifest.json"));
  EXPECT_EQ(got.command, "pipeline");
  for (const auto& [k, v] : expected["counts"].items()) EXPECT_EQ(got.counts[k], v.get<std::size_t>()) << k;
  for (const auto& [k, v] : expected["outputs"].items()) EXPECT_EQ(got.outputs[k], v.get<std::string>()) << k;
  EXPECT_EQ(got.counts.size(), expected["counts"].size());
  // Every recorded hash matches the file on disk.
  for (const auto& [file, hash] : got.outputs) EXPECT_EQ(text::sha256_hex(read(dir / ("out/" + file))), hash) << file;
  EXPECT_TRUE(fs::exists(dir / "out/timings.json"));
}

TEST(Pipeline, ChainedSubcommandsEqualPipeline) {
  TempDir dir;
  const std::string g = globals(dir / "cache");
  const std::string chain = dir / "chain";
  ASSERT_EQ(run_cli(g + " pipeline --corpus " + replay("corpus.jsonl") + " --out " + (dir / "whole")), 0);
  ASSERT_EQ(run_cli(g + " coref --corpus " + replay("corpus.jsonl") + " --out " + chain), 0);
  ASSERT_EQ(run_cli(g + " classify --input " + chain + "/resolved.jsonl --out " + chain), 0);
  ASSERT_EQ(run_cli(g + " simplify --input " + chain + "/labeled.jsonl --out " + chain), 0);
  ASSERT_EQ(run_cli(g + " extract --labeled " + chain + "/labeled.jsonl --simplified " + chain +
                    "/simplified.jsonl --out " + chain),
            0);
  for (const auto& f : kStageFiles) EXPECT_EQ(read(chain + "/" + f), read(dir / ("whole/" + f))) << f;
  auto whole = Manifest::parse(read(dir / "whole/manifest.json"));
  auto chained = Manifest::parse(read(chain + "/manifest.json"));
  EXPECT_EQ(chained.outputs, whole.outputs);
}

TEST(Pipeline, WarmCacheRunsAreByteIdentical) {
  TempDir dir;
  const std::string g = globals(dir / "cache");
  ASSERT_EQ(run_cli(g + " pipeline --corpus " + replay("corpus.jsonl") + " --out " + (dir / "a")), 0);
  ASSERT_EQ(run_cli(g + " pipeline --corpus " + replay("corpus.jsonl") + " --out " + (dir / "b")), 0);
  ASSERT_EQ(run_cli(g + " --jobs 4 pipeline --corpus " + replay("corpus.jsonl") + " --out " + (dir / "c")), 0);
  EXPECT_EQ(read(dir / "a/manifest.json"), read(dir / "b/manifest.json"));
  for (const auto& f : kStageFiles) {
    EXPECT_EQ(read(dir / ("a/" + f)), read(dir / ("b/" + f))) << f;
    EXPECT_EQ(read(dir / ("a/" + f)), read(dir / ("c/" + f))) << f;
  }
  EXPECT_FALSE(fs::is_empty(dir / "cache"));
}

TEST(Pipeline, OutputsReloadThroughTheirOwnLoaders) {
  auto config = load_config(replay("config.toml"));
  TempDir dir;
  config.cache_dir = dir / "cache";
  Runtime rt(config);
  auto corpus = load_corpus(replay("corpus.jsonl"), CorpusFormat::jsonl);
  auto result = run_pipeline(corpus, rt, {});
  auto m = write_pipeline(result, dir / "out", config);
  EXPECT_EQ(Manifest::parse(m.to_json()).to_json(), m.to_json());
  EXPECT_EQ(load_corpus(dir / "out/resolved.jsonl", CorpusFormat::jsonl), result.coref.resolved);
  EXPECT_EQ(parse_labeled_jsonl(read(dir / "out/labeled.jsonl")), result.labeled);
  EXPECT_EQ(parse_sentence_records_jsonl(read(dir / "out/simplified.jsonl")), result.simplified.simplified);
  EXPECT_EQ(parse_working_set_jsonl(read(dir / "out/working_set.jsonl")).size(), result.working.size());
  EXPECT_EQ(load_triples_jsonl(dir / "out/triples.jsonl"), result.extraction.triples);
  EXPECT_TRUE(import_graph_jsonl(dir / "out/graph.jsonl") == result.graph);
  EXPECT_EQ(load_annotation_jsonl(dir / "out/coref_annotations.jsonl").size(), corpus.size());
  EXPECT_EQ(m.counts["graph.edges"], result.graph.edges().size());
}

TEST(Pipeline, TogglesSkipStages) {
  auto config = load_config(replay("config.toml"));
  TempDir dir;
  config.cache_dir = dir / "cache";
  Runtime rt(config);
  auto corpus = load_corpus(replay("corpus_small.jsonl"), CorpusFormat::jsonl);
  auto plain = run_pipeline(corpus, rt, {false, false});
  EXPECT_EQ(plain.coref.resolved, corpus);
  EXPECT_TRUE(plain.simplified.simplified.empty());
  for (const auto& w : plain.working) EXPECT_EQ(w.provenance.front().origin, Origin::original);
  auto full = run_pipeline(corpus, rt, {});
  EXPECT_GT(full.working.size(), plain.working.size());
}

TEST(Extract, EmptyWorkingSetGivesEmptyGraph) {
  TempDir dir;
  write(dir / "labeled.jsonl", "");
  ASSERT_EQ(run_cli(globals(dir / "cache") + " extract --labeled " + (dir / "labeled.jsonl") + " --out " +
                    (dir / "out")),
            0);
  EXPECT_EQ(read(dir / "out/triples.jsonl"), "");
  EXPECT_EQ(read(dir / "out/graph.csv"), "entity1,relation,entity2\n");
  EXPECT_EQ(read(dir / "out/graph.dot").find("->"), std::string::npos);
  EXPECT_EQ(Manifest::parse(read(dir / "out/manifest.json")).counts["graph.edges"], 0u);
}

TEST(ExitCodes, ConfigBackendSchema) {
  TempDir dir;
  const std::string g = globals(dir / "cache");
  // 2: configuration problems.
  EXPECT_EQ(run_cli(g + " coref --select --corpus " + replay("corpus_small.jsonl") + " --out " + (dir / "o")), 2);
  write(dir / "bad.toml", "[coref]\ntemprature = 0.1\n");
  EXPECT_EQ(run_cli("--config " + (dir / "bad.toml") + " pipeline --corpus " + replay("corpus_small.jsonl")), 2);
  EXPECT_EQ(run_cli("pipeline"), 2);

  // 3: every call to the model fails.
  write(dir / "down.toml",
        "[backends.replay]\nkind = \"http\"\nendpoint = \"http://127.0.0.1:1/v1\"\nmodel = \"m\"\n"
        "max_attempts = 1\n\n[coref]\nbackend = \"replay\"\n\n[classify]\nbackend = \"replay\"\n\n"
        "[extract]\nbackend = \"replay\"\n\n[simplify.comp]\nbackend = \"replay\"\n\n"
        "[simplify.comx]\nbackend = \"replay\"\n\n[simplify.comx_comp]\nbackend = \"replay\"\n");
  const std::string log = dir / "down.log";
  EXPECT_EQ(run_cli("--config " + (dir / "down.toml") + " --cache-dir " + (dir / "c2") + " pipeline --corpus " +
                        replay("corpus_small.jsonl") + " --out " + (dir / "o2"),
                    log),
            3);
  EXPECT_NE(read(log).find("coref"), std::string::npos);

  // 4: malformed input, reported with its line.
  write(dir / "broken.jsonl", "{\"id\":\"a\",\"text\":\"A causes B.\"}\n{not json\n");
  const std::string log4 = dir / "schema.log";
  EXPECT_EQ(run_cli(g + " pipeline --corpus " + (dir / "broken.jsonl") + " --out " + (dir / "o3"), log4), 4);
  EXPECT_NE(read(log4).find("2"), std::string::npos);
}

TEST(Select, CorefTableHasOneRowPerStrategyAndBackend) {
  TempDir dir;
  std::string config = read(replay("config.toml"));
  const std::string scenario = replay("scenario.jsonl");
  config.replace(config.find("\"scenario.jsonl\""), 16, "\"" + scenario + "\"");
  config += "\n[backends.second]\nkind = \"mock\"\nscenario = \"" + scenario + "\"\n";
  write(dir / "two.toml", config);
  const std::string g = "--config " + (dir / "two.toml") + " --cache-dir " + (dir / "cache");
  ASSERT_EQ(run_cli(g + " pipeline --corpus " + replay("corpus_small.jsonl") + " --out " + (dir / "gold")), 0);
  ASSERT_EQ(run_cli(g + " coref --select --gold " + (dir / "gold/coref_annotations.jsonl") + " --corpus " +
                    replay("corpus_small.jsonl") + " --out " + (dir / "sel")),
            0);
  const std::string table = read(dir / "sel/coref_scores.csv");
  EXPECT_EQ(first_line(table), "strategy,model,muc_f1,b3_f1,ceaf_f1,conll_f1,flag");
  auto cfg = load_config(dir / "two.toml");
  EXPECT_EQ(line_count(table) - 1, cfg.strategies.size() * cfg.backends.size());
  // All cells tie, so the lexicographically first pair wins and resolves as before.
  EXPECT_EQ(read(dir / "sel/resolved.jsonl"), read(dir / "gold/resolved.jsonl"));
}

TEST(Ablate, NoDecompositionRow) {
  TempDir dir;
  const std::string log = dir / "abl.log";
  ASSERT_EQ(run_cli(globals(dir / "cache") + " ablate --no-decomposition --corpus " + replay("corpus.jsonl") +
                        " --gold " + replay("gold_triples.jsonl") + " --out " + (dir / "out"),
                    log),
            0);
  auto rows = csv::parse(read(dir / "out/ablation.csv"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"Configuration", "Triples", "Precision", "Recall", "F1 Score"}));
  EXPECT_EQ(rows[1][0], "Human Standard");
  EXPECT_EQ(rows[1][2], "1.000000");
  EXPECT_EQ(rows[2][0], "Remove Sentence Decomposition");
  EXPECT_LT(std::stod(rows[2][3]), 1.0);
}

TEST(Score, TriplesTableAndErrorHistogram) {
  TempDir dir;
  const std::string g = globals(dir / "cache");
  ASSERT_EQ(run_cli(g + " pipeline --corpus " + replay("corpus.jsonl") + " --out " + (dir / "run")), 0);
  ASSERT_EQ(run_cli(g + " score --task triples --pred " + (dir / "run/triples.jsonl") + " --gold " +
                    replay("gold_triples.jsonl") + " --errors errors --name full --out " + (dir / "s")),
            0);
  auto rows = csv::parse(read(dir / "s/triple_score.csv"));
  ASSERT_GE(rows.size(), 2u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"Metrics", "full"}));
  EXPECT_EQ(first_line(read(dir / "s/errors.csv")), "kind,count,share");
  EXPECT_EQ(read(dir / "s/errors.svg").rfind("<svg", 0), 0u);
}
