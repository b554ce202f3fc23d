#include <gtest/gtest.h>

#include <cmath>

#include "codekg/error.hpp"
#include "codekg/simplify.hpp"
#include "test_support.hpp"

using namespace codekg;
using testing_support::fixture;

namespace {

std::unique_ptr<MockBackend> worked_backend() {
  auto m = std::make_unique<MockBackend>("replay");
  load_scenario(*m, fixture("simplify/worked_scenario.jsonl"));
  return m;
}

std::vector<std::string> numbered(const std::string& stem, int n) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("Item " + stem + std::to_string(i) + " holds.");
  return out;
}

}  // namespace

TEST(EnsureTerminal, Cases) {
  EXPECT_EQ(ensure_terminal("A b"), "A b.");
  EXPECT_EQ(ensure_terminal("A b."), "A b.");
  EXPECT_EQ(ensure_terminal("A b, "), "A b.");
  EXPECT_EQ(ensure_terminal("A b;"), "A b.");
  EXPECT_EQ(ensure_terminal("Why?"), "Why?");
}

TEST(ParseDecomposition, MarkerVariants) {
  auto arrow = parse_decomposition("S1 → A b.\nS2 -> C d\nS3: E f.");
  EXPECT_EQ(arrow.outputs, (std::vector<std::string>{"A b.", "C d.", "E f."}));
  auto ordered = parse_decomposition("Reasoning first.\nS2 → Second.\nS1 → First.\nS2 → Dup.");
  EXPECT_EQ(ordered.outputs, (std::vector<std::string>{"First.", "Second."}));
  auto nums = parse_decomposition("1. One.\n2) Two.");
  EXPECT_EQ(nums.outputs, (std::vector<std::string>{"One.", "Two."}));
  auto bullets = parse_decomposition("- S1 → One.\n* S2 → Two.");
  EXPECT_EQ(bullets.outputs.size(), 2u);
  auto single = parse_decomposition("The drug reduced pain.");
  EXPECT_TRUE(single.verbatim);
  EXPECT_EQ(single.outputs, std::vector<std::string>{"The drug reduced pain."});
  auto junk = parse_decomposition("line one\nline two");
  EXPECT_TRUE(junk.outputs.empty());
  EXPECT_FALSE(junk.diagnostic.empty());
}

TEST(ParseDecomposition, RoundTripsFormat) {
  std::vector<std::string> s = {"A b.", "C d: e.", "F -> g."};
  EXPECT_EQ(parse_decomposition(format_decomposition(s)).outputs, s);
}

TEST(SimplifyTask, Categories) {
  EXPECT_EQ(simplify_task(SentenceLabel::comx), Task::simplify_comx);
  EXPECT_EQ(simplify_task(SentenceLabel::comp), Task::simplify_comp);
  EXPECT_EQ(simplify_task(SentenceLabel::comx_comp), Task::simplify_comx_comp);
  EXPECT_THROW(simplify_task(SentenceLabel::simp), PreconditionError);
  EXPECT_THROW(simplify_task(SentenceLabel::incomp), PreconditionError);
}

TEST(Decompose, WorkedReplayReproducesGold) {
  auto m = worked_backend();
  Generator gen(GenerationCache::in_memory());
  auto gold = load_conversion_jsonl(fixture("simplify/worked_gold.jsonl"));
  ASSERT_EQ(gold.size(), 3u);
  const std::size_t sizes[] = {3, 3, 7};
  std::vector<ConversionItem> items;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    auto d = decompose(gold[i].text, gold[i].category, Strategy::COT_FICL, *m, gen);
    EXPECT_EQ(d.outputs, gold[i].gold);
    EXPECT_EQ(d.outputs.size(), sizes[i]);
    items.push_back(score_conversion(d.outputs, gold[i].gold, Similarity::token_tf(0.9)));
  }
  auto s = aggregate_conversion(items);
  EXPECT_DOUBLE_EQ(s.macro_avg, 1.0);
  EXPECT_DOUBLE_EQ(s.exact_match, 1.0);
  EXPECT_DOUBLE_EQ(s.rmse, 0.0);
}

TEST(ScoreConversion, Basics) {
  auto sim = Similarity::token_tf(0.9);
  std::vector<std::string> gold = {"A causes B.", "B inhibits C.", "C binds D."};
  auto same = score_conversion(gold, gold, sim);
  EXPECT_DOUBLE_EQ(same.match_fraction, 1.0);
  EXPECT_TRUE(same.exact);
  EXPECT_EQ(same.count_error, 0);
  auto missing = score_conversion({gold[0], gold[2]}, gold, sim);
  EXPECT_NEAR(missing.match_fraction, 2.0 / 3.0, 1e-12);
  EXPECT_FALSE(missing.exact);
  EXPECT_EQ(missing.count_error, -1);
  EXPECT_THROW(score_conversion(gold, {}, sim), PreconditionError);
}

TEST(ScoreConversion, RewordedSentenceAboveThreshold) {
  // 12 shared tokens, one swapped: cosine 12/13 ≈ 0.923 in [0.9, 0.93).
  const std::string gold = "The study was based on routinely collected data from a large regional service.";
  const std::string pred = "The study was based on routinely collected data from a large national service.";
  const double c = token_tf_cosine(pred, gold);
  EXPECT_NEAR(c, 12.0 / 13.0, 1e-12);
  EXPECT_GE(c, 0.9);
  auto item = score_conversion({pred}, {gold}, Similarity::token_tf(0.9));
  EXPECT_DOUBLE_EQ(item.match_fraction, 1.0);
  EXPECT_TRUE(item.exact);
}

TEST(ScoreConversion, OneToOne) {
  auto item = score_conversion({"A causes B.", "A causes B."}, {"A causes B."}, Similarity::token_tf(0.9));
  EXPECT_EQ(item.matches.size(), 1u);
  EXPECT_FALSE(item.exact);
  EXPECT_EQ(item.count_error, 1);
}

TEST(AggregateConversion, HandArithmetic) {
  ConversionItem a;
  a.match_fraction = 1.0;
  a.exact = true;
  ConversionItem b;
  b.match_fraction = 0.5;
  b.count_error = -2;
  auto s = aggregate_conversion({a, b});
  EXPECT_DOUBLE_EQ(s.macro_avg, 0.75);
  EXPECT_DOUBLE_EQ(s.exact_match, 0.5);
  EXPECT_NEAR(s.rmse, std::sqrt(2.0), 1e-12);
  ConversionItem z;
  z.count_error = -3;
  auto single = aggregate_conversion({z});
  EXPECT_EQ(single.macro_avg, 0.0);
  EXPECT_DOUBLE_EQ(single.rmse, 3.0);
  EXPECT_THROW(aggregate_conversion({}), EmptyBatch);
}

TEST(AggregateConversion, ExactNeverExceedsMacro) {
  auto sim = Similarity::token_tf(0.9);
  std::vector<std::string> gold = numbered("g", 4);
  std::vector<ConversionItem> items;
  for (int k = 0; k <= 4; ++k) {
    items.push_back(score_conversion(std::vector<std::string>(gold.begin(), gold.begin() + k), gold, sim));
    auto s = aggregate_conversion(items);
    EXPECT_LE(s.exact_match, s.macro_avg + 1e-12);
  }
}

TEST(SelectSimplifier, StrategyComparisonArgmax) {
  // Gold items sized so the four cells land on 0.9978, 0.8286, 0.6889 and
  // 0.4581 (to four places).
  const int sizes[] = {7, 9, 11, 13, 91};
  const std::map<Strategy, std::vector<int>> kept = {{Strategy::COT_FICL, {7, 9, 11, 13, 90}},
                                                     {Strategy::FICL, {6, 5, 9, 12, 90}},
                                                     {Strategy::COT, {1, 9, 9, 7, 86}},
                                                     {Strategy::GIP, {0, 8, 2, 3, 90}}};
  const std::map<Strategy, double> expect = {{Strategy::COT_FICL, 0.9978},
                                             {Strategy::FICL, 0.8286},
                                             {Strategy::COT, 0.6889},
                                             {Strategy::GIP, 0.4581}};
  std::vector<GoldConversion> gold;
  MockBackend m("llama-3-8b");
  for (int i = 0; i < 5; ++i) {
    GoldConversion g{"Source sentence " + std::to_string(i) + ", which is complex.", SentenceLabel::comx,
                     numbered("s" + std::to_string(i) + "x", sizes[i])};
    for (const auto& [strategy, counts] : kept) {
      const std::size_t k = static_cast<std::size_t>(counts[static_cast<std::size_t>(i)]);
      std::vector<std::string> out(g.gold.begin(), g.gold.begin() + static_cast<std::ptrdiff_t>(k));
      m.script_prompt(render_prompt(load_strategy(Task::simplify_comx, strategy),
                                    task_bindings(Task::simplify_comx, g.text)),
                      out.empty() ? "S1 → Nothing relevant here." : format_decomposition(out));
    }
    gold.push_back(g);
  }
  Generator gen(GenerationCache::in_memory());
  auto sel = select_simplifier({SentenceLabel::comx}, {std::begin(kAllStrategies), std::end(kAllStrategies)},
                               {&m}, gold, gen, Similarity::token_tf(0.9));
  const auto& c = sel.at(SentenceLabel::comx);
  EXPECT_EQ(c.strategy, "COT_FICL");
  EXPECT_EQ(c.model, "llama-3-8b");
  ASSERT_EQ(c.table.size(), 4u);
  for (const auto& cell : c.table) {
    EXPECT_NEAR(cell.score.macro_avg, expect.at(parse_strategy(cell.strategy)), 5e-5) << cell.strategy;
  }
  const std::string cmp = strategy_comparison_csv(c.table);
  EXPECT_NE(cmp.find("llama-3-8b"), std::string::npos);
  const std::string tab = simplifier_table_csv(c.table);
  EXPECT_EQ(tab.substr(0, tab.find('\n')), "strategy,model,macro_avg,exact_match,rmse,flag");
}

TEST(SelectSimplifier, CategoriesIndependentAndFailuresFlagged) {
  auto good = worked_backend();
  MockBackend down("down");
  auto gold = load_conversion_jsonl(fixture("simplify/worked_gold.jsonl"));
  Generator gen(GenerationCache::in_memory());
  auto sel = select_simplifier({SentenceLabel::comx, SentenceLabel::comp}, {Strategy::COT_FICL},
                               {good.get(), &down}, gold, gen, Similarity::token_tf(0.9));
  EXPECT_EQ(sel.at(SentenceLabel::comx).model, "replay");
  EXPECT_EQ(sel.at(SentenceLabel::comp).model, "replay");
  for (const auto& [cat, s] : sel) {
    ASSERT_EQ(s.table.size(), 2u);
    const auto& failed = s.table[0].model == "down" ? s.table[0] : s.table[1];
    EXPECT_TRUE(failed.failed);
    EXPECT_EQ(failed.score.macro_avg, 0.0);
  }
  std::vector<GoldConversion> only_comx{gold[0]};
  EXPECT_THROW(select_simplifier({SentenceLabel::comp}, {Strategy::COT_FICL}, {good.get()}, only_comx, gen,
                                 Similarity::token_tf(0.9)),
               PreconditionError);
}

TEST(SimplifyCorpus, DecomposesOnlyNonSimple) {
  auto m = worked_backend();
  Generator gen(GenerationCache::in_memory());
  auto gold = load_conversion_jsonl(fixture("simplify/worked_gold.jsonl"));
  std::vector<LabeledSentence> labeled;
  labeled.push_back({SentenceRecord{"a1", 0, "Aspirin reduces pain.", Origin::original, -1},
                     SentenceLabel::simp, LabelSource::rule, false});
  labeled.push_back({SentenceRecord{"a1", 1, gold[0].text, Origin::original, -1}, SentenceLabel::comx,
                     LabelSource::rule, false});
  labeled.push_back({SentenceRecord{"a1", 2, "Unscripted, and it fails.", Origin::original, -1},
                     SentenceLabel::comp, LabelSource::rule, false});
  std::map<SentenceLabel, SimplifierConfig> configs;
  for (SentenceLabel c : kDecomposable) configs[c] = {Strategy::COT_FICL, m.get()};
  auto r = simplify_corpus(labeled, configs, gen);
  ASSERT_EQ(r.simplified.size(), 3u);
  EXPECT_EQ(r.simplified[2].text, gold[0].gold[2]);
  EXPECT_EQ(r.simplified[0].source_sentence_index, 1);
  EXPECT_EQ(r.simplified[2].sentence_index, 2);
  EXPECT_EQ(r.simplified[0].origin, Origin::simplified);
  EXPECT_EQ(r.failures.size(), 1u);
  EXPECT_EQ(parse_sentence_records_jsonl(sentence_records_jsonl(r.simplified)), r.simplified);

  auto simple_only = simplify_corpus({labeled[0]}, configs, gen);
  EXPECT_TRUE(simple_only.simplified.empty());
  configs.erase(SentenceLabel::comp);
  EXPECT_THROW(simplify_corpus(labeled, configs, gen), ConfigError);
}

TEST(SimplifyCorpus, WorkedOutputsAreSimple) {
  auto gold = load_conversion_jsonl(fixture("simplify/worked_gold.jsonl"));
  EXPECT_GE(simple_output_rate(gold[0].gold), 2.0 / 3.0);
}

TEST(ConversionJsonl, RoundTrip) {
  auto gold = load_conversion_jsonl(fixture("simplify/worked_gold.jsonl"));
  auto again = parse_conversion_jsonl(conversion_jsonl(gold));
  ASSERT_EQ(again.size(), gold.size());
  for (std::size_t i = 0; i < gold.size(); ++i) {
    EXPECT_EQ(again[i].text, gold[i].text);
    EXPECT_EQ(again[i].category, gold[i].category);
    EXPECT_EQ(again[i].gold, gold[i].gold);
  }
}
