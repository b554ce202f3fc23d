#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "codekg/coref.hpp"
#include "codekg/error.hpp"
#include "test_support.hpp"

using namespace codekg;
using testing_support::fixture;
using testing_support::read;

namespace {

TokenizedAbstract pbc_abstract() { return TokenizedAbstract{"pbc", tokenize(read(fixture("coref/pbc_abstract.txt")))}; }

CorefAnnotation ann(std::string expr, int s, int e, std::string ref) {
  return CorefAnnotation{std::move(expr), s, e, std::move(ref)};
}

// Reference metric implementations written straight from the definitions.
std::size_t inter(const Chain& a, const Chain& b) {
  std::size_t n = 0;
  for (const auto& m : a) n += b.count(m);
  return n;
}

const Chain* containing(const Chains& cs, const std::string& m) {
  for (const auto& c : cs) {
    if (c.count(m)) return &c;
  }
  return nullptr;
}

double muc_recall_oracle(const Chains& key, const Chains& resp) {
  double num = 0, den = 0;
  for (const auto& k : key) {
    // Partition of k induced by resp; unseen mentions are singletons.
    std::set<const Chain*> parts;
    std::size_t alone = 0;
    for (const auto& m : k) {
      if (auto c = containing(resp, m)) {
        parts.insert(c);
      } else {
        ++alone;
      }
    }
    num += static_cast<double>(k.size()) - static_cast<double>(parts.size() + alone);
    den += static_cast<double>(k.size()) - 1;
  }
  return den == 0 ? 0 : num / den;
}

double b3_recall_oracle(const Chains& key, const Chains& resp) {
  double num = 0, den = 0;
  for (const auto& k : key) {
    for (const auto& m : k) {
      den += 1;
      if (auto c = containing(resp, m)) num += static_cast<double>(inter(k, *c)) / static_cast<double>(k.size());
    }
  }
  return den == 0 ? 0 : num / den;
}

double phi4(const Chain& a, const Chain& b) {
  return 2.0 * static_cast<double>(inter(a, b)) / static_cast<double>(a.size() + b.size());
}

// Best total phi4 over every one-to-one alignment.
double ceaf_best_oracle(const Chains& key, const Chains& resp) {
  const std::size_t n = std::max(key.size(), resp.size());
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0;
  do {
    double total = 0;
    for (std::size_t i = 0; i < key.size(); ++i) {
      if (perm[i] < resp.size()) total += phi4(key[i], resp[perm[i]]);
    }
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Chains random_chains(std::mt19937& rng, int mentions) {
  std::uniform_int_distribution<int> slot(-1, 3);  // -1: mention absent
  std::vector<Chain> groups(4);
  for (int m = 0; m < mentions; ++m) {
    int g = slot(rng);
    if (g >= 0) groups[static_cast<std::size_t>(g)].insert("m" + std::to_string(m));
  }
  Chains out;
  for (auto& g : groups) {
    if (!g.empty()) out.push_back(g);
  }
  return out;
}

}  // namespace

TEST(CorefParse, WorkedExampleResponse) {
  auto ta = pbc_abstract();
  ASSERT_EQ(ta.size(), 122u);
  auto parsed = parse_annotations(read(fixture("coref/pbc_response.txt")), ta, "model:x/COT");
  EXPECT_EQ(parsed.dropped, 0u);
  ASSERT_EQ(parsed.set.annotations.size(), 4u);
  const auto& she = parsed.set.annotations[2];
  EXPECT_EQ(she.expression, "She");
  EXPECT_EQ(she.start_token, 51);
  EXPECT_EQ(she.end_token, 51);
  EXPECT_EQ(she.refers_to, "A middle-aged woman");
  EXPECT_EQ(parsed.set.annotations[0].refers_to, "Primary biliary cirrhosis");
  EXPECT_EQ(parsed.set.abstract_id, "pbc");
  EXPECT_EQ(parsed.set.annotator, "model:x/COT");
  for (const auto& a : parsed.set.annotations) EXPECT_TRUE(valid_annotation(a, ta));
}

TEST(CorefParse, OutOfRangeSpanDropped) {
  auto ta = pbc_abstract();
  auto parsed = parse_annotations(
      R"([{"Expression":"x","StartToken":200,"EndToken":201,"RefersTo":"y"},
          {"Expression":"She","StartToken":51,"EndToken":51,"RefersTo":"A middle-aged woman"}])",
      ta);
  EXPECT_EQ(parsed.dropped, 1u);
  EXPECT_EQ(parsed.set.annotations.size(), 1u);
}

TEST(CorefParse, MismatchedExpressionAndRepeatsDropped) {
  auto ta = pbc_abstract();
  auto parsed = parse_annotations(
      R"(Reasoning first. [{"Expression":"He","StartToken":51,"EndToken":51,"RefersTo":"x"},
          {"Expression":"PBC","StartToken":14,"EndToken":14,"RefersTo":"Primary biliary cirrhosis"},
          {"Expression":"PBC","StartToken":14,"EndToken":14,"RefersTo":"Primary biliary cirrhosis"},
          {"Expression":"PBC","StartToken":15,"EndToken":14,"RefersTo":"Primary biliary cirrhosis"}])",
      ta);
  EXPECT_EQ(parsed.set.annotations.size(), 1u);
  EXPECT_EQ(parsed.dropped, 3u);
}

TEST(CorefParse, EmptyArrayAndGarbage) {
  auto ta = pbc_abstract();
  EXPECT_TRUE(parse_annotations("[]", ta).set.annotations.empty());
  EXPECT_THROW(parse_annotations("I could not find any.", ta), NoParsableOutput);
}

TEST(ApplyResolution, WorkedExample) {
  auto ta = pbc_abstract();
  auto set = parse_annotations(read(fixture("coref/pbc_response.txt")), ta).set;
  const std::string out = apply_resolution(ta, set);
  EXPECT_NE(out.find("cirrhosis (Primary biliary cirrhosis). No case"), std::string::npos) << out;
  EXPECT_NE(out.find("secondary to Primary biliary cirrhosis misdiagnosed"), std::string::npos);
  EXPECT_NE(out.find("tomography. A middle-aged woman underwent left lobectomy"), std::string::npos);
  EXPECT_EQ(out.find(" She "), std::string::npos);
}

TEST(ApplyResolution, EmptyIsIdentityOnJoinedTokens) {
  auto ta = pbc_abstract();
  EXPECT_EQ(apply_resolution(ta, AnnotationSet{"pbc", {}, ""}), ta.joined());
}

TEST(ApplyResolution, MultiTokenSpansAgainstNaiveOracle) {
  TokenizedAbstract ta{"t", tokenize("the small drug reduced pain and it helped them (the patients).")};
  AnnotationSet set{"t", {ann("it", 6, 6, "the small drug"), ann("the small drug", 0, 2, "Aspirin"),
                          ann("them (the patients).", 8, 10, "the patients")},
                    ""};
  // Oracle: walk tokens left to right, emitting the antecedent at span starts.
  std::vector<std::string> words;
  for (std::size_t i = 0; i < ta.size();) {
    bool replaced = false;
    for (const auto& a : set.annotations) {
      if (a.start_token == static_cast<int>(i)) {
        std::string tail;
        const std::string& last = ta.tokens[static_cast<std::size_t>(a.end_token)].surface;
        if (last.back() == '.') tail = ".";
        words.push_back(a.refers_to + tail);
        i = static_cast<std::size_t>(a.end_token) + 1;
        replaced = true;
      }
    }
    if (!replaced) words.push_back(ta.tokens[i++].surface);
  }
  EXPECT_EQ(apply_resolution(ta, set), text::join(words, " "));
  EXPECT_EQ(apply_resolution(ta, set), "Aspirin reduced pain and the small drug helped the patients.");
}

TEST(ApplyResolution, OverlapAndRangeErrors) {
  TokenizedAbstract ta{"t", tokenize("a b c d")};
  EXPECT_THROW(apply_resolution(ta, {"t", {ann("a b", 0, 1, "x"), ann("b c", 1, 2, "y")}, ""}), OverlappingSpans);
  EXPECT_THROW(apply_resolution(ta, {"t", {ann("d", 3, 4, "x")}, ""}), PreconditionError);
}

TEST(Gold, UnanimousAgreementBuildsGold) {
  auto sim = antecedent_similarity();
  AnnotationSet a{"p", {ann("it", 3, 3, "a house")}, "h1"};
  AnnotationSet b{"p", {ann("it", 3, 3, "house")}, "h2"};
  auto gold = build_gold({a, b}, sim);
  ASSERT_TRUE(gold.has_value());
  EXPECT_EQ(gold->annotations.size(), 1u);
  AnnotationSet c{"p", {ann("it", 3, 3, "garden")}, "h3"};
  EXPECT_FALSE(build_gold({a, c}, sim).has_value());
  AnnotationSet d{"p", {ann("it", 4, 4, "a house")}, "h4"};
  EXPECT_FALSE(build_gold({a, d}, sim).has_value());
  EXPECT_THROW(build_gold({a}, sim), PreconditionError);
}

TEST(Gold, FromAnnotationJsonl) {
  std::vector<AnnotationSet> sets = {{"p1", {ann("it", 1, 1, "x")}, "h1"},
                                     {"p1", {ann("it", 1, 1, "x")}, "h2"},
                                     {"p2", {ann("it", 1, 1, "x")}, "h1"},
                                     {"p2", {ann("it", 2, 2, "x")}, "h2"}};
  EXPECT_EQ(parse_annotation_jsonl(annotation_jsonl(sets)), sets);
  auto gold = gold_from_annotations(sets, antecedent_similarity());
  EXPECT_EQ(gold.size(), 1u);
  EXPECT_TRUE(gold.annotations.count("p1"));
}

TEST(CorefMetrics, WorkedInstance) {
  Chains key{{"a", "b", "c"}, {"d"}};
  Chains resp{{"a", "b"}, {"c", "d"}};
  auto b3 = b_cubed_score(key, resp);
  EXPECT_NEAR(b3.precision, 3.0 / 4.0, 1e-12);
  EXPECT_NEAR(b3.recall, 2.0 / 3.0, 1e-12);
  auto muc = muc_score(key, resp);
  EXPECT_NEAR(muc.recall, 1.0 / 2.0, 1e-12);
  EXPECT_NEAR(muc.precision, 1.0 / 2.0, 1e-12);
  // phi4: {abc}-{ab} = 4/5, {d}-{cd} = 2/3
  auto ceaf = ceaf_e_score(key, resp);
  EXPECT_NEAR(ceaf.precision, (0.8 + 2.0 / 3.0) / 2.0, 1e-12);
  EXPECT_NEAR(ceaf.recall, (0.8 + 2.0 / 3.0) / 2.0, 1e-12);
  auto s = score_chains(key, resp);
  EXPECT_NEAR(s.conll, (s.muc.f1 + s.b3.f1 + s.ceaf.f1) / 3.0, 1e-12);
}

TEST(CorefMetrics, MatchOraclesOnRandomChains) {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 400; ++trial) {
    Chains key = random_chains(rng, 7), resp = random_chains(rng, 7);
    auto muc = muc_score(key, resp);
    EXPECT_NEAR(muc.recall, muc_recall_oracle(key, resp), 1e-12);
    EXPECT_NEAR(muc.precision, muc_recall_oracle(resp, key), 1e-12);
    auto b3 = b_cubed_score(key, resp);
    EXPECT_NEAR(b3.recall, b3_recall_oracle(key, resp), 1e-12);
    EXPECT_NEAR(b3.precision, b3_recall_oracle(resp, key), 1e-12);
    auto ceaf = ceaf_e_score(key, resp);
    const double best = ceaf_best_oracle(key, resp);
    EXPECT_NEAR(ceaf.recall, key.empty() ? 0 : best / static_cast<double>(key.size()), 1e-9);
    EXPECT_NEAR(ceaf.precision, resp.empty() ? 0 : best / static_cast<double>(resp.size()), 1e-9);
    // Swapping key and response swaps precision and recall.
    for (auto [a, b] : {std::pair(muc, muc_score(resp, key)), std::pair(b3, b_cubed_score(resp, key)),
                        std::pair(ceaf, ceaf_e_score(resp, key))}) {
      EXPECT_NEAR(a.precision, b.recall, 1e-9);
      EXPECT_NEAR(a.recall, b.precision, 1e-9);
    }
    for (const PRF& p : {muc, b3, ceaf}) {
      EXPECT_GE(p.f1, 0.0);
      EXPECT_LE(p.f1, 1.0 + 1e-12);
    }
    if (!key.empty()) {
      auto self = score_chains(key, key);
      EXPECT_NEAR(self.b3.f1, 1.0, 1e-12);
      EXPECT_NEAR(self.ceaf.f1, 1.0, 1e-12);
    }
  }
}

TEST(CorefMetrics, IdenticalSetsScoreOne) {
  auto sim = antecedent_similarity();
  AnnotationSet g{"p", {ann("it", 3, 3, "the drug"), ann("PBC", 5, 5, "Primary biliary cirrhosis"),
                        ann("she", 9, 9, "the woman")},
                  "gold"};
  auto s = score_coref(g, g, sim);
  EXPECT_NEAR(s.conll, 1.0, 1e-12);
  EXPECT_NEAR(score_coref({"p", {}, ""}, {"p", {}, ""}, sim).conll, 1.0, 1e-12);
  EXPECT_NEAR(score_coref({"p", {}, ""}, g, sim).conll, 0.0, 1e-12);
}

TEST(Kappa, Formula) {
  EXPECT_NEAR(cohen_kappa(0.9, 0.5), 0.8, 1e-12);
  EXPECT_NEAR(cohen_kappa(0.5, 0.5), 0.0, 1e-12);
  EXPECT_THROW(cohen_kappa(0.7, 1.0), DegenerateExpected);
  EXPECT_THROW(cohen_kappa(1.2, 0.3), PreconditionError);
  EXPECT_DOUBLE_EQ(observed_agreement(0, 0), 1.0);
  EXPECT_THROW(observed_agreement(3, 2), PreconditionError);
  std::set<std::string> a{"x", "y", "z"}, b{"x", "y", "w"};
  EXPECT_NEAR(observed_agreement(a, b), 0.5, 1e-12);
  EXPECT_NEAR(cohen_kappa(a, b, 0.2), (0.5 - 0.2) / 0.8, 1e-12);
}

TEST(SelectCoref, GridWinnerTiesAndFailures) {
  auto ta = pbc_abstract();
  const std::string good = read(fixture("coref/pbc_response.txt"));
  const std::string partial =
      R"([{"Expression":"She","StartToken":51,"EndToken":51,"RefersTo":"A middle-aged woman"}])";
  auto gold_set = parse_annotations(good, ta, "gold").set;
  std::vector<GoldDocument> gold{{ta, gold_set}};

  const auto cot = load_strategy(Task::coref, Strategy::COT);
  const auto ficl = load_strategy(Task::coref, Strategy::FICL);
  Bindings b{{"tokenized_text", format_token_list(ta)}};
  MockBackend alpha("alpha"), beta("beta"), down("down");
  alpha.script_prompt(render_prompt(cot, b), partial);
  alpha.script_prompt(render_prompt(ficl, b), good);
  beta.script_prompt(render_prompt(cot, b), "no json here");
  beta.script_prompt(render_prompt(ficl, b), good);

  Generator gen(GenerationCache::in_memory());
  auto sel = select_coref_config({cot, ficl}, {&alpha, &beta, &down}, gold, gen, antecedent_similarity());
  ASSERT_EQ(sel.table.size(), 6u);
  // alpha/FICL and beta/FICL tie at 1; the smaller model name wins.
  EXPECT_EQ(sel.strategy, "FICL");
  EXPECT_EQ(sel.model, "alpha");
  std::size_t failed = 0, unparsable = 0;
  for (const auto& c : sel.table) {
    if (c.failed) {
      ++failed;
      EXPECT_EQ(c.model, "down");
      EXPECT_EQ(c.conll_f1, 0.0);
    }
    if (c.unparsable) ++unparsable;
    if (c.model == "alpha" && c.strategy == "COT") {
      EXPECT_GT(c.conll_f1, 0.0);
      EXPECT_LT(c.conll_f1, 1.0);
    }
  }
  EXPECT_EQ(failed, 2u);
  EXPECT_EQ(unparsable, 1u);
  const std::string csv = coref_table_csv(sel.table);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "strategy,model,muc_f1,b3_f1,ceaf_f1,conll_f1,flag");
  EXPECT_NE(csv.find("failed"), std::string::npos);

  EXPECT_THROW(select_coref_config({}, {&alpha}, gold, gen, antecedent_similarity()), PreconditionError);
  EXPECT_THROW(select_coref_config({cot}, {&alpha}, {}, gen, antecedent_similarity()), PreconditionError);
}
