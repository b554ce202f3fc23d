#include <gtest/gtest.h>

#include <fstream>

#include <json.hpp>

#include "codekg/error.hpp"
#include "codekg/syntax.hpp"
#include "test_support.hpp"

using namespace codekg;
using testing_support::fixture;

namespace {

struct LabeledFixture {
  std::string text;
  int ic = 0;
  int dc = 0;
  SentenceLabel label = SentenceLabel::incomp;
};

std::vector<LabeledFixture> load_labels() {
  std::vector<LabeledFixture> out;
  std::ifstream in(fixture("syntax/labels.jsonl"));
  for (std::string line; std::getline(in, line);) {
    auto j = nlohmann::json::parse(line);
    out.push_back({j["text"], j["ic"], j["dc"], parse_label(j["label"].get<std::string>())});
  }
  return out;
}

std::vector<GoldSentence> gold_of(const std::vector<LabeledFixture>& f) {
  std::vector<GoldSentence> out;
  for (const auto& x : f) out.push_back({x.text, x.label});
  return out;
}

// Direct reading of the four sentence-type definitions plus "incomplete".
SentenceLabel definition(int ic, int dc) {
  if (ic == 0) return SentenceLabel::incomp;
  if (ic == 1 && dc == 0) return SentenceLabel::simp;
  if (ic == 1) return SentenceLabel::comx;
  if (dc == 0) return SentenceLabel::comp;
  return SentenceLabel::comx_comp;
}

}  // namespace

TEST(Labels, NamesRoundTrip) {
  for (SentenceLabel l : kAllLabels) {
    EXPECT_EQ(parse_label(to_string(l)), l);
    EXPECT_EQ(parse_label(long_name(l)), l);
  }
  EXPECT_EQ(parse_label("compound_complex"), SentenceLabel::comx_comp);
  EXPECT_THROW(parse_label("fragment"), SchemaError);
}

TEST(ClassifyCounts, PartitionsTheCountPlane) {
  for (int ic = 0; ic <= 6; ++ic) {
    for (int dc = 0; dc <= 6; ++dc) EXPECT_EQ(classify_counts(ic, dc), definition(ic, dc)) << ic << "," << dc;
  }
}

TEST(ClassifyCounts, FixtureCountsMapExactly) {
  auto f = load_labels();
  ASSERT_EQ(f.size(), 60u);
  std::map<SentenceLabel, int> per_class;
  for (const auto& x : f) {
    EXPECT_EQ(classify_counts(x.ic, x.dc), x.label) << x.text;
    ++per_class[x.label];
  }
  for (SentenceLabel l : kAllLabels) EXPECT_EQ(per_class[l], 12);
}

TEST(AnalyzeClauses, FixtureAccuracyAtLeastNinetyPercent) {
  auto f = load_labels();
  std::size_t ok = 0;
  for (const auto& x : f) ok += classify(analyze_clauses(x.text)) == x.label;
  EXPECT_GE(static_cast<double>(ok) / static_cast<double>(f.size()), 0.9) << ok << "/" << f.size();
}

TEST(AnalyzeClauses, WorkedSentences) {
  auto leeds = analyze_clauses(
      "A prospective cohort study was conducted in Leeds, UK, based on routinely collected data from a "
      "service that allowed patients with symptoms of lung cancer to request CXR.");
  EXPECT_EQ(leeds.independent_clauses, 1);
  EXPECT_GE(leeds.dependent_clauses, 1);
  auto compound = analyze_clauses("The drug reduced pain, and it improved sleep.");
  EXPECT_EQ(compound.independent_clauses, 2);
  EXPECT_EQ(compound.dependent_clauses, 0);
  EXPECT_EQ(compound.coordinators_between_ics, 1);
  EXPECT_EQ(classify(analyze_clauses("John and Mary run every morning.")), SentenceLabel::simp);
  EXPECT_EQ(classify(analyze_clauses("She ate an apple and a banana.")), SentenceLabel::simp);
  EXPECT_THROW(analyze_clauses("   "), PreconditionError);
}

TEST(AnalyzeClauses, SpansAreOrderedAndInRange) {
  for (const auto& x : load_labels()) {
    auto a = analyze_clauses(x.text);
    EXPECT_EQ(a.spans.size(), static_cast<std::size_t>(a.independent_clauses + a.dependent_clauses));
    std::size_t prev_end = 0;
    for (const auto& s : a.spans) {
      EXPECT_LE(prev_end, s.begin) << x.text;
      EXPECT_LE(s.begin, s.end);
      EXPECT_LE(s.end, a.tokens.size());
      prev_end = s.end;
    }
  }
}

TEST(ParseLabelResponse, Variants) {
  EXPECT_EQ(parse_label_response("Category: compound-complex"), SentenceLabel::comx_comp);
  EXPECT_EQ(parse_label_response("This is a compound sentence."), SentenceLabel::comp);
  EXPECT_EQ(parse_label_response("Step 1: not complex.\nCategory: Simple"), SentenceLabel::simp);
  EXPECT_EQ(parse_label_response("It is incomplete."), SentenceLabel::incomp);
  EXPECT_FALSE(parse_label_response("I am not sure.").has_value());
}

TEST(Report, TenSentencesTwoErrors) {
  using L = SentenceLabel;
  std::vector<std::pair<L, L>> pairs = {{L::simp, L::simp},         {L::simp, L::simp},
                                        {L::simp, L::simp},         {L::comx, L::comx},
                                        {L::comx, L::comx},         {L::comx, L::simp},
                                        {L::comp, L::comp},         {L::comp, L::comx_comp},
                                        {L::comx_comp, L::comx_comp}, {L::comx_comp, L::comx_comp}};
  auto r = report_from_pairs(pairs);
  EXPECT_EQ(r.total, 10u);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.8);
  ASSERT_EQ(r.per_class.size(), 4u);
  EXPECT_DOUBLE_EQ(r.per_class[L::simp].precision, 0.75);
  EXPECT_DOUBLE_EQ(r.per_class[L::simp].recall, 1.0);
  EXPECT_NEAR(r.per_class[L::comx].recall, 2.0 / 3.0, 1e-12);
  EXPECT_DOUBLE_EQ(r.per_class[L::comp].recall, 0.5);
  EXPECT_NEAR(r.per_class[L::comx_comp].precision, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(r.macro_f1, (6.0 / 7.0 + 0.8 + 2.0 / 3.0 + 0.8) / 4.0, 1e-12);
  EXPECT_EQ(r.confusion[static_cast<int>(L::comp)][static_cast<int>(L::comx_comp)], 1u);
  const std::string conf = confusion_csv(r);
  EXPECT_EQ(conf.substr(0, conf.find('\n')), "gold\\predicted,simp,comx,comp,comx_comp,incomp");
  const std::string rep = classifier_report_csv(r);
  EXPECT_EQ(rep.substr(0, rep.find('\n')), "class,precision,recall,f1");
  EXPECT_NE(rep.find("accuracy,,,0.8"), std::string::npos);
  EXPECT_THROW(report_from_pairs({}), PreconditionError);
}

TEST(BackendClassifier, ParsesAnswersAndFlagsGarbage) {
  MockBackend m("mock");
  Generator gen(GenerationCache::in_memory());
  auto ps = load_strategy(Task::classify, Strategy::GIP);
  BackendClassifier c(ps, m, gen);
  m.script_prompt(render_prompt(ps, task_bindings(Task::classify, "A causes B.")), "Category: simple");
  m.script_prompt(render_prompt(ps, task_bindings(Task::classify, "Hmm.")), "no idea");
  EXPECT_EQ(c.classify("A causes B.").label, SentenceLabel::simp);
  auto bad = c.classify("Hmm.");
  EXPECT_TRUE(bad.flagged);
  EXPECT_EQ(c.name(), "GIP@mock");
}

TEST(BackendClassifier, FitFillsExamples) {
  MockBackend m("mock");
  Generator gen(GenerationCache::in_memory());
  BackendClassifier c(load_strategy(Task::classify, Strategy::FICL), m, gen, 1);
  std::vector<GoldSentence> pool = {{"A b.", SentenceLabel::simp}, {"C d.", SentenceLabel::simp},
                                    {"E f, and g h.", SentenceLabel::comp}};
  c.fit(pool);
  EXPECT_EQ(c.examples(), format_examples(pool, 1));
  EXPECT_NE(c.examples().find("Sentence: \"A b.\""), std::string::npos);
  EXPECT_EQ(c.examples().find("C d."), std::string::npos);
  EXPECT_NE(c.examples().find("Category: compound"), std::string::npos);
}

TEST(Split, SeededAndDisjoint) {
  auto gold = gold_of(load_labels());
  auto a = split_dataset(gold, {});
  auto b = split_dataset(gold, {});
  EXPECT_EQ(a.train.size(), 48u);
  EXPECT_EQ(a.val.size(), 12u);
  for (std::size_t i = 0; i < a.val.size(); ++i) EXPECT_EQ(a.val[i].text, b.val[i].text);
  std::set<std::string> seen;
  for (const auto& g : a.train) seen.insert(g.text);
  for (const auto& g : a.val) EXPECT_FALSE(seen.count(g.text));
  EXPECT_THROW(split_dataset(gold, {0.9, 0.2, 1}), ConfigError);
}

TEST(SelectClassifier, RuleBeatsConstant) {
  auto gold = gold_of(load_labels());
  RuleClassifier rule;
  ConstantClassifier constant(SentenceLabel::simp);
  auto sel = select_classifier({&constant, &rule}, gold, {});
  EXPECT_EQ(sel.best, "rule");
  EXPECT_EQ(sel.best_index, 1u);
  ASSERT_EQ(sel.table.size(), 2u);
  EXPECT_NE(classifier_table_csv(sel.table).find("rule"), std::string::npos);
}

TEST(LabelCorpus, SentencesInOrderAndRoundTrip) {
  RuleClassifier rule;
  Corpus corpus{{"a1", "The drug reduced pain. Results of the trial.", Source::local},
                {"a2", "Patients who received aspirin improved, and the trial ended.", Source::local}};
  auto labeled = label_corpus(rule, corpus, Origin::original, LabelSource::rule, 2);
  ASSERT_EQ(labeled.size(), 3u);
  EXPECT_EQ(labeled[0].label, SentenceLabel::simp);
  EXPECT_EQ(labeled[1].label, SentenceLabel::incomp);
  EXPECT_EQ(labeled[2].label, SentenceLabel::comx_comp);
  EXPECT_EQ(labeled[1].sentence.sentence_index, 1);
  EXPECT_EQ(labeled[2].sentence.origin, Origin::original);
  EXPECT_EQ(parse_labeled_jsonl(labeled_jsonl(labeled)), labeled);
}

TEST(GoldSentences, JsonlAndCsv) {
  auto a = parse_gold_sentences("{\"text\":\"A b.\",\"label\":\"simple\"}\n");
  auto b = parse_gold_sentences("text,label\n\"A b.\",simp\n");
  ASSERT_EQ(a.size(), 1u);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(a[0].text, b[0].text);
  EXPECT_EQ(a[0].label, b[0].label);
}
