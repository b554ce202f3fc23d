#include "codekg/syntax.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include <json.hpp>

#include "codekg/assets.hpp"
#include "codekg/csv.hpp"
#include "codekg/error.hpp"
#include "codekg/parallel.hpp"
#include "codekg/text.hpp"

namespace codekg {

using nlohmann::json;

std::string_view to_string(SentenceLabel l) {
  switch (l) {
    case SentenceLabel::simp: return "simp";
    case SentenceLabel::comx: return "comx";
    case SentenceLabel::comp: return "comp";
    case SentenceLabel::comx_comp: return "comx_comp";
    case SentenceLabel::incomp: return "incomp";
  }
  return "incomp";
}

std::string_view long_name(SentenceLabel l) {
  switch (l) {
    case SentenceLabel::simp: return "simple";
    case SentenceLabel::comx: return "complex";
    case SentenceLabel::comp: return "compound";
    case SentenceLabel::comx_comp: return "compound-complex";
    case SentenceLabel::incomp: return "incomplete";
  }
  return "incomplete";
}

SentenceLabel parse_label(std::string_view s) {
  const std::string l = text::to_lower(text::trim(s));
  for (SentenceLabel v : kAllLabels) {
    if (l == to_string(v) || l == long_name(v)) return v;
  }
  if (l == "compound_complex" || l == "compound complex") return SentenceLabel::comx_comp;
  throw SchemaError("unknown sentence label: " + std::string(s));
}

// ---------------------------------------------------------------------------
// Lexicon

namespace {

std::set<std::string> word_set(const std::string& asset) {
  std::set<std::string> out;
  for (const auto& line : text::parse_word_list(assets::load(asset))) {
    out.insert(text::to_lower(text::split_whitespace(line).front()));
  }
  return out;
}

std::set<std::string> flagged_words(const std::string& asset, std::string_view flag) {
  std::set<std::string> out;
  for (const auto& line : text::parse_word_list(assets::load(asset))) {
    auto parts = text::split_whitespace(line);
    if (parts.size() > 1 && parts[1] == flag) out.insert(text::to_lower(parts[0]));
  }
  return out;
}

}  // namespace

const Lexicon& Lexicon::standard() {
  static const Lexicon lex = [] {
    Lexicon l;
    l.coordinators = word_set("data/lexicon/coordinators.txt");
    l.comma_only_coordinators = flagged_words("data/lexicon/coordinators.txt", "after-comma");
    l.subordinators = word_set("data/lexicon/subordinators.txt");
    l.reduced_subordinators = flagged_words("data/lexicon/subordinators.txt", "reduced");
    l.relative_pronouns = word_set("data/lexicon/relative_pronouns.txt");
    l.auxiliaries = word_set("data/lexicon/auxiliaries.txt");
    l.determiners = word_set("data/lexicon/determiners.txt");
    l.prepositions = word_set("data/lexicon/prepositions.txt");
    l.subject_pronouns = word_set("data/lexicon/subject_pronouns.txt");
    l.irregular_past = word_set("data/lexicon/irregular_past.txt");
    l.verbs = word_set("data/lexicon/verbs.txt");
    return l;
  }();
  return lex;
}

// ---------------------------------------------------------------------------
// Clause analysis

namespace {

const std::set<std::string> kSkippableAdverbs = {"also",  "then",    "not",    "often", "still",
                                                 "now",   "already", "thus",   "first", "finally",
                                                 "never", "further", "always", "even",  "hence"};
const std::set<std::string> kNonFinitePredecessors = {"be", "been", "being", "having", "to"};
const std::set<std::string> kPronounDeterminers = {"this", "that",    "these", "those", "all",
                                                   "both", "some",    "many",  "most",  "several",
                                                   "few",  "each",    "either", "neither",
                                                   "another", "other"};

bool is_word(std::string_view t) {
  return std::any_of(t.begin(), t.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80;
  });
}

bool is_curly_quote(std::string_view s, std::size_t i) {
  return s.substr(i, 2) == "\xE2\x80" && i + 2 < s.size() &&
         (s[i + 2] == '\x9C' || s[i + 2] == '\x9D' || s[i + 2] == '\x98' || s[i + 2] == '\x99');
}

// Whitespace tokens with quotes, brackets and clause punctuation split off.
std::vector<std::string> clause_tokens(std::string_view sentence) {
  std::vector<std::string> out;
  for (const auto& piece : text::split_whitespace(sentence)) {
    std::string_view p = piece;
    std::vector<std::string> tail;
    while (!p.empty()) {
      if (std::string_view("(\"'[").find(p.front()) != std::string_view::npos) {
        out.emplace_back(1, p.front());
        p.remove_prefix(1);
      } else if (is_curly_quote(p, 0)) {
        out.emplace_back("\"");
        p.remove_prefix(3);
      } else {
        break;
      }
    }
    while (!p.empty()) {
      if (std::string_view(".,;:!?)\"']").find(p.back()) != std::string_view::npos) {
        tail.emplace_back(1, p.back());
        p.remove_suffix(1);
      } else if (p.size() >= 3 && is_curly_quote(p, p.size() - 3)) {
        tail.emplace_back("\"");
        p.remove_suffix(3);
      } else {
        break;
      }
    }
    if (!p.empty()) out.emplace_back(p);
    out.insert(out.end(), tail.rbegin(), tail.rend());
  }
  // Parenthetical material and quote marks do not take part in clause
  // structure.
  std::vector<std::string> kept;
  int depth = 0;
  for (auto& t : out) {
    if (t == "(" || t == "[") {
      ++depth;
    } else if (t == ")" || t == "]") {
      depth = std::max(0, depth - 1);
    } else if (depth == 0 && t != "\"" && t != "'") {
      kept.push_back(std::move(t));
    }
  }
  return kept;
}

enum class Opener { none, coordinator, semicolon, subordinator, relative };

struct Segment {
  std::size_t begin = 0;
  std::size_t end = 0;
  Opener opener = Opener::none;
  std::string opener_word;
  std::vector<std::string> words;  // lowercased, opener excluded
  std::vector<std::size_t> positions;  // token index of each word
};

bool is_adverb(const std::string& w) {
  return kSkippableAdverbs.count(w) || (w.size() > 4 && w.ends_with("ly"));
}

class FiniteFinder {
 public:
  explicit FiniteFinder(const Lexicon& lex) : lex_(lex) {}

  // Index in `words` of the clause's finite verb, or -1. Auxiliaries and
  // copulas win over content verbs.
  // `plural`: the segment continues a coordinated subject.
  int find(const std::vector<std::string>& words, std::size_t from = 0, bool plural = false) const {
    for (std::size_t j = from; j < words.size(); ++j) {
      if (lex_.auxiliaries.count(words[j])) return static_cast<int>(j);
    }
    for (std::size_t j = from; j < words.size(); ++j) {
      if (content_finite(words, j, plural)) return static_cast<int>(j);
    }
    return -1;
  }

  // The relative pronoun is the subject, so a bare verb right after it is
  // finite ("who smoke").
  int find_after_relative(const std::vector<std::string>& words) const {
    if (!words.empty() && (lex_.verbs.count(words[0]) || third_person(words[0]) ||
                           past_form(words[0]) || lex_.auxiliaries.count(words[0]))) {
      return 0;
    }
    return find(words);
  }

  bool participle(const std::string& w) const {
    return past_form(w) || (w.size() > 4 && w.ends_with("ing"));
  }

  bool noun_like(const std::string& w) const {
    if (!is_word(w)) return false;
    if (lex_.determiners.count(w) && !kPronounDeterminers.count(w)) return false;
    if (lex_.prepositions.count(w) || lex_.coordinators.count(w) || lex_.subordinators.count(w)) {
      return false;
    }
    return !is_adverb(w);
  }

 private:
  bool past_form(const std::string& w) const {
    if (lex_.irregular_past.count(w)) return true;
    if (w.size() < 4 || !w.ends_with("ed") || w.find('-') != std::string::npos) return false;
    // "died", "used"
    if (w.size() == 4) return lex_.verbs.count(w.substr(0, 3)) > 0;
    return !w.ends_with("eed") || lex_.verbs.count(w.substr(0, w.size() - 1));
  }

  bool third_person(const std::string& w) const {
    if (w.size() < 4 || !w.ends_with("s") || w.ends_with("ss") || w.ends_with("us") ||
        w.ends_with("is")) {
      return false;
    }
    if (w.ends_with("ies") && lex_.verbs.count(w.substr(0, w.size() - 3) + "y")) return true;
    if (w.ends_with("es") && lex_.verbs.count(w.substr(0, w.size() - 2))) return true;
    return lex_.verbs.count(w.substr(0, w.size() - 1)) > 0;
  }

  bool plural_subject(const std::string& w) const {
    if (lex_.subject_pronouns.count(w)) return true;
    return w.size() > 3 && w.ends_with("s") && !w.ends_with("ss") && !w.ends_with("us") &&
           noun_like(w) && !third_person(w);
  }

  // The nearest preceding word that is not a skippable adverb, or "".
  static std::string predecessor(const std::vector<std::string>& words, std::size_t j) {
    while (j > 0) {
      --j;
      if (!is_adverb(words[j])) return words[j];
    }
    return "";
  }

  bool blocks_finite(const std::string& prev) const {
    return lex_.determiners.count(prev) || lex_.prepositions.count(prev) ||
           kNonFinitePredecessors.count(prev) || lex_.auxiliaries.count(prev);
  }

  bool content_finite(const std::vector<std::string>& words, std::size_t j, bool plural) const {
    const std::string& w = words[j];
    if (!is_word(w)) return false;
    const std::string prev = predecessor(words, j);
    // "randomized controlled trial"
    if (past_form(w)) return prev.empty() || (!blocks_finite(prev) && !past_form(prev));
    if (prev.empty() || blocks_finite(prev)) return false;
    if (third_person(w)) return noun_like(prev) || lex_.relative_pronouns.count(prev);
    if (!lex_.verbs.count(w)) return false;
    if (plural_subject(prev)) return true;
    // "the results remain", where the noun doubles as a verb form
    const std::string before = j >= 2 ? predecessor(words, j - 1) : "";
    if (prev.ends_with("s") && noun_like(prev) && lex_.determiners.count(before)) return true;
    // "John and Mary run"
    if (!plural) return false;
    return std::all_of(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(j),
                       [&](const std::string& x) { return noun_like(x); });
  }

  const Lexicon& lex_;
};

std::vector<Segment> segment(const std::vector<std::string>& tokens, const Lexicon& lex) {
  std::vector<Segment> segs;
  Segment cur;
  bool after_comma = false;
  auto close = [&](std::size_t at) {
    cur.end = at;
    if (cur.end > cur.begin) segs.push_back(std::move(cur));
    cur = Segment{};
    cur.begin = at;
  };
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& t = tokens[i];
    if (t == "," || t == ";" || t == ":") {
      close(i + 1);
      if (t != ",") cur.opener = Opener::semicolon;
      after_comma = t == ",";
      continue;
    }
    if (t == "." || t == "!" || t == "?") continue;
    const std::string w = text::to_lower(t);
    const bool empty_segment = cur.words.empty() && cur.opener_word.empty();
    Opener opener = Opener::none;
    if (lex.coordinators.count(w) && (!lex.comma_only_coordinators.count(w) || after_comma)) {
      opener = Opener::coordinator;
    } else if (lex.subordinators.count(w)) {
      opener = Opener::subordinator;
    } else if (lex.relative_pronouns.count(w)) {
      opener = Opener::relative;
    }
    after_comma = false;
    if (opener == Opener::none) {
      cur.words.push_back(w);
      cur.positions.push_back(i);
      continue;
    }
    // "and which", "but although": the subordinating word decides.
    if (!(empty_segment || (cur.words.empty() && cur.opener == Opener::coordinator))) close(i);
    if (!(opener == Opener::coordinator && cur.opener != Opener::none && cur.opener != Opener::semicolon)) {
      cur.opener = opener;
      cur.opener_word = w;
    }
  }
  close(tokens.size());
  return segs;
}

}  // namespace

ClauseAnalysis analyze_clauses(std::string_view sentence, const Lexicon& lexicon) {
  if (text::trim(sentence).empty()) throw PreconditionError("analyze_clauses needs a non-empty sentence");
  ClauseAnalysis out;
  out.tokens = clause_tokens(sentence);
  const FiniteFinder finder(lexicon);

  bool expect_subject = true;
  bool have_ic = false;
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::size_t pending = kNone;  // begin of a verbless would-be subject
  auto attach = [&](const Segment& seg) {
    if (!out.spans.empty()) out.spans.back().end = std::max(out.spans.back().end, seg.end);
  };
  auto add = [&](ClauseKind kind, std::size_t begin, std::size_t end) {
    if (!out.spans.empty()) begin = std::max(begin, out.spans.back().end);
    out.spans.push_back(ClauseSpan{kind, begin, end});
    (kind == ClauseKind::independent ? out.independent_clauses : out.dependent_clauses)++;
  };

  for (const Segment& seg : segment(out.tokens, lexicon)) {
    const bool compound_subject = seg.opener == Opener::coordinator && pending != kNone;
    const int verb = finder.find(seg.words, 0, compound_subject);
    if (seg.opener == Opener::subordinator) {
      const bool reduced = lexicon.reduced_subordinators.count(seg.opener_word) > 0;
      const bool participle = std::any_of(seg.words.begin(), seg.words.end(),
                                          [&](const std::string& w) { return finder.participle(w); });
      if (verb >= 0 || (reduced && participle)) {
        add(ClauseKind::dependent, seg.begin, seg.end);
        if (!have_ic) expect_subject = true;
      } else {
        attach(seg);
      }
      continue;
    }
    if (seg.opener == Opener::relative) {
      const int rel_verb = finder.find_after_relative(seg.words);
      // "The patients who received the drug improved": a second finite verb
      // after the relative clause belongs to the waiting subject.
      const int main_verb = (rel_verb >= 0 && pending != kNone)
                                ? finder.find(seg.words, static_cast<std::size_t>(rel_verb) + 1)
                                : -1;
      if (main_verb >= 0) {
        const std::size_t split = seg.positions[static_cast<std::size_t>(main_verb)];
        add(ClauseKind::dependent, seg.begin, split);
        add(ClauseKind::independent, split, seg.end);
        have_ic = true;
        expect_subject = false;
        pending = kNone;
      } else if (rel_verb >= 0) {
        add(ClauseKind::dependent, seg.begin, seg.end);
      } else {
        attach(seg);
      }
      continue;
    }
    if (seg.opener == Opener::coordinator || seg.opener == Opener::semicolon) expect_subject = true;
    bool subject = false;
    if (verb >= 0) {
      for (int j = 0; j < verb && !subject; ++j) subject = finder.noun_like(seg.words[j]);
    }
    const bool use_pending = verb >= 0 && !subject && expect_subject && pending != kNone;
    if (verb >= 0 && (subject || use_pending)) {
      if (seg.opener == Opener::coordinator && have_ic) ++out.coordinators_between_ics;
      add(ClauseKind::independent, use_pending || compound_subject ? pending : seg.begin, seg.end);
      have_ic = true;
      expect_subject = false;
      pending = kNone;
    } else if (verb < 0 && expect_subject && (seg.opener == Opener::none || pending == kNone)) {
      pending = seg.begin;
    } else {
      attach(seg);
    }
  }
  return out;
}

SentenceLabel classify_counts(int ic, int dc) {
  if (ic <= 0) return SentenceLabel::incomp;
  if (ic == 1) return dc <= 0 ? SentenceLabel::simp : SentenceLabel::comx;
  return dc <= 0 ? SentenceLabel::comp : SentenceLabel::comx_comp;
}

SentenceLabel classify(const ClauseAnalysis& a) {
  return classify_counts(a.independent_clauses, a.dependent_clauses);
}

Classification RuleClassifier::classify(const std::string& sentence) {
  return Classification{codekg::classify(analyze_clauses(sentence, *lexicon_)), false, ""};
}

// ---------------------------------------------------------------------------
// Backend classifier

std::optional<SentenceLabel> parse_label_response(std::string_view response) {
  std::string lower = text::to_lower(response);
  std::string_view scan = lower;
  if (auto pos = lower.rfind("category:"); pos != std::string::npos) {
    scan = std::string_view(lower).substr(pos + 9);
  }
  static const std::vector<std::pair<std::string, SentenceLabel>> names = {
      {"compound-complex", SentenceLabel::comx_comp}, {"compound_complex", SentenceLabel::comx_comp},
      {"compound complex", SentenceLabel::comx_comp}, {"comx_comp", SentenceLabel::comx_comp},
      {"incomplete", SentenceLabel::incomp},          {"compound", SentenceLabel::comp},
      {"complex", SentenceLabel::comx},               {"simple", SentenceLabel::simp},
      {"incomp", SentenceLabel::incomp},              {"comx", SentenceLabel::comx},
      {"comp", SentenceLabel::comp},                  {"simp", SentenceLabel::simp}};
  auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  for (std::size_t i = 0; i < scan.size(); ++i) {
    if (i > 0 && alnum(scan[i - 1])) continue;
    for (const auto& [name, label] : names) {
      if (scan.substr(i, name.size()) != name) continue;
      std::size_t end = i + name.size();
      if (end < scan.size() && alnum(scan[end])) continue;
      return label;
    }
  }
  return std::nullopt;
}

std::string format_examples(const std::vector<GoldSentence>& pool, std::size_t per_class) {
  std::string out;
  for (SentenceLabel label : kAllLabels) {
    std::size_t taken = 0;
    for (const auto& g : pool) {
      if (taken == per_class) break;
      if (g.label != label) continue;
      out += "Sentence: " + nlohmann::json(g.text).dump() + "\nCategory: " +
             std::string(long_name(label)) + "\n";
      ++taken;
    }
  }
  if (!out.empty()) out.pop_back();
  return out;
}

BackendClassifier::BackendClassifier(PromptStrategy strategy, ModelBackend& backend,
                                     Generator& generator, std::size_t examples_per_class)
    : strategy_(std::move(strategy)),
      backend_(&backend),
      generator_(&generator),
      examples_per_class_(examples_per_class) {}

std::string BackendClassifier::name() const { return strategy_.label() + "@" + backend_->name(); }

void BackendClassifier::fit(const std::vector<GoldSentence>& train) {
  examples_ = format_examples(train, examples_per_class_);
}

Classification BackendClassifier::classify(const std::string& sentence) {
  const std::string raw =
      generator_->generate(*backend_, strategy_, task_bindings(Task::classify, sentence, examples_));
  if (auto label = parse_label_response(raw)) return Classification{*label, false, ""};
  return Classification{SentenceLabel::incomp, true, "unparsable classification: " + raw.substr(0, 80)};
}

// ---------------------------------------------------------------------------
// Evaluation and selection

ClassifierReport report_from_pairs(
    const std::vector<std::pair<SentenceLabel, SentenceLabel>>& pairs) {
  ClassifierReport r;
  r.total = pairs.size();
  if (pairs.empty()) throw PreconditionError("classifier evaluation needs labeled sentences");
  std::size_t correct = 0;
  for (const auto& [g, p] : pairs) {
    ++r.confusion[static_cast<int>(g)][static_cast<int>(p)];
    correct += g == p;
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(r.total);
  double f1_sum = 0;
  for (SentenceLabel l : kAllLabels) {
    const int k = static_cast<int>(l);
    std::size_t gold = 0, predicted = 0;
    for (int j = 0; j < 5; ++j) {
      gold += r.confusion[k][j];
      predicted += r.confusion[j][k];
    }
    if (gold == 0) continue;
    const double tp = static_cast<double>(r.confusion[k][k]);
    PRF prf = make_prf(safe_ratio(tp, static_cast<double>(predicted)),
                       safe_ratio(tp, static_cast<double>(gold)));
    r.per_class[l] = prf;
    f1_sum += prf.f1;
  }
  r.macro_f1 = f1_sum / static_cast<double>(r.per_class.size());
  return r;
}

ClassifierReport evaluate_classifier(SentenceClassifier& classifier,
                                     const std::vector<GoldSentence>& labeled) {
  std::vector<std::pair<SentenceLabel, SentenceLabel>> pairs;
  std::size_t flagged = 0;
  for (const auto& g : labeled) {
    auto c = classifier.classify(g.text);
    flagged += c.flagged;
    pairs.emplace_back(g.label, c.label);
  }
  auto r = report_from_pairs(pairs);
  r.flagged = flagged;
  return r;
}

std::string confusion_csv(const ClassifierReport& report) {
  std::ostringstream out;
  out << "gold\\predicted";
  for (SentenceLabel l : kAllLabels) out << ',' << to_string(l);
  out << '\n';
  for (SentenceLabel g : kAllLabels) {
    out << to_string(g);
    for (SentenceLabel p : kAllLabels) {
      out << ',' << report.confusion[static_cast<int>(g)][static_cast<int>(p)];
    }
    out << '\n';
  }
  return out.str();
}

std::string classifier_report_csv(const ClassifierReport& report) {
  std::ostringstream out;
  out << "class,precision,recall,f1\n";
  for (const auto& [l, prf] : report.per_class) {
    out << to_string(l) << ',' << text::format_double(prf.precision) << ','
        << text::format_double(prf.recall) << ',' << text::format_double(prf.f1) << '\n';
  }
  out << "accuracy,,," << text::format_double(report.accuracy) << '\n';
  out << "macro_f1,,," << text::format_double(report.macro_f1) << '\n';
  return out.str();
}

DatasetSplit split_dataset(const std::vector<GoldSentence>& dataset, const SplitSpec& spec) {
  if (spec.train_fraction < 0 || spec.val_fraction < 0 ||
      spec.train_fraction + spec.val_fraction > 1.0 + 1e-9) {
    throw ConfigError("split fractions must be non-negative and sum to at most 1");
  }
  auto order = uniform_sample(dataset, dataset.size(), spec.seed);
  const auto n = static_cast<double>(order.size());
  auto n_train = static_cast<std::size_t>(std::llround(n * spec.train_fraction));
  auto n_val = static_cast<std::size_t>(std::llround(n * spec.val_fraction));
  n_train = std::min(n_train, order.size());
  n_val = std::min(n_val, order.size() - n_train);
  DatasetSplit split;
  split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  split.val.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                   order.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  return split;
}

ClassifierSelection select_classifier(const std::vector<SentenceClassifier*>& candidates,
                                      const std::vector<GoldSentence>& dataset,
                                      const SplitSpec& spec) {
  if (candidates.empty()) throw PreconditionError("select_classifier needs a candidate");
  auto split = split_dataset(dataset, spec);
  const auto& eval_set = split.val.empty() ? split.train : split.val;
  ClassifierSelection sel;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    candidates[i]->fit(split.train);
    auto r = evaluate_classifier(*candidates[i], eval_set);
    sel.table.push_back(ClassifierRow{candidates[i]->name(), r.accuracy, r.macro_f1});
    const auto& best = sel.table[sel.best_index];
    const auto& cur = sel.table.back();
    if (i == 0 || cur.macro_f1 > best.macro_f1 + 1e-12 ||
        (std::abs(cur.macro_f1 - best.macro_f1) <= 1e-12 && cur.name < best.name)) {
      sel.best_index = i;
    }
  }
  sel.best = sel.table[sel.best_index].name;
  return sel;
}

std::string classifier_table_csv(const std::vector<ClassifierRow>& table) {
  std::ostringstream out;
  out << "classifier,accuracy,macro_f1\n";
  for (const auto& r : table) {
    out << csv::escape(r.name) << ',' << text::format_double(r.accuracy) << ','
        << text::format_double(r.macro_f1) << '\n';
  }
  return out.str();
}

std::string_view to_string(LabelSource s) {
  switch (s) {
    case LabelSource::rule: return "rule";
    case LabelSource::backend: return "backend";
    case LabelSource::gold: return "gold";
  }
  return "rule";
}

LabelSource parse_label_source(std::string_view s) {
  for (LabelSource v : {LabelSource::rule, LabelSource::backend, LabelSource::gold}) {
    if (to_string(v) == s) return v;
  }
  throw SchemaError("unknown label source: " + std::string(s));
}

std::vector<LabeledSentence> label_corpus(SentenceClassifier& classifier, const Corpus& abstracts,
                                          Origin origin, LabelSource source, int jobs) {
  std::vector<SentenceRecord> sentences;
  for (const auto& a : abstracts) {
    auto recs = sentences_of(a, origin);
    sentences.insert(sentences.end(), recs.begin(), recs.end());
  }
  std::vector<LabeledSentence> out(sentences.size());
  parallel_for(sentences.size(), jobs, [&](std::size_t i) {
    auto c = classifier.classify(sentences[i].text);
    out[i] = LabeledSentence{sentences[i], c.label, source, c.flagged};
  });
  return out;
}

std::string labeled_jsonl(const std::vector<LabeledSentence>& labeled) {
  std::string out;
  for (const auto& l : labeled) {
    json j = json::object();
    j["abstract_id"] = l.sentence.abstract_id;
    j["sentence_index"] = l.sentence.sentence_index;
    j["origin"] = to_string(l.sentence.origin);
    j["text"] = l.sentence.text;
    j["label"] = to_string(l.label);
    j["source"] = to_string(l.source);
    j["flagged"] = l.flagged;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<LabeledSentence> parse_labeled_jsonl(std::string_view content) {
  std::vector<LabeledSentence> out;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      LabeledSentence l;
      l.sentence.abstract_id = j.at("abstract_id").get<std::string>();
      l.sentence.sentence_index = j.at("sentence_index").get<int>();
      l.sentence.origin = parse_origin(j.at("origin").get<std::string>());
      l.sentence.text = j.at("text").get<std::string>();
      l.label = parse_label(j.at("label").get<std::string>());
      l.source = parse_label_source(j.value("source", "rule"));
      l.flagged = j.value("flagged", false);
      out.push_back(std::move(l));
    } catch (const json::exception& e) {
      throw ParseError(std::string("labeled sentence record: ") + e.what(), line_no);
    } catch (const SchemaError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

std::vector<GoldSentence> parse_gold_sentences(std::string_view content) {
  std::vector<GoldSentence> out;
  auto first = content.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return out;
  if (content[first] == '{') {
    std::istringstream in{std::string(content)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (text::trim(line).empty()) continue;
      try {
        json j = json::parse(line);
        out.push_back(GoldSentence{j.at("text").get<std::string>(),
                                   parse_label(j.at("label").get<std::string>())});
      } catch (const json::exception& e) {
        throw ParseError(std::string("gold sentence record: ") + e.what(), line_no);
      } catch (const SchemaError& e) {
        throw ParseError(e.what(), line_no);
      }
    }
    return out;
  }
  auto rows = csv::parse(content);
  if (rows.empty()) return out;
  int text_col = -1, label_col = -1;
  for (std::size_t i = 0; i < rows[0].size(); ++i) {
    const auto h = text::to_lower(text::trim(rows[0][i]));
    if (h == "text" || h == "sentence") text_col = static_cast<int>(i);
    if (h == "label" || h == "category") label_col = static_cast<int>(i);
  }
  if (text_col < 0 || label_col < 0) throw ParseError("CSV header needs text and label columns", 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() <= static_cast<std::size_t>(std::max(text_col, label_col))) {
      throw ParseError("CSV row has too few columns", r + 1);
    }
    try {
      out.push_back(GoldSentence{row[text_col], parse_label(row[label_col])});
    } catch (const SchemaError& e) {
      throw ParseError(e.what(), r + 1);
    }
  }
  return out;
}

std::vector<GoldSentence> load_gold_sentences(const std::string& path) {
  return parse_gold_sentences(text::read_file(path));
}

}  // namespace codekg
