#include "codekg/coref.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "codekg/assignment.hpp"
#include "codekg/error.hpp"
#include "codekg/json_extract.hpp"
#include "codekg/parallel.hpp"
#include "codekg/text.hpp"

namespace codekg {

using nlohmann::json;

namespace {

std::string surface_key(std::string_view s) {
  return text::to_lower(text::strip_edge_punctuation(text::collapse_whitespace(s)));
}

std::optional<int> as_index(const json& v) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float()) {
    double d = v.get<double>();
    if (d == std::floor(d)) return static_cast<int>(d);
    return std::nullopt;
  }
  if (v.is_string()) {
    const auto s = std::string(text::trim(v.get<std::string>()));
    if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      return std::nullopt;
    }
    return std::stoi(s);
  }
  return std::nullopt;
}

std::optional<CorefAnnotation> annotation_from_json(const json& obj) {
  for (const char* k : {"Expression", "StartToken", "EndToken", "RefersTo"}) {
    if (!obj.contains(k)) return std::nullopt;
  }
  if (!obj["Expression"].is_string() || !obj["RefersTo"].is_string()) return std::nullopt;
  auto start = as_index(obj["StartToken"]);
  auto end = as_index(obj["EndToken"]);
  if (!start || !end) return std::nullopt;
  return CorefAnnotation{text::collapse_whitespace(obj["Expression"].get<std::string>()), *start,
                         *end, text::collapse_whitespace(obj["RefersTo"].get<std::string>())};
}

json annotation_to_json(const CorefAnnotation& a) {
  json j = json::object();
  j["Expression"] = a.expression;
  j["StartToken"] = a.start_token;
  j["EndToken"] = a.end_token;
  j["RefersTo"] = a.refers_to;
  return j;
}

}  // namespace

bool valid_annotation(const CorefAnnotation& a, const TokenizedAbstract& abstract) {
  const int n = static_cast<int>(abstract.size());
  if (a.start_token < 0 || a.start_token > a.end_token || a.end_token >= n) return false;
  if (text::trim(a.refers_to).empty()) return false;
  std::string covered;
  for (int i = a.start_token; i <= a.end_token; ++i) {
    if (i > a.start_token) covered += ' ';
    covered += abstract.tokens[i].surface;
  }
  const std::string want = surface_key(a.expression);
  return !want.empty() && want == surface_key(covered);
}

ParsedAnnotations parse_annotations(std::string_view raw, const TokenizedAbstract& abstract,
                                    const std::string& annotator) {
  auto doc = first_object_array(raw);
  if (!doc) throw NoParsableOutput();
  ParsedAnnotations out;
  out.set.abstract_id = abstract.abstract_id;
  out.set.annotator = annotator;
  std::set<std::pair<int, int>> seen;
  for (const auto& obj : *doc) {
    auto a = annotation_from_json(obj);
    if (!a || !valid_annotation(*a, abstract) || !seen.emplace(a->start_token, a->end_token).second) {
      ++out.dropped;
      continue;
    }
    out.set.annotations.push_back(std::move(*a));
  }
  return out;
}

Similarity antecedent_similarity(double threshold) { return Similarity::token_tf(threshold, true); }

std::optional<AnnotationSet> build_gold(const std::vector<AnnotationSet>& per_annotator,
                                        const Similarity& similarity) {
  if (per_annotator.size() < 2) {
    throw PreconditionError("build_gold needs at least two annotator sets");
  }
  using SpanMap = std::map<std::pair<int, int>, std::string>;
  std::vector<SpanMap> maps;
  for (const auto& set : per_annotator) {
    SpanMap m;
    for (const auto& a : set.annotations) m[{a.start_token, a.end_token}] = a.refers_to;
    maps.push_back(std::move(m));
  }
  for (std::size_t i = 0; i < maps.size(); ++i) {
    for (std::size_t j = i + 1; j < maps.size(); ++j) {
      if (maps[i].size() != maps[j].size()) return std::nullopt;
      for (auto it = maps[i].begin(), jt = maps[j].begin(); it != maps[i].end(); ++it, ++jt) {
        if (it->first != jt->first) return std::nullopt;
        if (!similarity.matches(it->second, jt->second)) return std::nullopt;
      }
    }
  }
  AnnotationSet gold = per_annotator.front();
  std::sort(gold.annotations.begin(), gold.annotations.end(),
            [](const CorefAnnotation& a, const CorefAnnotation& b) {
              return std::pair(a.start_token, a.end_token) < std::pair(b.start_token, b.end_token);
            });
  gold.annotator = "gold";
  return gold;
}

ChainPair build_chains(const AnnotationSet& pred, const AnnotationSet& gold,
                       const Similarity& similarity) {
  std::vector<std::string> reps;
  auto group_of = [&](const std::string& antecedent) {
    for (std::size_t k = 0; k < reps.size(); ++k) {
      if (similarity.matches(reps[k], antecedent)) return k;
    }
    reps.push_back(antecedent);
    return reps.size() - 1;
  };
  auto chains_for = [&](const AnnotationSet& set) {
    std::map<std::size_t, Chain> by_group;
    for (const auto& a : set.annotations) {
      std::size_t k = group_of(text::collapse_whitespace(a.refers_to));
      auto& chain = by_group[k];
      chain.insert("a:" + std::to_string(k));
      chain.insert("s:" + std::to_string(a.start_token) + ":" + std::to_string(a.end_token));
    }
    Chains out;
    for (auto& [k, c] : by_group) out.push_back(std::move(c));
    return out;
  };
  ChainPair pair;
  pair.key = chains_for(gold);
  pair.response = chains_for(pred);
  return pair;
}

namespace {

std::map<std::string, std::size_t> chain_index(const Chains& chains) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < chains.size(); ++i) {
    for (const auto& m : chains[i]) idx[m] = i;
  }
  return idx;
}

// Sum over chains of |c| - p(c) and |c| - 1, where p(c) counts the parts c is
// cut into by `other` (mentions missing from `other` are parts of their own).
std::pair<double, double> muc_counts(const Chains& chains, const Chains& other) {
  auto idx = chain_index(other);
  double num = 0, den = 0;
  for (const auto& c : chains) {
    if (c.empty()) continue;
    std::set<std::size_t> parts;
    std::size_t missing = 0;
    for (const auto& m : c) {
      auto it = idx.find(m);
      if (it == idx.end()) {
        ++missing;
      } else {
        parts.insert(it->second);
      }
    }
    num += static_cast<double>(c.size()) - static_cast<double>(parts.size() + missing);
    den += static_cast<double>(c.size()) - 1;
  }
  return {num, den};
}

std::size_t overlap(const Chain& a, const Chain& b) {
  std::size_t n = 0;
  for (const auto& m : a) n += b.count(m);
  return n;
}

std::pair<double, double> b3_counts(const Chains& chains, const Chains& other) {
  auto idx = chain_index(other);
  double num = 0, den = 0;
  for (const auto& c : chains) {
    for (const auto& m : c) {
      auto it = idx.find(m);
      if (it != idx.end()) {
        num += static_cast<double>(overlap(c, other[it->second])) / static_cast<double>(c.size());
      }
      den += 1;
    }
  }
  return {num, den};
}

}  // namespace

PRF muc_score(const Chains& key, const Chains& response) {
  auto [rn, rd] = muc_counts(key, response);
  auto [pn, pd] = muc_counts(response, key);
  return make_prf(safe_ratio(pn, pd), safe_ratio(rn, rd));
}

PRF b_cubed_score(const Chains& key, const Chains& response) {
  auto [rn, rd] = b3_counts(key, response);
  auto [pn, pd] = b3_counts(response, key);
  return make_prf(safe_ratio(pn, pd), safe_ratio(rn, rd));
}

PRF ceaf_e_score(const Chains& key, const Chains& response) {
  std::vector<std::vector<double>> w(key.size(), std::vector<double>(response.size(), 0.0));
  for (std::size_t i = 0; i < key.size(); ++i) {
    for (std::size_t j = 0; j < response.size(); ++j) {
      double denom = static_cast<double>(key[i].size() + response[j].size());
      w[i][j] = denom > 0 ? 2.0 * static_cast<double>(overlap(key[i], response[j])) / denom : 0.0;
    }
  }
  double best = assignment_weight(w, max_weight_assignment(w));
  return make_prf(safe_ratio(best, static_cast<double>(response.size())),
                  safe_ratio(best, static_cast<double>(key.size())));
}

CorefScores score_chains(const Chains& key, const Chains& response) {
  CorefScores s;
  s.muc = muc_score(key, response);
  s.b3 = b_cubed_score(key, response);
  s.ceaf = ceaf_e_score(key, response);
  s.conll = (s.muc.f1 + s.b3.f1 + s.ceaf.f1) / 3.0;
  return s;
}

CorefScores score_coref(const AnnotationSet& pred, const AnnotationSet& gold,
                        const Similarity& similarity) {
  if (pred.annotations.empty() && gold.annotations.empty()) {
    PRF one{1, 1, 1};
    return CorefScores{one, one, one, 1.0};
  }
  auto chains = build_chains(pred, gold, similarity);
  return score_chains(chains.key, chains.response);
}

namespace {

// Edge punctuation that closes (or opens) a bracket belonging to the replaced
// mention goes away with it.
std::string drop_unpaired_brackets(const std::string& edge, const std::string& inner, bool closing) {
  static constexpr std::string_view kOpen = "([{", kClose = ")]}";
  int surplus[3] = {0, 0, 0};
  for (char c : inner) {
    if (auto o = kOpen.find(c); o != std::string_view::npos) surplus[o] += closing ? 1 : -1;
    if (auto k = kClose.find(c); k != std::string_view::npos) surplus[k] += closing ? -1 : 1;
  }
  std::string out;
  const std::string_view mine = closing ? kClose : kOpen;
  auto keep = [&](char c) {
    auto b = mine.find(c);
    if (b == std::string_view::npos || surplus[b] <= 0) return true;
    --surplus[b];
    return false;
  };
  if (closing) {
    for (char c : edge) if (keep(c)) out += c;
  } else {
    for (auto r = edge.rbegin(); r != edge.rend(); ++r) if (keep(*r)) out.insert(out.begin(), *r);
  }
  return out;
}

}  // namespace

std::string apply_resolution(const TokenizedAbstract& abstract, const AnnotationSet& annotations) {
  std::vector<CorefAnnotation> spans = annotations.annotations;
  const int n = static_cast<int>(abstract.size());
  for (const auto& a : spans) {
    if (a.start_token < 0 || a.start_token > a.end_token || a.end_token >= n) {
      throw PreconditionError("annotation span [" + std::to_string(a.start_token) + "," +
                              std::to_string(a.end_token) + "] is outside the abstract");
    }
  }
  std::sort(spans.begin(), spans.end(), [](const CorefAnnotation& a, const CorefAnnotation& b) {
    return std::pair(a.start_token, a.end_token) < std::pair(b.start_token, b.end_token);
  });
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i].start_token <= spans[i - 1].end_token) {
      throw OverlappingSpans(spans[i - 1].start_token, spans[i - 1].end_token,
                             spans[i].start_token, spans[i].end_token);
    }
  }
  std::vector<std::string> pieces;
  pieces.reserve(abstract.size());
  for (const auto& t : abstract.tokens) pieces.push_back(t.surface);
  for (auto it = spans.rbegin(); it != spans.rend(); ++it) {
    const std::string& first = pieces[it->start_token];
    const std::string& last = pieces[it->end_token];
    std::string lead, trail;
    if (auto core = text::strip_edge_punctuation(first); !core.empty()) {
      lead = first.substr(0, static_cast<std::size_t>(core.data() - first.data()));
    }
    if (auto core = text::strip_edge_punctuation(last); !core.empty()) {
      trail = last.substr(static_cast<std::size_t>(core.data() - last.data()) + core.size());
    }
    std::string inner;
    for (int k = it->start_token; k <= it->end_token; ++k) inner += pieces[k] + " ";
    inner = inner.substr(lead.size(), inner.size() - 1 - lead.size() - trail.size());
    lead = drop_unpaired_brackets(lead, inner, false);
    trail = drop_unpaired_brackets(trail, inner, true);
    std::string replacement = lead + text::collapse_whitespace(it->refers_to) + trail;
    pieces.erase(pieces.begin() + it->start_token + 1, pieces.begin() + it->end_token + 1);
    pieces[it->start_token] = std::move(replacement);
  }
  return text::join(pieces, " ");
}

double cohen_kappa(double p_observed, double p_expected) {
  if (p_expected == 1.0) throw DegenerateExpected();
  if (!(p_observed >= 0 && p_observed <= 1) || !(p_expected >= 0 && p_expected < 1)) {
    throw PreconditionError("agreement probabilities must lie in [0,1]");
  }
  return (p_observed - p_expected) / (1.0 - p_expected);
}

double observed_agreement(std::size_t intersection, std::size_t union_size) {
  if (intersection > union_size) {
    throw PreconditionError("intersection cannot exceed union");
  }
  if (union_size == 0) return 1.0;
  return static_cast<double>(intersection) / static_cast<double>(union_size);
}

double observed_agreement(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::size_t inter = 0;
  for (const auto& x : a) inter += b.count(x);
  return observed_agreement(inter, a.size() + b.size() - inter);
}

double cohen_kappa(const std::set<std::string>& a, const std::set<std::string>& b,
                   double p_expected) {
  return cohen_kappa(observed_agreement(a, b), p_expected);
}

std::set<std::string> annotation_links(const AnnotationSet& set) {
  std::set<std::string> out;
  for (const auto& a : set.annotations) {
    out.insert(std::to_string(a.start_token) + ":" + std::to_string(a.end_token) + "->" +
               text::normalize(a.refers_to));
  }
  return out;
}

CorefPrediction predict_coref(Generator& generator, ModelBackend& backend,
                              const PromptStrategy& strategy, const TokenizedAbstract& abstract) {
  const std::string annotator = "model:" + backend.name() + "/" + strategy.label();
  const std::string raw =
      generator.generate(backend, strategy, {{"tokenized_text", format_token_list(abstract)}});
  CorefPrediction out;
  try {
    auto parsed = parse_annotations(raw, abstract, annotator);
    out.set = std::move(parsed.set);
    out.dropped = parsed.dropped;
  } catch (const NoParsableOutput&) {
    out.set = AnnotationSet{abstract.abstract_id, {}, annotator};
    out.unparsable = true;
  }
  return out;
}

CorefSelection select_coref_config(const std::vector<PromptStrategy>& strategies,
                                   const std::vector<ModelBackend*>& backends,
                                   const std::vector<GoldDocument>& gold, Generator& generator,
                                   const Similarity& similarity, int jobs) {
  if (strategies.empty() || backends.empty()) {
    throw PreconditionError("coreference grid needs at least one strategy and one backend");
  }
  if (gold.empty()) throw PreconditionError("coreference selection needs a non-empty gold set");
  CorefSelection sel;
  for (const auto& s : strategies) {
    for (auto* b : backends) {
      CorefCell cell;
      cell.strategy = s.label();
      cell.model = b->name();
      sel.table.push_back(std::move(cell));
    }
  }
  parallel_for(sel.table.size(), jobs, [&](std::size_t c) {
    const auto& strategy = strategies[c / backends.size()];
    ModelBackend& backend = *backends[c % backends.size()];
    CorefCell& cell = sel.table[c];
    try {
      double muc = 0, b3 = 0, ceaf = 0, conll = 0;
      for (const auto& doc : gold) {
        auto pred = predict_coref(generator, backend, strategy, doc.abstract);
        if (pred.unparsable) ++cell.unparsable;
        auto s = score_coref(pred.set, doc.gold, similarity);
        muc += s.muc.f1;
        b3 += s.b3.f1;
        ceaf += s.ceaf.f1;
        conll += s.conll;
      }
      const double n = static_cast<double>(gold.size());
      cell.muc_f1 = muc / n;
      cell.b3_f1 = b3 / n;
      cell.ceaf_f1 = ceaf / n;
      cell.conll_f1 = conll / n;
    } catch (const BackendFailure& e) {
      cell.failed = true;
      cell.error = e.what();
      cell.muc_f1 = cell.b3_f1 = cell.ceaf_f1 = cell.conll_f1 = 0;
    }
  });
  const CorefCell* best = &sel.table.front();
  for (const auto& cell : sel.table) {
    if (cell.conll_f1 > best->conll_f1 + 1e-12 ||
        (std::abs(cell.conll_f1 - best->conll_f1) <= 1e-12 &&
         std::pair(cell.strategy, cell.model) < std::pair(best->strategy, best->model))) {
      best = &cell;
    }
  }
  sel.strategy = best->strategy;
  sel.model = best->model;
  return sel;
}

std::string coref_table_csv(const std::vector<CorefCell>& table) {
  std::ostringstream out;
  out << "strategy,model,muc_f1,b3_f1,ceaf_f1,conll_f1,flag\n";
  for (const auto& c : table) {
    std::string flag = c.failed ? "failed" : (c.unparsable ? "unparsable:" + std::to_string(c.unparsable) : "");
    out << c.strategy << ',' << c.model << ',' << text::format_double(c.muc_f1) << ','
        << text::format_double(c.b3_f1) << ',' << text::format_double(c.ceaf_f1) << ','
        << text::format_double(c.conll_f1) << ',' << flag << '\n';
  }
  return out.str();
}

std::vector<AnnotationSet> parse_annotation_jsonl(std::string_view content) {
  std::vector<AnnotationSet> out;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError("annotation line is not a JSON object", line_no);
    if (!j.contains("abstract_id") || !j["abstract_id"].is_string() || !j.contains("annotations") ||
        !j["annotations"].is_array()) {
      throw ParseError("annotation line needs abstract_id and an annotations array", line_no);
    }
    AnnotationSet set;
    set.abstract_id = j["abstract_id"].get<std::string>();
    set.annotator = j.value("annotator", std::string());
    for (const auto& obj : j["annotations"]) {
      auto a = obj.is_object() ? annotation_from_json(obj) : std::nullopt;
      if (!a) throw ParseError("annotation object lacks Expression/StartToken/EndToken/RefersTo", line_no);
      set.annotations.push_back(std::move(*a));
    }
    out.push_back(std::move(set));
  }
  return out;
}

std::vector<AnnotationSet> load_annotation_jsonl(const std::string& path) {
  return parse_annotation_jsonl(text::read_file(path));
}

std::string annotation_jsonl(const std::vector<AnnotationSet>& sets) {
  std::string out;
  for (const auto& s : sets) {
    json arr = json::array();
    for (const auto& a : s.annotations) arr.push_back(annotation_to_json(a));
    json j = json::object();
    j["abstract_id"] = s.abstract_id;
    j["annotator"] = s.annotator;
    j["annotations"] = arr;
    out += j.dump();
    out += '\n';
  }
  return out;
}

GoldCorpus gold_from_annotations(const std::vector<AnnotationSet>& sets,
                                 const Similarity& similarity) {
  std::map<std::string, std::vector<AnnotationSet>> by_abstract;
  for (const auto& s : sets) by_abstract[s.abstract_id].push_back(s);
  GoldCorpus gold;
  for (auto& [id, group] : by_abstract) {
    if (group.size() == 1) {
      gold.annotations[id] = group.front();
    } else if (auto g = build_gold(group, similarity)) {
      gold.annotations[id] = std::move(*g);
    }
  }
  return gold;
}

}  // namespace codekg
