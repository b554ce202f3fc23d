#include "codekg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <json.hpp>

#include "codekg/assignment.hpp"
#include "codekg/csv.hpp"
#include "codekg/error.hpp"
#include "codekg/text.hpp"

namespace codekg {

using nlohmann::json;

std::string_view to_string(MatchMode m) { return m == MatchMode::per_field ? "per_field" : "whole"; }

MatchMode parse_match_mode(std::string_view s) {
  if (s == "per_field" || s == "per-field" || s == "field") return MatchMode::per_field;
  if (s == "whole") return MatchMode::whole;
  throw ConfigError("unknown match mode: " + std::string(s));
}

FieldScores field_scores(const Triple& pred, const Triple& gold, const Similarity& similarity) {
  return FieldScores{similarity(pred.entity1, gold.entity1), similarity(pred.relation, gold.relation),
                     similarity(pred.entity2, gold.entity2)};
}

namespace {

std::string joined(const Triple& t) { return t.entity1 + " " + t.relation + " " + t.entity2; }

// Match score of a pair, or nullopt when it misses the threshold.
std::optional<double> pair_score(const Triple& p, const Triple& g, const Similarity& sim,
                                 MatchMode mode, FieldScores* scores) {
  if (mode == MatchMode::whole) {
    const double s = sim(joined(p), joined(g));
    if (scores) *scores = field_scores(p, g, sim);
    if (s < sim.threshold() - 1e-12) return std::nullopt;
    return s;
  }
  FieldScores f = field_scores(p, g, sim);
  if (scores) *scores = f;
  const double floor = sim.threshold() - 1e-12;
  if (f.entity1 < floor || f.relation < floor || f.entity2 < floor) return std::nullopt;
  return f.mean();
}

}  // namespace

TripleMatchResult match_triples(const std::vector<Triple>& pred, const std::vector<Triple>& gold,
                                const Similarity& similarity, MatchMode mode) {
  std::vector<ScoredPair> candidates;
  std::map<std::pair<std::size_t, std::size_t>, FieldScores> scores;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < gold.size(); ++j) {
      FieldScores f;
      if (auto s = pair_score(pred[i], gold[j], similarity, mode, &f)) {
        candidates.push_back(ScoredPair{i, j, *s});
        scores[{i, j}] = f;
      }
    }
  }
  TripleMatchResult r;
  std::vector<bool> pred_used(pred.size(), false), gold_used(gold.size(), false);
  for (const auto& m : greedy_match(std::move(candidates))) {
    r.matches.push_back(TripleMatch{m.row, m.col, scores[{m.row, m.col}]});
    pred_used[m.row] = true;
    gold_used[m.col] = true;
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (!pred_used[i]) r.unmatched_pred.push_back(i);
  }
  for (std::size_t j = 0; j < gold.size(); ++j) {
    if (!gold_used[j]) r.unmatched_gold.push_back(j);
  }
  r.pred_count = pred.size();
  r.gold_count = gold.size();
  return r;
}

void apply_allowlist(TripleMatchResult& result, const std::vector<Triple>& pred,
                     const std::vector<Triple>& allowlist, const Similarity& similarity,
                     MatchMode mode) {
  std::vector<std::size_t> keep;
  for (std::size_t i : result.unmatched_pred) {
    const bool allowed = std::any_of(allowlist.begin(), allowlist.end(), [&](const Triple& a) {
      return pair_score(pred[i], a, similarity, mode, nullptr).has_value();
    });
    if (allowed) {
      result.excused_pred.push_back(i);
      --result.pred_count;
    } else {
      keep.push_back(i);
    }
  }
  result.unmatched_pred = std::move(keep);
}

DocumentPRF document_prf(const TripleMatchResult& r) {
  const auto m = static_cast<double>(r.matches.size());
  if (r.pred_count == 0 && r.gold_count == 0) return DocumentPRF{1.0, 1.0};
  return DocumentPRF{safe_ratio(m, static_cast<double>(r.pred_count)),
                     safe_ratio(m, static_cast<double>(r.gold_count))};
}

TripleScore score_triples(const std::vector<TripleMatchResult>& documents) {
  if (documents.empty()) throw EmptyBatch();
  TripleScore s;
  s.documents = documents.size();
  double p_sum = 0, r_sum = 0, f_sum = 0, exact = 0, sq = 0;
  for (const auto& d : documents) {
    const auto prf = document_prf(d);
    p_sum += prf.precision;
    r_sum += prf.recall;
    f_sum += harmonic_f1(prf.precision, prf.recall);
    exact += (prf.precision == 1.0 && prf.recall == 1.0) ? 1 : 0;
    const double err = static_cast<double>(d.pred_count) - static_cast<double>(d.gold_count);
    sq += err * err;
    s.pred_total += d.pred_count;
    s.gold_total += d.gold_count;
    s.matched_total += d.matches.size();
  }
  const auto n = static_cast<double>(documents.size());
  s.macro = PRF{p_sum / n, r_sum / n, f_sum / n};
  s.micro = make_prf(safe_ratio(static_cast<double>(s.matched_total), static_cast<double>(s.pred_total)),
                     safe_ratio(static_cast<double>(s.matched_total), static_cast<double>(s.gold_total)));
  s.exact_match = exact / n;
  s.rmse = std::sqrt(sq / n);
  return s;
}

std::string document_of(const std::string& source) {
  auto last = source.rfind('/');
  if (last == std::string::npos || last == 0) return source;
  auto mid = source.rfind('/', last - 1);
  if (mid == std::string::npos) return source;
  const std::string origin = source.substr(mid + 1, last - mid - 1);
  if (origin != "original" && origin != "coref_resolved" && origin != "simplified") return source;
  return source.substr(0, mid);
}

DocumentTriples group_by_document(const std::vector<Triple>& triples) {
  DocumentTriples out;
  for (const auto& t : triples) out[document_of(t.source)].push_back(t);
  return out;
}

DocumentTriples parse_gold_triples_jsonl(std::string_view content) {
  DocumentTriples out;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      const std::string doc = j.at("doc_id").get<std::string>();
      auto& list = out[doc];
      for (const auto& obj : j.at("triples")) {
        auto parsed = parse_triples_jsonl(obj.dump());
        for (auto& t : parsed) {
          if (t.source.empty()) t.source = doc;
          list.push_back(std::move(t));
        }
      }
    } catch (const json::exception& e) {
      throw ParseError(std::string("gold triple record: ") + e.what(), line_no);
    } catch (const ParseError& e) {
      throw ParseError(std::string("gold triple record: ") + e.what(), line_no);
    }
  }
  return out;
}

DocumentTriples load_gold_triples_jsonl(const std::string& path) {
  return parse_gold_triples_jsonl(text::read_file(path));
}

std::string gold_triples_jsonl(const DocumentTriples& docs) {
  std::string out;
  for (const auto& [doc, triples] : docs) {
    json j = json::object();
    j["doc_id"] = doc;
    j["triples"] = json::array();
    for (const auto& t : triples) {
      j["triples"].push_back({{"Entity 1", t.entity1}, {"Relationship", t.relation}, {"Entity 2", t.entity2}});
    }
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<DocumentMatch> match_documents(const DocumentTriples& pred, const DocumentTriples& gold,
                                           const Similarity& similarity, MatchMode mode,
                                           const DocumentTriples* allowlist) {
  std::set<std::string> ids;
  for (const auto& [k, v] : pred) ids.insert(k);
  for (const auto& [k, v] : gold) ids.insert(k);
  std::vector<DocumentMatch> out;
  static const std::vector<Triple> none;
  for (const auto& id : ids) {
    DocumentMatch d;
    d.doc_id = id;
    auto p = pred.find(id);
    auto g = gold.find(id);
    d.pred = p == pred.end() ? none : p->second;
    d.gold = g == gold.end() ? none : g->second;
    d.result = match_triples(d.pred, d.gold, similarity, mode);
    if (allowlist) {
      auto a = allowlist->find(id);
      if (a != allowlist->end()) apply_allowlist(d.result, d.pred, a->second, similarity, mode);
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<TripleMatchResult> results_of(const std::vector<DocumentMatch>& docs) {
  std::vector<TripleMatchResult> out;
  for (const auto& d : docs) out.push_back(d.result);
  return out;
}

std::string triple_score_csv(const std::vector<std::pair<std::string, TripleScore>>& runs) {
  std::vector<std::string> header{"Metrics"};
  for (const auto& [name, s] : runs) header.push_back(name);
  std::string out = csv::row(header);
  using Getter = double (*)(const TripleScore&);
  const std::pair<const char*, Getter> rows[] = {
      {"Exact-Match", [](const TripleScore& s) { return s.exact_match; }},
      {"Prec Macro", [](const TripleScore& s) { return s.macro.precision; }},
      {"Rec Macro", [](const TripleScore& s) { return s.macro.recall; }},
      {"F1-Score Macro", [](const TripleScore& s) { return s.macro.f1; }},
      {"Prec Micro", [](const TripleScore& s) { return s.micro.precision; }},
      {"Rec Micro", [](const TripleScore& s) { return s.micro.recall; }},
      {"F1-Score Micro", [](const TripleScore& s) { return s.micro.f1; }},
      {"RMSE", [](const TripleScore& s) { return s.rmse; }},
  };
  for (const auto& [label, get] : rows) {
    std::vector<std::string> row{label};
    for (const auto& [name, s] : runs) row.push_back(text::format_double(get(s)));
    out += csv::row(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Error analysis

std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::missing: return "missing";
    case ErrorKind::spurious: return "spurious";
    case ErrorKind::relation_mismatch: return "relation_mismatch";
  }
  return "missing";
}

ErrorHistogram& ErrorHistogram::operator+=(const ErrorHistogram& o) {
  missing += o.missing;
  spurious += o.spurious;
  relation_mismatch += o.relation_mismatch;
  missing_and_spurious_documents += o.missing_and_spurious_documents;
  documents += o.documents;
  return *this;
}

BucketResult bucketize_errors(const TripleMatchResult& result, const std::vector<Triple>& pred,
                              const std::vector<Triple>& gold, const Similarity& similarity) {
  const double floor = similarity.threshold() - 1e-12;
  std::vector<ScoredPair> candidates;
  for (std::size_t gi = 0; gi < result.unmatched_gold.size(); ++gi) {
    const Triple& g = gold[result.unmatched_gold[gi]];
    for (std::size_t pi = 0; pi < result.unmatched_pred.size(); ++pi) {
      const Triple& p = pred[result.unmatched_pred[pi]];
      const double d1 = similarity(p.entity1, g.entity1), d2 = similarity(p.entity2, g.entity2);
      const double s1 = similarity(p.entity1, g.entity2), s2 = similarity(p.entity2, g.entity1);
      double best = -1;
      if (d1 >= floor && d2 >= floor) best = (d1 + d2) / 2;
      if (s1 >= floor && s2 >= floor) best = std::max(best, (s1 + s2) / 2);
      if (best >= 0) candidates.push_back(ScoredPair{gi, pi, best});
    }
  }
  BucketResult out;
  std::vector<bool> gold_paired(result.unmatched_gold.size(), false);
  std::vector<bool> pred_paired(result.unmatched_pred.size(), false);
  for (const auto& m : greedy_match(std::move(candidates))) {
    gold_paired[m.row] = true;
    pred_paired[m.col] = true;
    out.buckets.push_back(ErrorBucket{ErrorKind::relation_mismatch, pred[result.unmatched_pred[m.col]],
                                      gold[result.unmatched_gold[m.row]]});
    ++out.histogram.relation_mismatch;
  }
  for (std::size_t gi = 0; gi < gold_paired.size(); ++gi) {
    if (gold_paired[gi]) continue;
    out.buckets.push_back(ErrorBucket{ErrorKind::missing, std::nullopt, gold[result.unmatched_gold[gi]]});
    ++out.histogram.missing;
  }
  for (std::size_t pi = 0; pi < pred_paired.size(); ++pi) {
    if (pred_paired[pi]) continue;
    out.buckets.push_back(ErrorBucket{ErrorKind::spurious, pred[result.unmatched_pred[pi]], std::nullopt});
    ++out.histogram.spurious;
  }
  out.histogram.documents = 1;
  out.histogram.missing_and_spurious_documents =
      (out.histogram.missing > 0 && out.histogram.spurious > 0) ? 1 : 0;
  return out;
}

std::string error_histogram_csv(const ErrorHistogram& h) {
  const double total = static_cast<double>(h.missing + h.spurious + h.relation_mismatch);
  auto share = [&](std::size_t n) { return text::format_double(safe_ratio(static_cast<double>(n), total)); };
  std::string out = "kind,count,share\n";
  out += "missing," + std::to_string(h.missing) + "," + share(h.missing) + "\n";
  out += "spurious," + std::to_string(h.spurious) + "," + share(h.spurious) + "\n";
  out += "relation_mismatch," + std::to_string(h.relation_mismatch) + "," + share(h.relation_mismatch) + "\n";
  out += "missing+spurious_documents," + std::to_string(h.missing_and_spurious_documents) + "," +
         text::format_double(safe_ratio(static_cast<double>(h.missing_and_spurious_documents),
                                        static_cast<double>(h.documents))) +
         "\n";
  return out;
}

std::string error_histogram_svg(const ErrorHistogram& h) {
  const std::pair<const char*, std::size_t> bars[] = {
      {"missing", h.missing},
      {"spurious", h.spurious},
      {"relation mismatch", h.relation_mismatch},
      {"missing+spurious docs", h.missing_and_spurious_documents}};
  std::size_t peak = 1;
  for (const auto& [label, n] : bars) peak = std::max(peak, n);
  const int width = 480, height = 260, base = 220, bar_w = 80, gap = 30, left = 40;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "  <line x1=\"" << left - 10 << "\" y1=\"" << base << "\" x2=\"" << width - 10 << "\" y2=\""
      << base << "\" stroke=\"black\"/>\n";
  int x = left;
  for (const auto& [label, n] : bars) {
    const int bh = static_cast<int>(std::lround(180.0 * static_cast<double>(n) / static_cast<double>(peak)));
    out << "  <rect x=\"" << x << "\" y=\"" << base - bh << "\" width=\"" << bar_w << "\" height=\"" << bh
        << "\" fill=\"#4a7ab5\"/>\n";
    out << "  <text x=\"" << x + bar_w / 2 << "\" y=\"" << base - bh - 4
        << "\" font-size=\"12\" text-anchor=\"middle\">" << n << "</text>\n";
    out << "  <text x=\"" << x + bar_w / 2 << "\" y=\"" << base + 16
        << "\" font-size=\"10\" text-anchor=\"middle\">" << label << "</text>\n";
    x += bar_w + gap;
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace codekg
