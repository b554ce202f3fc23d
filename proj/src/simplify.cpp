#include "codekg/simplify.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "codekg/csv.hpp"
#include "codekg/error.hpp"
#include "codekg/parallel.hpp"
#include "codekg/text.hpp"

namespace codekg {

using nlohmann::json;

bool decomposable(SentenceLabel label) {
  return label == SentenceLabel::comx || label == SentenceLabel::comp ||
         label == SentenceLabel::comx_comp;
}

Task simplify_task(SentenceLabel category) {
  switch (category) {
    case SentenceLabel::comx: return Task::simplify_comx;
    case SentenceLabel::comp: return Task::simplify_comp;
    case SentenceLabel::comx_comp: return Task::simplify_comx_comp;
    default:
      throw PreconditionError("no decomposition for category " + std::string(to_string(category)));
  }
}

std::string ensure_terminal(std::string_view sentence) {
  std::string s(text::trim(sentence));
  if (s.empty()) return s;
  const char last = s.back();
  if (last == '.' || last == '!' || last == '?') return s;
  if (last == ',' || last == ';' || last == ':') {
    s.back() = '.';
    while (s.size() > 1 && text::is_space(s[s.size() - 2])) s.erase(s.size() - 2, 1);
    return s;
  }
  return s + ".";
}

namespace {

std::string strip_bullet(std::string_view line) {
  std::string_view l = text::trim(line);
  for (std::string_view b : {"\\item", "- ", "* ", "\xE2\x80\xA2"}) {
    if (l.starts_with(b)) {
      l = text::trim(l.substr(b.size()));
      break;
    }
  }
  return std::string(l);
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  if (s.size() >= 6 && s.starts_with("\xE2\x80\x9C") && s.ends_with("\xE2\x80\x9D")) {
    s = s.substr(3, s.size() - 6);
  }
  return std::string(text::trim(s));
}

}  // namespace

ParsedDecomposition parse_decomposition(std::string_view response) {
  static const std::regex marked(R"(^\**\s*\$?[Ss]\s*(\d+)\**\s*\$?\s*(?:→|->|=>|\\rightarrow|:|\)|\.)?\s*\$?\s*(.*)$)");
  static const std::regex numbered(R"(^(\d+)\s*[.)]\s+(.*)$)");
  std::vector<std::pair<int, std::string>> s_lines, n_lines;
  std::vector<std::string> plain;
  std::istringstream in{std::string(response)};
  std::string raw;
  while (std::getline(in, raw)) {
    const std::string line = strip_bullet(raw);
    if (line.empty() || line.starts_with("```")) continue;
    std::smatch m;
    if (std::regex_match(line, m, marked)) {
      auto body = unquote(m[2].str());
      if (!body.empty()) s_lines.emplace_back(std::stoi(m[1].str()), ensure_terminal(body));
    } else if (std::regex_match(line, m, numbered)) {
      auto body = unquote(m[2].str());
      if (!body.empty()) n_lines.emplace_back(std::stoi(m[1].str()), ensure_terminal(body));
    } else {
      plain.push_back(line);
    }
  }
  ParsedDecomposition out;
  auto& chosen = s_lines.empty() ? n_lines : s_lines;
  if (!chosen.empty()) {
    std::stable_sort(chosen.begin(), chosen.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    int last = -1;
    for (auto& [k, body] : chosen) {
      if (k == last) continue;
      last = k;
      out.outputs.push_back(std::move(body));
    }
    return out;
  }
  if (plain.size() == 1) {
    out.outputs.push_back(ensure_terminal(unquote(plain.front())));
    out.verbatim = true;
    return out;
  }
  out.diagnostic = plain.empty() ? "empty decomposition response"
                                 : "no S<k> or numbered lines in decomposition response";
  return out;
}

std::string format_decomposition(const std::vector<std::string>& outputs) {
  std::string out;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    out += "S" + std::to_string(i + 1) + " \xE2\x86\x92 " + outputs[i] + "\n";
  }
  return out;
}

Decomposition decompose(const SentenceRecord& source, SentenceLabel category, Strategy strategy,
                        ModelBackend& backend, Generator& generator) {
  const Task task = simplify_task(category);
  const std::string raw =
      generator.generate(backend, load_strategy(task, strategy), task_bindings(task, source.text));
  auto parsed = parse_decomposition(raw);
  Decomposition d;
  d.source = source;
  d.category = category;
  d.outputs = std::move(parsed.outputs);
  d.verbatim = parsed.verbatim;
  d.diagnostic = std::move(parsed.diagnostic);
  return d;
}

Decomposition decompose(const std::string& sentence, SentenceLabel category, Strategy strategy,
                        ModelBackend& backend, Generator& generator) {
  SentenceRecord rec;
  rec.text = sentence;
  return decompose(rec, category, strategy, backend, generator);
}

ConversionItem score_conversion(const std::vector<std::string>& pred,
                                const std::vector<std::string>& gold, const Similarity& similarity) {
  if (gold.empty()) throw PreconditionError("score_conversion needs a non-empty gold list");
  std::vector<ScoredPair> candidates;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    for (std::size_t j = 0; j < gold.size(); ++j) {
      const double s = similarity(pred[i], gold[j]);
      if (s >= similarity.threshold() - 1e-12) candidates.push_back(ScoredPair{i, j, s});
    }
  }
  ConversionItem item;
  item.matches = greedy_match(std::move(candidates));
  item.match_fraction =
      static_cast<double>(item.matches.size()) / static_cast<double>(gold.size());
  item.exact = item.matches.size() == gold.size() && pred.size() == gold.size();
  item.count_error = static_cast<int>(pred.size()) - static_cast<int>(gold.size());
  return item;
}

ConversionScore aggregate_conversion(const std::vector<ConversionItem>& items) {
  if (items.empty()) throw EmptyBatch();
  ConversionScore s;
  s.items = items.size();
  double frac = 0, exact = 0, sq = 0;
  for (const auto& it : items) {
    frac += it.match_fraction;
    exact += it.exact ? 1 : 0;
    sq += static_cast<double>(it.count_error) * it.count_error;
  }
  const auto n = static_cast<double>(items.size());
  s.macro_avg = frac / n;
  s.exact_match = exact / n;
  s.rmse = std::sqrt(sq / n);
  return s;
}

std::vector<GoldConversion> parse_conversion_jsonl(std::string_view content) {
  std::vector<GoldConversion> out;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      GoldConversion g;
      g.text = j.at("text").get<std::string>();
      g.category = parse_label(j.at("category").get<std::string>());
      if (!decomposable(g.category)) {
        throw SchemaError("category must be comx, comp or comx_comp");
      }
      g.gold = j.at("gold").get<std::vector<std::string>>();
      if (g.gold.empty()) throw SchemaError("gold list is empty");
      out.push_back(std::move(g));
    } catch (const json::exception& e) {
      throw ParseError(std::string("conversion record: ") + e.what(), line_no);
    } catch (const SchemaError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

std::vector<GoldConversion> load_conversion_jsonl(const std::string& path) {
  return parse_conversion_jsonl(text::read_file(path));
}

std::string conversion_jsonl(const std::vector<GoldConversion>& items) {
  std::string out;
  for (const auto& g : items) {
    json j = {{"text", g.text}, {"category", to_string(g.category)}, {"gold", g.gold}};
    out += j.dump() + "\n";
  }
  return out;
}

std::string_view to_string(SelectionMetric m) {
  return m == SelectionMetric::macro_avg ? "macro_avg" : "exact_match";
}

SelectionMetric parse_selection_metric(std::string_view s) {
  if (s == "macro_avg") return SelectionMetric::macro_avg;
  if (s == "exact_match") return SelectionMetric::exact_match;
  throw ConfigError("unknown selection metric: " + std::string(s));
}

std::map<SentenceLabel, CategorySelection> select_simplifier(
    const std::vector<SentenceLabel>& categories, const std::vector<Strategy>& strategies,
    const std::vector<ModelBackend*>& backends, const std::vector<GoldConversion>& gold,
    Generator& generator, const Similarity& similarity, SelectionMetric metric, int jobs) {
  if (strategies.empty() || backends.empty()) {
    throw PreconditionError("select_simplifier needs at least one strategy and one backend");
  }
  std::map<SentenceLabel, CategorySelection> out;
  for (SentenceLabel cat : categories) {
    std::vector<const GoldConversion*> items;
    for (const auto& g : gold) {
      if (g.category == cat) items.push_back(&g);
    }
    if (items.empty()) {
      throw PreconditionError("no gold conversions for category " + std::string(to_string(cat)));
    }
    CategorySelection sel;
    sel.category = cat;
    sel.table.resize(strategies.size() * backends.size());
    parallel_for(sel.table.size(), jobs, [&](std::size_t idx) {
      const Strategy strategy = strategies[idx / backends.size()];
      ModelBackend& backend = *backends[idx % backends.size()];
      SimplifierCell cell;
      cell.strategy = std::string(to_string(strategy));
      cell.model = backend.name();
      try {
        std::vector<ConversionItem> scored;
        for (const auto* g : items) {
          auto d = decompose(g->text, cat, strategy, backend, generator);
          cell.unparsable += d.outputs.empty();
          scored.push_back(score_conversion(d.outputs, g->gold, similarity));
        }
        cell.score = aggregate_conversion(scored);
      } catch (const BackendFailure& e) {
        cell.failed = true;
        cell.error = e.what();
        cell.score = ConversionScore{};
        cell.score.items = items.size();
      }
      sel.table[idx] = std::move(cell);
    });
    auto value = [&](const SimplifierCell& c) {
      return metric == SelectionMetric::macro_avg ? c.score.macro_avg : c.score.exact_match;
    };
    const SimplifierCell* best = &sel.table.front();
    for (const auto& c : sel.table) {
      const double a = value(c), b = value(*best);
      if (a > b + 1e-12 || (std::abs(a - b) <= 1e-12 &&
                            std::tie(c.strategy, c.model) < std::tie(best->strategy, best->model))) {
        best = &c;
      }
    }
    sel.strategy = best->strategy;
    sel.model = best->model;
    out.emplace(cat, std::move(sel));
  }
  return out;
}

std::string simplifier_table_csv(const std::vector<SimplifierCell>& table) {
  std::ostringstream out;
  out << "strategy,model,macro_avg,exact_match,rmse,flag\n";
  for (const auto& c : table) {
    std::string flag = c.failed ? "failed" : (c.unparsable ? "unparsable=" + std::to_string(c.unparsable) : "");
    out << csv::row({c.strategy, c.model, text::format_double(c.score.macro_avg),
                     text::format_double(c.score.exact_match), text::format_double(c.score.rmse),
                     flag});
  }
  return out.str();
}

std::string strategy_comparison_csv(const std::vector<SimplifierCell>& table) {
  std::vector<std::string> strategies, models;
  for (const auto& c : table) {
    if (std::find(strategies.begin(), strategies.end(), c.strategy) == strategies.end()) {
      strategies.push_back(c.strategy);
    }
    if (std::find(models.begin(), models.end(), c.model) == models.end()) models.push_back(c.model);
  }
  std::vector<std::string> header{"strategy"};
  header.insert(header.end(), models.begin(), models.end());
  std::string out = csv::row(header);
  for (const auto& s : strategies) {
    std::vector<std::string> row{s};
    for (const auto& m : models) {
      std::string v;
      for (const auto& c : table) {
        if (c.strategy == s && c.model == m) v = text::format_double(c.score.macro_avg);
      }
      row.push_back(v);
    }
    out += csv::row(row);
  }
  return out;
}

SimplifyResult simplify_corpus(const std::vector<LabeledSentence>& labeled,
                               const std::map<SentenceLabel, SimplifierConfig>& configs,
                               Generator& generator, int jobs) {
  for (SentenceLabel cat : kDecomposable) {
    auto it = configs.find(cat);
    if (it == configs.end() || it->second.backend == nullptr) {
      throw ConfigError("no simplifier configured for " + std::string(to_string(cat)));
    }
  }
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    if (decomposable(labeled[i].label)) todo.push_back(i);
  }
  std::vector<Decomposition> results(todo.size());
  std::vector<std::string> errors(todo.size());
  parallel_for(todo.size(), jobs, [&](std::size_t k) {
    const auto& l = labeled[todo[k]];
    const auto& cfg = configs.at(l.label);
    try {
      results[k] = decompose(l.sentence, l.label, cfg.strategy, *cfg.backend, generator);
    } catch (const BackendFailure& e) {
      results[k].source = l.sentence;
      results[k].category = l.label;
      errors[k] = e.what();
    }
  });
  SimplifyResult out;
  std::map<std::string, int> next_index;
  for (std::size_t k = 0; k < todo.size(); ++k) {
    auto& d = results[k];
    if (!errors[k].empty()) {
      out.failures.push_back(sentence_ref(d.source) + ": " + errors[k]);
    } else if (d.outputs.empty()) {
      out.failures.push_back(sentence_ref(d.source) + ": " + d.diagnostic);
    }
    for (const auto& s : d.outputs) {
      SentenceRecord rec;
      rec.abstract_id = d.source.abstract_id;
      rec.sentence_index = next_index[rec.abstract_id]++;
      rec.text = s;
      rec.origin = Origin::simplified;
      rec.source_sentence_index = d.source.sentence_index;
      out.simplified.push_back(std::move(rec));
    }
    out.decompositions.push_back(std::move(d));
  }
  return out;
}

std::string sentence_records_jsonl(const std::vector<SentenceRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    json j = json::object();
    j["abstract_id"] = r.abstract_id;
    j["sentence_index"] = r.sentence_index;
    j["origin"] = to_string(r.origin);
    j["text"] = r.text;
    if (r.source_sentence_index >= 0) j["source_sentence_index"] = r.source_sentence_index;
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<SentenceRecord> parse_sentence_records_jsonl(std::string_view content) {
  std::vector<SentenceRecord> out;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      SentenceRecord r;
      r.abstract_id = j.at("abstract_id").get<std::string>();
      r.sentence_index = j.at("sentence_index").get<int>();
      r.origin = parse_origin(j.at("origin").get<std::string>());
      r.text = j.at("text").get<std::string>();
      r.source_sentence_index = j.value("source_sentence_index", -1);
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw ParseError(std::string("sentence record: ") + e.what(), line_no);
    } catch (const SchemaError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

double simple_output_rate(const std::vector<std::string>& outputs, const Lexicon& lexicon) {
  if (outputs.empty()) return 0;
  std::size_t simple = 0;
  for (const auto& s : outputs) {
    if (text::trim(s).empty()) continue;
    auto a = analyze_clauses(s, lexicon);
    simple += a.independent_clauses == 1 && a.dependent_clauses == 0;
  }
  return static_cast<double>(simple) / static_cast<double>(outputs.size());
}

}  // namespace codekg
