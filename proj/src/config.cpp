#include "codekg/config.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "codekg/error.hpp"
#include "codekg/text.hpp"

namespace codekg {

bool BackendSpec::operator==(const BackendSpec& o) const {
  return name == o.name && kind == o.kind && scenario == o.scenario && endpoint == o.endpoint &&
         model == o.model && auth_env == o.auth_env && params.canonical() == o.params.canonical() &&
         max_in_flight == o.max_in_flight && timeout_seconds == o.timeout_seconds &&
         max_attempts == o.max_attempts;
}

const BackendSpec* PipelineConfig::find_backend(const std::string& name) const {
  for (const auto& b : backends) {
    if (b.name == name) return &b;
  }
  return nullptr;
}

void PipelineConfig::validate() const {
  auto need = [&](const std::string& where, const std::string& name) {
    if (name.empty()) throw ConfigError(where + ": no backend named");
    if (!find_backend(name)) throw ConfigError(where + ": backend '" + name + "' is not defined");
  };
  for (const auto& b : backends) {
    if (b.kind != "mock" && b.kind != "http") {
      throw ConfigError("backends." + b.name + ": kind must be mock or http");
    }
    if (b.kind == "http" && b.endpoint.empty()) {
      throw ConfigError("backends." + b.name + ": http backend needs an endpoint");
    }
  }
  if (strategies.empty()) throw ConfigError("strategies: at least one strategy is required");
  if (coref_enabled) need("coref", coref.backend);
  if (classifier != "rule" && classifier != "backend") {
    throw ConfigError("classify.classifier must be rule or backend");
  }
  if (decomposition_enabled) {
    if (classifier == "backend") need("classify", classify.backend);
    for (SentenceLabel cat : {SentenceLabel::comx, SentenceLabel::comp, SentenceLabel::comx_comp}) {
      auto it = simplify.find(cat);
      if (it == simplify.end()) {
        throw ConfigError("simplify." + std::string(to_string(cat)) + " is not configured");
      }
      need("simplify." + std::string(to_string(cat)), it->second.backend);
    }
  }
  need("extract", extract.backend);
  if (similarity.threshold < 0 || similarity.threshold > 1) {
    throw ConfigError("similarity.threshold must be within [0, 1]");
  }
  if (similarity.kind == SimilarityKind::embedding_endpoint && similarity.endpoint.empty()) {
    throw ConfigError("similarity.endpoint is required for embedding_endpoint");
  }
  if (jobs < 0) throw ConfigError("jobs must be >= 0");
  if (pubmed.requests_per_second <= 0) throw ConfigError("pubmed.requests_per_second must be > 0");
}

namespace {

toml::table stage_table(const StageSpec& s) {
  return toml::table{{"strategy", std::string(to_string(s.strategy))}, {"backend", s.backend}};
}

}  // namespace

std::string PipelineConfig::to_toml() const {
  toml::table root;
  root.insert("seed", static_cast<int64_t>(seed));
  root.insert("cache_dir", cache_dir);
  root.insert("jobs", static_cast<int64_t>(jobs));
  toml::array strat;
  for (Strategy s : strategies) strat.push_back(std::string(to_string(s)));
  root.insert("strategies", strat);
  root.insert("stages", toml::table{{"coref", coref_enabled}, {"decomposition", decomposition_enabled}});

  toml::table backs;
  for (const auto& b : backends) {
    toml::table t{{"kind", b.kind}};
    if (!b.scenario.empty()) t.insert("scenario", b.scenario);
    if (!b.endpoint.empty()) t.insert("endpoint", b.endpoint);
    if (!b.model.empty()) t.insert("model", b.model);
    if (!b.auth_env.empty()) t.insert("auth_env", b.auth_env);
    t.insert("max_tokens", static_cast<int64_t>(b.params.max_tokens));
    t.insert("temperature", b.params.temperature);
    if (!b.params.stop.empty()) {
      toml::array stop;
      for (const auto& s : b.params.stop) stop.push_back(s);
      t.insert("stop", stop);
    }
    t.insert("max_in_flight", static_cast<int64_t>(b.max_in_flight));
    t.insert("timeout_seconds", static_cast<int64_t>(b.timeout_seconds));
    t.insert("max_attempts", static_cast<int64_t>(b.max_attempts));
    backs.insert(b.name, t);
  }
  root.insert("backends", backs);

  root.insert("coref", stage_table(coref));
  toml::table cls = stage_table(classify);
  cls.insert("classifier", classifier);
  if (!classify_examples.empty()) cls.insert("examples", classify_examples);
  root.insert("classify", cls);
  toml::table simp;
  for (const auto& [cat, spec] : simplify) simp.insert(std::string(to_string(cat)), stage_table(spec));
  root.insert("simplify", simp);
  root.insert("extract", stage_table(extract));

  toml::table sim{{"kind", std::string(to_string(similarity.kind))},
                  {"threshold", similarity.threshold},
                  {"match_mode", std::string(to_string(similarity.match_mode))},
                  {"strip_articles", similarity.strip_articles},
                  {"fallback", similarity.fallback}};
  if (!similarity.endpoint.empty()) sim.insert("endpoint", similarity.endpoint);
  if (!similarity.model.empty()) sim.insert("model", similarity.model);
  if (!similarity.auth_env.empty()) sim.insert("auth_env", similarity.auth_env);
  root.insert("similarity", sim);

  toml::table pm{{"tool", pubmed.tool}, {"requests_per_second", pubmed.requests_per_second}};
  if (!pubmed.email.empty()) pm.insert("email", pubmed.email);
  if (!pubmed.api_key_env.empty()) pm.insert("api_key_env", pubmed.api_key_env);
  root.insert("pubmed", pm);

  std::ostringstream out;
  out << toml::toml_formatter(root, toml::toml_formatter::default_flags &
                                        ~(toml::format_flags::indentation |
                                          toml::format_flags::allow_multi_line_strings));
  out << '\n';
  return out.str();
}

std::string PipelineConfig::hash() const { return text::sha256_hex(to_toml()); }

namespace {

class Reader {
 public:
  Reader(const toml::table& table, std::string where) : t_(table), where_(std::move(where)) {}

  void allow(std::initializer_list<std::string_view> keys) const {
    for (const auto& [k, v] : t_) {
      if (std::find(keys.begin(), keys.end(), k.str()) == keys.end()) {
        throw ConfigError(qualified(std::string(k.str())) + ": unknown key");
      }
    }
  }

  std::string qualified(const std::string& key) const {
    return where_.empty() ? key : where_ + "." + key;
  }

  void string(const char* key, std::string& out) const {
    if (auto n = t_.get(key)) {
      auto v = n->value<std::string>();
      if (!n->is_string() || !v) throw ConfigError(qualified(key) + ": expected a string");
      out = *v;
    }
  }

  template <typename Int>
  void integer(const char* key, Int& out) const {
    if (auto n = t_.get(key)) {
      if (!n->is_integer()) throw ConfigError(qualified(key) + ": expected an integer");
      out = static_cast<Int>(*n->value<int64_t>());
    }
  }

  void number(const char* key, double& out) const {
    if (auto n = t_.get(key)) {
      if (!n->is_number()) throw ConfigError(qualified(key) + ": expected a number");
      out = *n->value<double>();
    }
  }

  void boolean(const char* key, bool& out) const {
    if (auto n = t_.get(key)) {
      if (!n->is_boolean()) throw ConfigError(qualified(key) + ": expected true or false");
      out = *n->value<bool>();
    }
  }

  void strings(const char* key, std::vector<std::string>& out) const {
    if (auto n = t_.get(key)) {
      auto arr = n->as_array();
      if (!arr) throw ConfigError(qualified(key) + ": expected an array of strings");
      out.clear();
      for (const auto& e : *arr) {
        auto v = e.value<std::string>();
        if (!e.is_string() || !v) throw ConfigError(qualified(key) + ": expected an array of strings");
        out.push_back(*v);
      }
    }
  }

  const toml::table* table(const char* key) const {
    auto n = t_.get(key);
    if (!n) return nullptr;
    if (!n->is_table()) throw ConfigError(qualified(key) + ": expected a table");
    return n->as_table();
  }

  const toml::table& raw() const { return t_; }

 private:
  const toml::table& t_;
  std::string where_;
};

template <typename Fn>
auto wrap(const std::string& where, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

StageSpec read_stage(const Reader& r, const std::string& where) {
  StageSpec s;
  std::string strategy = std::string(to_string(s.strategy));
  r.string("strategy", strategy);
  s.strategy = wrap(where + ".strategy", [&] { return parse_strategy(strategy); });
  r.string("backend", s.backend);
  return s;
}

}  // namespace

PipelineConfig parse_config(std::string_view toml_text) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config line " << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
  PipelineConfig c;
  Reader r(root, "");
  r.allow({"seed", "cache_dir", "jobs", "strategies", "stages", "backends", "coref", "classify",
           "simplify", "extract", "similarity", "pubmed"});
  int64_t seed = static_cast<int64_t>(c.seed);
  r.integer("seed", seed);
  if (seed < 0) throw ConfigError("seed must be >= 0");
  c.seed = static_cast<std::uint64_t>(seed);
  r.string("cache_dir", c.cache_dir);
  r.integer("jobs", c.jobs);
  std::vector<std::string> strategies;
  r.strings("strategies", strategies);
  if (root.contains("strategies")) {
    c.strategies.clear();
    for (const auto& s : strategies) {
      c.strategies.push_back(wrap("strategies", [&] { return parse_strategy(s); }));
    }
  }
  if (auto t = r.table("stages")) {
    Reader s(*t, "stages");
    s.allow({"coref", "decomposition"});
    s.boolean("coref", c.coref_enabled);
    s.boolean("decomposition", c.decomposition_enabled);
  }
  if (auto t = r.table("backends")) {
    for (const auto& [name, node] : *t) {
      const std::string where = "backends." + std::string(name.str());
      if (!node.is_table()) throw ConfigError(where + ": expected a table");
      Reader b(*node.as_table(), where);
      b.allow({"kind", "scenario", "endpoint", "model", "auth_env", "max_tokens", "temperature",
               "stop", "max_in_flight", "timeout_seconds", "max_attempts"});
      BackendSpec spec;
      spec.name = std::string(name.str());
      b.string("kind", spec.kind);
      b.string("scenario", spec.scenario);
      b.string("endpoint", spec.endpoint);
      b.string("model", spec.model);
      b.string("auth_env", spec.auth_env);
      b.integer("max_tokens", spec.params.max_tokens);
      b.number("temperature", spec.params.temperature);
      b.strings("stop", spec.params.stop);
      b.integer("max_in_flight", spec.max_in_flight);
      b.integer("timeout_seconds", spec.timeout_seconds);
      b.integer("max_attempts", spec.max_attempts);
      if (spec.max_in_flight < 1) throw ConfigError(where + ".max_in_flight must be >= 1");
      if (spec.max_attempts < 1) throw ConfigError(where + ".max_attempts must be >= 1");
      c.backends.push_back(std::move(spec));
    }
  }
  std::sort(c.backends.begin(), c.backends.end(),
            [](const BackendSpec& a, const BackendSpec& b) { return a.name < b.name; });
  if (auto t = r.table("coref")) {
    Reader s(*t, "coref");
    s.allow({"strategy", "backend"});
    c.coref = read_stage(s, "coref");
  }
  if (auto t = r.table("classify")) {
    Reader s(*t, "classify");
    s.allow({"strategy", "backend", "classifier", "examples"});
    c.classify = read_stage(s, "classify");
    s.string("classifier", c.classifier);
    s.string("examples", c.classify_examples);
  }
  if (auto t = r.table("simplify")) {
    for (const auto& [name, node] : *t) {
      const std::string where = "simplify." + std::string(name.str());
      if (!node.is_table()) throw ConfigError(where + ": expected a table");
      const SentenceLabel cat = wrap(where, [&] { return parse_label(name.str()); });
      if (cat == SentenceLabel::simp || cat == SentenceLabel::incomp) {
        throw ConfigError(where + ": only comx, comp and comx_comp are decomposed");
      }
      Reader s(*node.as_table(), where);
      s.allow({"strategy", "backend"});
      c.simplify[cat] = read_stage(s, where);
    }
  }
  if (auto t = r.table("extract")) {
    Reader s(*t, "extract");
    s.allow({"strategy", "backend"});
    c.extract = read_stage(s, "extract");
  }
  if (auto t = r.table("similarity")) {
    Reader s(*t, "similarity");
    s.allow({"kind", "threshold", "match_mode", "strip_articles", "endpoint", "model", "auth_env",
             "fallback"});
    std::string kind(to_string(c.similarity.kind)), mode(to_string(c.similarity.match_mode));
    s.string("kind", kind);
    s.string("match_mode", mode);
    c.similarity.kind = wrap("similarity.kind", [&] { return parse_similarity_kind(kind); });
    c.similarity.match_mode = wrap("similarity.match_mode", [&] { return parse_match_mode(mode); });
    s.number("threshold", c.similarity.threshold);
    s.boolean("strip_articles", c.similarity.strip_articles);
    s.string("endpoint", c.similarity.endpoint);
    s.string("model", c.similarity.model);
    s.string("auth_env", c.similarity.auth_env);
    s.boolean("fallback", c.similarity.fallback);
  }
  if (auto t = r.table("pubmed")) {
    Reader s(*t, "pubmed");
    s.allow({"email", "api_key_env", "tool", "requests_per_second"});
    s.string("email", c.pubmed.email);
    s.string("api_key_env", c.pubmed.api_key_env);
    s.string("tool", c.pubmed.tool);
    s.number("requests_per_second", c.pubmed.requests_per_second);
  }
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::string content;
  try {
    content = text::read_file(path);
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  PipelineConfig c = parse_config(content);
  const auto base = std::filesystem::path(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  for (auto& b : c.backends) resolve(b.scenario);
  resolve(c.classify_examples);
  return c;
}

PipelineConfig default_config(const std::string& backend_name, const std::string& scenario) {
  PipelineConfig c;
  BackendSpec b;
  b.name = backend_name;
  b.kind = "mock";
  b.scenario = scenario;
  c.backends.push_back(b);
  c.coref = StageSpec{Strategy::COT_FICL, backend_name};
  c.classify = StageSpec{Strategy::FICL, backend_name};
  for (SentenceLabel cat : {SentenceLabel::comx, SentenceLabel::comp, SentenceLabel::comx_comp}) {
    c.simplify[cat] = StageSpec{Strategy::COT_FICL, backend_name};
  }
  c.extract = StageSpec{Strategy::COT_FICL, backend_name};
  return c;
}

void apply_backend_override(PipelineConfig& config, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == assignment.size()) {
    throw ConfigError("--backend expects name=url, got '" + assignment + "'");
  }
  const std::string name = assignment.substr(0, eq), url = assignment.substr(eq + 1);
  for (auto& b : config.backends) {
    if (b.name == name) {
      b.kind = "http";
      b.endpoint = url;
      if (b.model.empty()) b.model = name;
      return;
    }
  }
  BackendSpec b;
  b.name = name;
  b.kind = "http";
  b.endpoint = url;
  b.model = name;
  config.backends.push_back(b);
  std::sort(config.backends.begin(), config.backends.end(),
            [](const BackendSpec& a, const BackendSpec& o) { return a.name < o.name; });
}

}  // namespace codekg
