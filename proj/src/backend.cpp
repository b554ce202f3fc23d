#include "codekg/backend.hpp"

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "codekg/corpus.hpp"
#include "codekg/error.hpp"
#include "codekg/text.hpp"

namespace codekg {

using nlohmann::json;

std::string GenerationParams::canonical() const {
  json j = {{"max_tokens", max_tokens}, {"temperature", temperature}, {"stop", stop}};
  return j.dump();
}

std::string GenerationParams::hash() const { return text::sha256_hex(canonical()); }

namespace {

std::string chat_url(const std::string& endpoint) {
  std::string base = endpoint;
  while (!base.empty() && base.back() == '/') base.pop_back();
  if (text::ends_with_ci(base, "/chat/completions")) return base;
  return base + "/chat/completions";
}

// Releases a semaphore slot on scope exit.
template <typename Sem>
struct SlotGuard {
  Sem& sem;
  explicit SlotGuard(Sem& s) : sem(s) { sem.acquire(); }
  ~SlotGuard() { sem.release(); }
};

}  // namespace

HttpChatBackend::HttpChatBackend(HttpBackendConfig config, http::Transport transport)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      url_(chat_url(config_.endpoint)),
      in_flight_(std::clamp(config_.max_in_flight, 1, 1024)) {
  if (config_.name.empty()) throw ConfigError("backend name must not be empty");
  if (config_.endpoint.empty()) throw ConfigError("backend " + config_.name + " has no endpoint");
  if (config_.model.empty()) config_.model = config_.name;
}

std::string HttpChatBackend::request_body(const std::string& prompt) const {
  json body = {{"model", config_.model},
               {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
               {"temperature", config_.params.temperature},
               {"max_tokens", config_.params.max_tokens}};
  if (!config_.params.stop.empty()) body["stop"] = config_.params.stop;
  return body.dump();
}

std::string HttpChatBackend::complete(const std::string& prompt) {
  http::Request req;
  req.method = "POST";
  req.url = url_;
  req.body = request_body(prompt);
  req.timeout = config_.timeout;
  if (!config_.auth_env.empty()) {
    const char* key = std::getenv(config_.auth_env.c_str());
    if (key == nullptr || *key == '\0') {
      throw ConfigError("environment variable " + config_.auth_env + " is not set");
    }
    req.headers.emplace_back("Authorization", std::string("Bearer ") + key);
  }
  return with_retry(config_.retry, [&] {
    http::Response resp;
    {
      SlotGuard guard(in_flight_);
      ++calls_;
      resp = transport_(req);
    }
    if (resp.status == 429) throw RateLimited("backend " + config_.name + " rate limited (HTTP 429)");
    if (resp.status < 200 || resp.status >= 300) throw BackendError(resp.status, resp.body);
    return parse_chat_response(resp.body);
  });
}

std::string parse_chat_response(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error&) {
    throw BackendError(200, "response body is not JSON");
  }
  std::string content;
  try {
    const auto& choice = doc.at("choices").at(0);
    if (choice.contains("message") && choice["message"].contains("content") &&
        choice["message"]["content"].is_string()) {
      content = choice["message"]["content"].get<std::string>();
    } else if (choice.contains("text") && choice["text"].is_string()) {
      content = choice["text"].get<std::string>();
    } else {
      throw BackendError(200, "response has no message content");
    }
  } catch (const json::exception&) {
    throw BackendError(200, "response has no choices");
  }
  if (text::trim(content).empty()) throw EmptyResponse();
  return content;
}

MockBackend::MockBackend(std::string name, std::map<std::string, std::string> script,
                         GenerationParams params)
    : name_(std::move(name)), params_(std::move(params)), script_(std::move(script)) {}

std::string MockBackend::complete(const std::string& prompt) {
  ++calls_;
  const std::string h = text::sha256_hex(prompt);
  std::lock_guard lock(mu_);
  auto it = script_.find(h);
  if (it == script_.end()) throw UnscriptedInput(h);
  if (text::trim(it->second).empty()) throw EmptyResponse();
  return it->second;
}

void MockBackend::script_prompt(const std::string& prompt, std::string response) {
  script_hash(text::sha256_hex(prompt), std::move(response));
}

void MockBackend::script_hash(const std::string& prompt_sha256, std::string response) {
  std::lock_guard lock(mu_);
  script_[prompt_sha256] = std::move(response);
}

std::size_t MockBackend::script_size() const {
  std::lock_guard lock(mu_);
  return script_.size();
}

std::unique_ptr<MockBackend> mock_backend(std::map<std::string, std::string> script,
                                          std::string name) {
  return std::make_unique<MockBackend>(std::move(name), std::move(script));
}

Bindings task_bindings(Task task, const std::string& input, const std::string& examples) {
  switch (task) {
    case Task::coref: {
      TokenizedAbstract ta{"", tokenize(input)};
      return {{"tokenized_text", format_token_list(ta)}};
    }
    case Task::classify:
      return {{"sentence", input}, {"examples", examples}};
    default:
      return {{"sentence", input}};
  }
}

void load_scenario_text(MockBackend& backend, std::string_view jsonl) {
  std::size_t line_no = 0;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("scenario line is not JSON: ") + e.what(), line_no);
    }
    if (!j.is_object() || !j.contains("response") || !j["response"].is_string()) {
      throw ParseError("scenario line needs a string \"response\"", line_no);
    }
    std::string response = j["response"].get<std::string>();
    if (j.contains("prompt_sha256")) {
      backend.script_hash(j["prompt_sha256"].get<std::string>(), response);
      continue;
    }
    if (!j.contains("task") || !j.contains("input")) {
      throw ParseError("scenario line needs prompt_sha256 or task + input", line_no);
    }
    Task task;
    try {
      task = parse_task(j["task"].get<std::string>());
    } catch (const ConfigError& e) {
      throw ParseError(e.what(), line_no);
    }
    std::vector<Strategy> strategies;
    if (j.contains("strategy")) {
      strategies.push_back(parse_strategy(j["strategy"].get<std::string>()));
    } else {
      strategies.assign(std::begin(kAllStrategies), std::end(kAllStrategies));
    }
    const std::string examples = j.value("examples", std::string());
    const Bindings bindings = task_bindings(task, j["input"].get<std::string>(), examples);
    for (Strategy s : strategies) {
      backend.script_prompt(render_prompt(load_strategy(task, s), bindings), response);
    }
  }
}

void load_scenario(MockBackend& backend, const std::string& path) {
  load_scenario_text(backend, text::read_file(path));
}

std::string cache_key(const std::string& strategy, const std::string& template_hash,
                      const std::string& prompt, const std::string& model,
                      const std::string& params_hash) {
  std::string material;
  for (const std::string* part :
       {&strategy, &template_hash, &model, &params_hash}) {
    material += *part;
    material += '\x1f';
  }
  material += text::sha256_hex(prompt);
  return text::sha256_hex(material);
}

GenerationCache::GenerationCache(std::string dir)
    : dir_(std::move(dir)),
      mu_(std::make_shared<std::mutex>()),
      memory_(std::make_shared<std::map<std::string, GenerationRecord>>()) {}

GenerationCache GenerationCache::in_memory() { return GenerationCache(""); }

GenerationCache GenerationCache::on_disk(std::string cache_dir) {
  if (cache_dir.empty()) throw ConfigError("cache directory must not be empty");
  return GenerationCache(std::move(cache_dir));
}

std::string GenerationCache::path_for(const std::string& key) const {
  return (std::filesystem::path(dir_) / "gen" / (key + ".json")).string();
}

namespace {

json record_to_json(const GenerationRecord& r) {
  return {{"cache_key", r.cache_key}, {"strategy", r.strategy},
          {"template_hash", r.template_hash}, {"model", r.model},
          {"params_hash", r.params_hash}, {"request", r.request},
          {"response", r.response}, {"timestamp", r.timestamp}};
}

GenerationRecord record_from_json(const json& j) {
  GenerationRecord r;
  r.cache_key = j.at("cache_key").get<std::string>();
  r.strategy = j.value("strategy", "");
  r.template_hash = j.value("template_hash", "");
  r.model = j.value("model", "");
  r.params_hash = j.value("params_hash", "");
  r.request = j.value("request", "");
  r.response = j.at("response").get<std::string>();
  r.timestamp = j.value("timestamp", "");
  return r;
}

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::optional<GenerationRecord> GenerationCache::get(const std::string& key) const {
  {
    std::lock_guard lock(*mu_);
    auto it = memory_->find(key);
    if (it != memory_->end()) return it->second;
  }
  if (dir_.empty()) return std::nullopt;
  const std::string path = path_for(key);
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    auto record = record_from_json(json::parse(text::read_file(path)));
    if (record.cache_key != key) return std::nullopt;
    std::lock_guard lock(*mu_);
    memory_->emplace(key, record);
    return record;
  } catch (const json::exception&) {
    // A corrupt entry behaves as a miss and is overwritten on the next put.
    return std::nullopt;
  }
}

void GenerationCache::put(const GenerationRecord& record) {
  if (!dir_.empty()) text::write_file_atomic(path_for(record.cache_key), record_to_json(record).dump(2));
  std::lock_guard lock(*mu_);
  (*memory_)[record.cache_key] = record;
}

Generator::Generator(GenerationCache cache) : cache_(std::move(cache)) {}

std::string Generator::generate(ModelBackend& backend, const PromptStrategy& strategy,
                                const Bindings& bindings) {
  return generate_prompt(backend, strategy.label() + "@" + std::string(to_string(strategy.task)),
                         strategy.template_hash(), render_prompt(strategy, bindings));
}

std::string Generator::generate_prompt(ModelBackend& backend, const std::string& strategy_label,
                                       const std::string& template_hash,
                                       const std::string& prompt) {
  const std::string params_hash = backend.params().hash();
  const std::string key =
      cache_key(strategy_label, template_hash, prompt, backend.name(), params_hash);
  if (auto hit = cache_.get(key)) {
    ++hits_;
    return hit->response;
  }
  ++misses_;
  std::string response = backend.complete(prompt);
  cache_.put(GenerationRecord{key, strategy_label, template_hash, backend.name(), params_hash,
                              prompt, response, utc_now()});
  return response;
}

}  // namespace codekg
