#pragma once

#include <atomic>
#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

#include "codekg/http.hpp"
#include "codekg/prompts.hpp"
#include "codekg/retry.hpp"

namespace codekg {

struct GenerationParams {
  int max_tokens = 2048;
  double temperature = 0.0;
  std::vector<std::string> stop;

  // Canonical JSON text of the parameters; hashed into cache keys.
  std::string canonical() const;
  std::string hash() const;
};

// A text-generation endpoint. complete() always performs a real call (or a
// scripted lookup); caching lives in Generator.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  virtual const std::string& name() const = 0;
  virtual const GenerationParams& params() const = 0;
  virtual std::string complete(const std::string& prompt) = 0;

  // Number of complete() calls that reached the endpoint or script.
  virtual std::size_t calls() const = 0;
};

struct HttpBackendConfig {
  std::string name;
  // Base URL such as http://host:8000/v1; "/chat/completions" is appended
  // unless already present.
  std::string endpoint;
  // Model id sent on the wire; defaults to name.
  std::string model;
  GenerationParams params;
  // Name of the environment variable holding the API key, sent as a Bearer
  // token. Empty means no Authorization header.
  std::string auth_env;
  int max_in_flight = 4;
  RetryPolicy retry;
  std::chrono::seconds timeout{120};
};

// OpenAI-compatible chat completions: a single user message carrying the
// prompt, with model, temperature, max_tokens and optional stop.
class HttpChatBackend : public ModelBackend {
 public:
  explicit HttpChatBackend(HttpBackendConfig config,
                           http::Transport transport = http::default_transport());

  const std::string& name() const override { return config_.name; }
  const GenerationParams& params() const override { return config_.params; }
  std::string complete(const std::string& prompt) override;
  std::size_t calls() const override { return calls_.load(); }

  std::string request_body(const std::string& prompt) const;
  const std::string& url() const { return url_; }

 private:
  HttpBackendConfig config_;
  http::Transport transport_;
  std::string url_;
  std::counting_semaphore<1024> in_flight_;
  std::atomic<std::size_t> calls_{0};
};

// Pulls the assistant text out of a chat-completion response body.
// Throws BackendError on malformed bodies and EmptyResponse on blank text.
std::string parse_chat_response(const std::string& body);

// Answers only from a script keyed by sha256(prompt).
class MockBackend : public ModelBackend {
 public:
  explicit MockBackend(std::string name, std::map<std::string, std::string> script = {},
                       GenerationParams params = {});

  const std::string& name() const override { return name_; }
  const GenerationParams& params() const override { return params_; }
  // Throws UnscriptedInput naming sha256(prompt).
  std::string complete(const std::string& prompt) override;
  std::size_t calls() const override { return calls_.load(); }

  void script_prompt(const std::string& prompt, std::string response);
  void script_hash(const std::string& prompt_sha256, std::string response);
  std::size_t script_size() const;

 private:
  std::string name_;
  GenerationParams params_;
  mutable std::mutex mu_;
  std::map<std::string, std::string> script_;
  std::atomic<std::size_t> calls_{0};
};

std::unique_ptr<MockBackend> mock_backend(std::map<std::string, std::string> script,
                                          std::string name = "mock");

// Replay scenarios are JSONL files scripting a MockBackend. Each line is one of
//   {"prompt_sha256": "...", "response": "..."}
//   {"task": "simplify_comx", "strategy": "COT_FICL", "input": "...", "response": "..."}
// For task lines the template is rendered to find the prompt hash. "input" is
// the sentence for classify/simplify/extract and the raw abstract text for
// coref (tokenized before rendering). A missing strategy scripts all four.
// Classification lines may carry "examples" for the few-shot slot.
void load_scenario(MockBackend& backend, const std::string& path);
void load_scenario_text(MockBackend& backend, std::string_view jsonl);

// Bindings the stage code uses for each task, shared with the scenario loader
// so that scripted prompts hash identically.
Bindings task_bindings(Task task, const std::string& input, const std::string& examples = "");

struct GenerationRecord {
  std::string cache_key;
  std::string strategy;
  std::string template_hash;
  std::string model;
  std::string params_hash;
  std::string request;
  std::string response;
  std::string timestamp;
};

std::string cache_key(const std::string& strategy, const std::string& template_hash,
                      const std::string& prompt, const std::string& model,
                      const std::string& params_hash);

// Content-addressed response store. On disk each record lives at
// <dir>/gen/<cache_key>.json and is written atomically.
class GenerationCache {
 public:
  static GenerationCache in_memory();
  static GenerationCache on_disk(std::string cache_dir);

  std::optional<GenerationRecord> get(const std::string& key) const;
  void put(const GenerationRecord& record);
  std::string path_for(const std::string& key) const;
  bool persistent() const { return !dir_.empty(); }

 private:
  explicit GenerationCache(std::string dir);

  std::string dir_;
  mutable std::shared_ptr<std::mutex> mu_;
  std::shared_ptr<std::map<std::string, GenerationRecord>> memory_;
};

// Cache-first generation. Thread-safe.
class Generator {
 public:
  explicit Generator(GenerationCache cache);

  std::string generate(ModelBackend& backend, const PromptStrategy& strategy,
                       const Bindings& bindings);
  std::string generate_prompt(ModelBackend& backend, const std::string& strategy_label,
                              const std::string& template_hash, const std::string& prompt);

  std::size_t hits() const { return hits_.load(); }
  std::size_t misses() const { return misses_.load(); }
  GenerationCache& cache() { return cache_; }

 private:
  GenerationCache cache_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

}  // namespace codekg
