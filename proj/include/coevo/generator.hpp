#pragma once

#include <memory>
#include <string>

namespace coevo {

/// Pure text-in/text-out interface to the instruction optimizer.
class TextGenerator {
 public:
  virtual ~TextGenerator() = default;
  virtual std::string generate(const std::string& prompt) = 0;
  virtual std::string name() const = 0;
};

struct GeneratorConfig {
  std::string kind = "scripted";  // "http" or "scripted"
  std::string endpoint;           // chat-completions compatible URL
  std::string model;
  double temperature = 1.0;       // decoding temperature; default unvalidated
  int timeout_seconds = 30;
  int max_retries = 3;
  std::string api_key_env = "COEVO_API_KEY";  // env var holding the bearer token
  std::string audit_log;                       // JSONL of request/response pairs
};

/// HTTP client for a chat-completions endpoint. Sends
/// {model, messages:[{role,content}], temperature}, retries transport and
/// 5xx failures, and appends every request/response pair to the audit log.
class HttpGenerator : public TextGenerator {
 public:
  explicit HttpGenerator(GeneratorConfig config);
  std::string generate(const std::string& prompt) override;
  std::string name() const override { return "http:" + config_.model; }

 private:
  GeneratorConfig config_;
  std::string base_url_;
  std::string path_;
  int call_index_ = 0;
};

/// Deterministic stand-in for the optimizer used by the ablation harness.
/// It reads the prompt like a cooperative model would: reflection prompts
/// get candidates with strictly more useful strategy flags, paraphrase
/// prompts get rewordings with unchanged flags, history prompts a mild
/// formatting tweak.
class ScriptedGenerator : public TextGenerator {
 public:
  std::string generate(const std::string& prompt) override;
  std::string name() const override { return "scripted"; }
};

std::unique_ptr<TextGenerator> make_generator(const GeneratorConfig& config);

}  // namespace coevo
