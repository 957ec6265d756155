#include "coevo/generator.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "coevo/features.hpp"

namespace coevo {

using nlohmann::json;

namespace {

void split_endpoint(const std::string& endpoint, std::string& base, std::string& path) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) throw std::invalid_argument("endpoint needs a scheme: " + endpoint);
  const auto slash = endpoint.find('/', scheme + 3);
  if (slash == std::string::npos) {
    base = endpoint;
    path = "/";
  } else {
    base = endpoint.substr(0, slash);
    path = endpoint.substr(slash);
  }
}

}  // namespace

HttpGenerator::HttpGenerator(GeneratorConfig config) : config_(std::move(config)) {
  split_endpoint(config_.endpoint, base_url_, path_);
}

std::string HttpGenerator::generate(const std::string& prompt) {
  json body{{"model", config_.model},
            {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
            {"temperature", config_.temperature}};
  const std::string payload = body.dump();

  std::string token;
  if (!config_.api_key_env.empty()) {
    if (const char* v = std::getenv(config_.api_key_env.c_str())) token = v;
  }

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    httplib::Client client(base_url_);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);

    auto res = client.Post(path_, headers, payload, "application/json");
    const int status = res ? res->status : 0;
    const std::string response_body = res ? res->body : std::string();

    if (!config_.audit_log.empty()) {
      std::ofstream audit(config_.audit_log, std::ios::app);
      json record{{"call", call_index_}, {"attempt", attempt},   {"endpoint", config_.endpoint},
                  {"request", body},     {"status", status},     {"response", response_body}};
      audit << record.dump() << '\n';
    }

    if (res && status == 200) {
      ++call_index_;
      json parsed = json::parse(response_body);
      return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
    }
    last_error = res ? "HTTP " + std::to_string(status) : "transport error";
    if (res && status >= 400 && status < 500) break;  // no point retrying a client error
    if (attempt < config_.max_retries) {
      std::this_thread::sleep_for(std::chrono::milliseconds(100 * (attempt + 1)));
    }
  }
  ++call_index_;
  throw std::runtime_error("generator unreachable: " + last_error);
}

namespace {

std::string extract_parent(const std::string& prompt) {
  const std::string open = "<ins_0>";
  const std::string close = "</ins_0>";
  const auto a = prompt.find(open);
  const auto b = prompt.find(close);
  if (a == std::string::npos || b == std::string::npos || b <= a) return {};
  std::string body = prompt.substr(a + open.size(), b - a - open.size());
  const auto s = body.find_first_not_of(" \t\r\n");
  const auto e = body.find_last_not_of(" \t\r\n");
  if (s == std::string::npos) return {};
  return body.substr(s, e - s + 1);
}

std::string wrap_candidates(const std::vector<std::string>& texts) {
  std::ostringstream os;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    os << "<ins_" << (i + 1) << ">\n" << texts[i] << "\n</ins_" << (i + 1) << ">\n";
  }
  return os.str();
}

}  // namespace

std::string ScriptedGenerator::generate(const std::string& prompt) {
  const std::string parent = extract_parent(prompt);
  std::vector<std::string> candidates;

  if (prompt.find("Analyze the reasons behind these mistakes") != std::string::npos) {
    // reflection: strictly feature-superior candidates, adding the flags a
    // reflective optimizer would prescribe after seeing failed rollouts
    const int useful[] = {kFlagStepByStep, kFlagIndividually, kFlagNeverEntireQuestion,
                          kFlagAnalyze, kFlagVerify, kFlagPlan};
    for (int k = 1; k <= 6; ++k) {
      std::string text = parent;
      for (int f = 0; f < k; ++f) text = splice_flag_in(text, useful[f]);
      candidates.push_back(text);
    }
  } else if (prompt.find("\"instruction: score\" history") != std::string::npos) {
    // history: conservative tweaks around formatting only
    for (int k = 1; k <= 6; ++k) {
      std::string text = parent;
      if (k % 2 == 0) text = splice_flag_in(text, kFlagFormat);
      candidates.push_back(text + (k % 2 == 1 ? " Respond concisely." : ""));
    }
  } else {
    // paraphrase: rewordings that leave the strategy flags unchanged
    const char* prefixes[] = {"Please answer the question that follows.",
                              "Your task is to answer the question.",
                              "Respond to the question below.",
                              "Here is a question for you to answer.",
                              "Answer the question presented.",
                              "Provide an answer to the given question."};
    for (int k = 0; k < 6; ++k) {
      candidates.push_back(std::string(prefixes[k]) + " " + parent);
    }
  }
  return wrap_candidates(candidates);
}

std::unique_ptr<TextGenerator> make_generator(const GeneratorConfig& config) {
  if (config.kind == "scripted") return std::make_unique<ScriptedGenerator>();
  if (config.kind == "http") return std::make_unique<HttpGenerator>(config);
  throw std::invalid_argument("unknown generator kind: " + config.kind);
}

}  // namespace coevo
