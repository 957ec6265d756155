#include "coevo/config.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace coevo {

using nlohmann::json;

DatasetSpec RunConfig::dataset_spec() const {
  DatasetSpec spec;
  spec.seed = dataset_seed;
  spec.count_depth1 = questions_depth1;
  spec.count_depth2 = questions_depth2;
  spec.count_depth3 = questions_depth3;
  return spec;
}

EnvConfig RunConfig::env_config() const {
  EnvConfig env;
  env.max_turns = max_turns;
  env.memory_cap = memory_cap;
  return env;
}

EvolveSettings RunConfig::evolve_settings() const {
  EvolveSettings s;
  s.kind = proposer_kind_from_string(proposer);
  s.candidates_per_call = candidates_per_call;
  s.failure_samples = failure_samples;
  s.retrial_cap = retrial_cap;
  s.acceptance_ratio = acceptance_ratio;
  s.validation_size = validation_size;
  s.common_random_numbers = common_random_numbers;
  s.preserve_parent_weights = preserve_parent_weights_on_evolve;
  s.back_steps = back_steps;
  s.master_seed = seed;
  return s;
}

void RunConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw std::invalid_argument(field + ": " + why);
  };
  if (steps < 0) fail("steps", "must be >= 0");
  if (evolve_horizon > steps) fail("evolve_horizon", "must be <= steps");
  if (prune_period < 1) fail("prune_period", "must be >= 1");
  if (evolve_period < 1) fail("evolve_period", "must be >= 1");
  if (group_size < 2) fail("group_size", "must be >= 2 for group-relative advantages");
  if (batch_size < 1) fail("batch_size", "must be >= 1");
  if (population_max < 1) fail("population.max_size", "must be >= 1");
  if (n_parent < 1) fail("population.n_parent", "must be >= 1");
  if (n_parent > population_max) fail("population.n_parent", "must be <= max_size");
  if (!(temperature > 0.0)) fail("population.temperature", "must be > 0");
  if (weight_window < 1) fail("population.window_size", "must be >= 1");
  if (!(learning_rate >= 0.0)) fail("policy.learning_rate", "must be >= 0");
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) fail("policy.clip_eps", "must be in (0, 1)");
  if (kl_coef < 0.0) fail("policy.kl_coef", "must be >= 0");
  if (max_turns < 1) fail("environment.max_turns", "must be >= 1");
  if (memory_cap < 1) fail("environment.memory_cap", "must be >= 1");
  if (questions_depth1 < 0 || questions_depth2 < 0 || questions_depth3 < 0) {
    fail("environment.questions_depth*", "counts must be >= 0");
  }
  if (questions_depth1 + questions_depth2 + questions_depth3 < 1) {
    fail("environment.questions_depth*", "need at least one question");
  }
  if (buffer_capacity < 1) fail("buffer.capacity", "must be >= 1");
  if (back_steps < 1) fail("buffer.back_steps", "must be >= 1");
  proposer_kind_from_string(proposer);  // throws on bad value
  if (candidates_per_call < 1) fail("proposer.candidates_per_call", "must be >= 1");
  if (failure_samples < 1) fail("proposer.failure_samples", "must be >= 1");
  if (retrial_cap < 1) fail("proposer.retrial_cap", "must be >= 1");
  if (acceptance_ratio < 0.0) fail("proposer.acceptance_ratio", "must be >= 0");
  if (validation_size < 1) fail("proposer.validation_size", "must be >= 1");
  if (generator.kind != "http" && generator.kind != "scripted") {
    fail("generator.kind", "must be \"http\" or \"scripted\"");
  }
  if (proposer != "mutation" && generator.kind == "http" && generator.endpoint.empty()) {
    fail("generator.endpoint", "required for the http generator");
  }
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& prefix) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.count(key)) {
      throw std::invalid_argument("unknown config key: " + prefix + key);
    }
  }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig config_from_json(const std::string& text) {
  RunConfig c;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }

  reject_unknown(j,
                 {"seed", "steps", "evolve_horizon", "prune_period", "evolve_period",
                  "group_size", "batch_size", "population", "policy", "environment", "buffer",
                  "proposer", "generator"},
                 "");
  get_if(j, "seed", c.seed);
  get_if(j, "steps", c.steps);
  get_if(j, "evolve_horizon", c.evolve_horizon);
  get_if(j, "prune_period", c.prune_period);
  get_if(j, "evolve_period", c.evolve_period);
  get_if(j, "group_size", c.group_size);
  get_if(j, "batch_size", c.batch_size);

  if (j.contains("population")) {
    const json& p = j.at("population");
    reject_unknown(p,
                   {"max_size", "n_parent", "temperature", "window_size", "static_instruction",
                    "preserve_parent_weights_on_evolve"},
                   "population.");
    get_if(p, "max_size", c.population_max);
    get_if(p, "n_parent", c.n_parent);
    get_if(p, "temperature", c.temperature);
    get_if(p, "window_size", c.weight_window);
    get_if(p, "static_instruction", c.static_instruction);
    get_if(p, "preserve_parent_weights_on_evolve", c.preserve_parent_weights_on_evolve);
  }
  if (j.contains("policy")) {
    const json& p = j.at("policy");
    reject_unknown(p, {"learning_rate", "clip_eps", "kl_coef", "prior_scale"}, "policy.");
    get_if(p, "learning_rate", c.learning_rate);
    get_if(p, "clip_eps", c.clip_eps);
    get_if(p, "kl_coef", c.kl_coef);
    get_if(p, "prior_scale", c.prior_scale);
  }
  if (j.contains("environment")) {
    const json& p = j.at("environment");
    reject_unknown(p,
                   {"max_turns", "memory_cap", "dataset_seed", "questions_depth1",
                    "questions_depth2", "questions_depth3"},
                   "environment.");
    get_if(p, "max_turns", c.max_turns);
    get_if(p, "memory_cap", c.memory_cap);
    get_if(p, "dataset_seed", c.dataset_seed);
    get_if(p, "questions_depth1", c.questions_depth1);
    get_if(p, "questions_depth2", c.questions_depth2);
    get_if(p, "questions_depth3", c.questions_depth3);
  }
  if (j.contains("buffer")) {
    const json& p = j.at("buffer");
    reject_unknown(p, {"capacity", "failure_threshold", "back_steps"}, "buffer.");
    get_if(p, "capacity", c.buffer_capacity);
    get_if(p, "failure_threshold", c.failure_threshold);
    get_if(p, "back_steps", c.back_steps);
  }
  if (j.contains("proposer")) {
    const json& p = j.at("proposer");
    reject_unknown(p,
                   {"kind", "candidates_per_call", "failure_samples", "retrial_cap",
                    "acceptance_ratio", "validation_size", "common_random_numbers",
                    "templates_dir"},
                   "proposer.");
    get_if(p, "kind", c.proposer);
    get_if(p, "candidates_per_call", c.candidates_per_call);
    get_if(p, "failure_samples", c.failure_samples);
    get_if(p, "retrial_cap", c.retrial_cap);
    get_if(p, "acceptance_ratio", c.acceptance_ratio);
    get_if(p, "validation_size", c.validation_size);
    get_if(p, "common_random_numbers", c.common_random_numbers);
    get_if(p, "templates_dir", c.templates_dir);
  }
  if (j.contains("generator")) {
    const json& p = j.at("generator");
    reject_unknown(p,
                   {"kind", "endpoint", "model", "temperature", "timeout_seconds", "max_retries",
                    "api_key_env", "audit_log"},
                   "generator.");
    get_if(p, "kind", c.generator.kind);
    get_if(p, "endpoint", c.generator.endpoint);
    get_if(p, "model", c.generator.model);
    get_if(p, "temperature", c.generator.temperature);
    get_if(p, "timeout_seconds", c.generator.timeout_seconds);
    get_if(p, "max_retries", c.generator.max_retries);
    get_if(p, "api_key_env", c.generator.api_key_env);
    get_if(p, "audit_log", c.generator.audit_log);
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config file not found: " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return config_from_json(os.str());
}

std::string config_to_json(const RunConfig& c) {
  json j{
      {"seed", c.seed},
      {"steps", c.steps},
      {"evolve_horizon", c.evolve_horizon},
      {"prune_period", c.prune_period},
      {"evolve_period", c.evolve_period},
      {"group_size", c.group_size},
      {"batch_size", c.batch_size},
      {"population",
       {{"max_size", c.population_max},
        {"n_parent", c.n_parent},
        {"temperature", c.temperature},
        {"window_size", c.weight_window},
        {"static_instruction", c.static_instruction},
        {"preserve_parent_weights_on_evolve", c.preserve_parent_weights_on_evolve}}},
      {"policy",
       {{"learning_rate", c.learning_rate},
        {"clip_eps", c.clip_eps},
        {"kl_coef", c.kl_coef},
        {"prior_scale", c.prior_scale}}},
      {"environment",
       {{"max_turns", c.max_turns},
        {"memory_cap", c.memory_cap},
        {"dataset_seed", c.dataset_seed},
        {"questions_depth1", c.questions_depth1},
        {"questions_depth2", c.questions_depth2},
        {"questions_depth3", c.questions_depth3}}},
      {"buffer",
       {{"capacity", c.buffer_capacity},
        {"failure_threshold", c.failure_threshold},
        {"back_steps", c.back_steps}}},
      {"proposer",
       {{"kind", c.proposer},
        {"candidates_per_call", c.candidates_per_call},
        {"failure_samples", c.failure_samples},
        {"retrial_cap", c.retrial_cap},
        {"acceptance_ratio", c.acceptance_ratio},
        {"validation_size", c.validation_size},
        {"common_random_numbers", c.common_random_numbers},
        {"templates_dir", c.templates_dir}}},
      {"generator",
       {{"kind", c.generator.kind},
        {"endpoint", c.generator.endpoint},
        {"model", c.generator.model},
        {"temperature", c.generator.temperature},
        {"timeout_seconds", c.generator.timeout_seconds},
        {"max_retries", c.generator.max_retries},
        {"api_key_env", c.generator.api_key_env},
        {"audit_log", c.generator.audit_log}}},
  };
  return j.dump(2) + "\n";
}

}  // namespace coevo
