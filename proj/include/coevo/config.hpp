#pragma once

#include <cstdint>
#include <string>

#include "coevo/environment.hpp"
#include "coevo/generator.hpp"
#include "coevo/proposer.hpp"

namespace coevo {

/// Every hyperparameter of a training run, with defaults mirroring the
/// reference setup: N_P=7, N_parent=1, tau_s=0.2, K_p=5, K_e=15, T_e=150,
/// T=300, n=5, G=5, beta=0.001, eps=0.2, |D_B|=200, 4 failure samples,
/// 5 verification retrial rounds.
struct RunConfig {
  std::uint64_t seed = 1;
  int steps = 300;            // T
  int evolve_horizon = 150;   // T_e
  int prune_period = 5;       // K_p
  int evolve_period = 15;     // K_e
  int group_size = 5;         // G
  int batch_size = 8;         // questions per step

  // population
  int population_max = 7;     // N_P
  int n_parent = 1;
  double temperature = 0.2;   // tau_s
  int weight_window = 5;      // n
  bool static_instruction = false;  // pin the population to the seed instruction
  bool preserve_parent_weights_on_evolve = false;

  // policy
  double learning_rate = 0.12;
  double clip_eps = 0.2;
  double kl_coef = 0.001;
  double prior_scale = 1.0;

  // environment
  int max_turns = 4;
  int memory_cap = 3;
  std::uint64_t dataset_seed = 0;
  int questions_depth1 = 160;
  int questions_depth2 = 160;
  int questions_depth3 = 80;

  // replay buffer
  std::size_t buffer_capacity = 4096;
  double failure_threshold = 0.5;
  int back_steps = 5;

  // proposer
  std::string proposer = "mutation";
  int candidates_per_call = 6;
  int failure_samples = 4;
  int retrial_cap = 5;
  double acceptance_ratio = 1.0;
  int validation_size = 200;  // |D_B|
  bool common_random_numbers = true;
  std::string templates_dir;

  GeneratorConfig generator;

  DatasetSpec dataset_spec() const;
  EnvConfig env_config() const;
  EvolveSettings evolve_settings() const;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Strict parse: unknown keys raise std::invalid_argument with the key path.
RunConfig config_from_json(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& config);

}  // namespace coevo
