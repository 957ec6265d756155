#pragma once

#include <memory>
#include <string>
#include <vector>

#include "coevo/config.hpp"
#include "coevo/environment.hpp"
#include "coevo/generator.hpp"
#include "coevo/policy.hpp"
#include "coevo/population.hpp"
#include "coevo/proposer.hpp"
#include "coevo/replay_buffer.hpp"
#include "coevo/rng.hpp"

namespace coevo {

struct StepMetrics {
  int step = 0;
  double mean_reward = 0.0;
  double mean_tool_calls = 0.0;
  double active_instruction_chars = 0.0;
  double mean_response_items = 0.0;
  int population_size = 0;
  double best_weight = 0.0;
  std::string event;  // "", "prune" or "evolve"
};

struct RunCounters {
  long generator_calls = 0;
  long evolution_events = 0;
  long prune_events = 0;
  long buffer_insertions = 0;
  long mutation_fills = 0;
  long retrial_rounds = 0;  // generate rounds beyond the first per event
};

struct RunState {
  RunConfig config;
  Environment env;
  Population population;
  int next_instruction_id = 0;
  ReplayBuffer buffer;
  PolicyParams policy;
  Rng sampling_rng;      // question and instruction draws
  Rng rollout_rng;       // training rollouts
  Rng proposer_rng;      // mutation, parent and failure sampling
  Rng verification_rng;  // validation-set draws
  int step = 0;
  RunCounters counters;
  std::vector<StepMetrics> history;
  std::vector<EvolveStats> event_stats;  // per evolution event, current session
  PromptTemplates templates;
  std::unique_ptr<TextGenerator> generator;
};

/// Fresh state: environment, instruction-following policy, seed population
/// (the seed instruction plus max_size-1 mutation variants; one generator
/// call), and the four independent rng streams.
RunState init_run(const RunConfig& config);

/// One training step at index t: per batch question, sample an instruction,
/// roll G trajectories from theta_old, normalize rewards in the group and
/// accumulate the masked clipped surrogate; then apply one update, record
/// per-instruction step rewards and push every record to the buffer.
/// Any failure leaves the state untouched.
StepMetrics train_step(RunState& state, int t);

/// Successive-halving prune at t % prune_period == 0 (t > 0, t inside the
/// evolution horizon, population above n_parent).
bool maybe_prune(RunState& state, int t);

/// Evolution event at t % evolve_period == 0 while t < evolve_horizon.
bool maybe_evolve(RunState& state, int t);

struct RunResult {
  int best_instruction_id = -1;
  std::string best_instruction_text;
  double best_weight = 0.0;
  int steps_completed = 0;
};

/// Runs from state.step up to config.steps, streaming metrics.jsonl into
/// out_dir (flushed every 10 steps) and writing the final checkpoint.
/// On an unrecoverable error the checkpoint is written before rethrowing.
/// Pass an empty out_dir for a purely in-memory run.
RunResult run_to_completion(RunState& state, const std::string& out_dir);

void write_checkpoint(const RunState& state, const std::string& dir);
RunState load_checkpoint(const std::string& dir);

std::string metrics_line(const StepMetrics& m);

struct EvalReport {
  int count = 0;
  double em = 0.0;
  double mean_tool_calls = 0.0;
  double mean_turns = 0.0;
};

/// Greedy (argmax-action) evaluation of one instruction on a question set.
EvalReport evaluate_instruction(const Environment& env, const PolicyParams& policy,
                                const Eigen::VectorXd& instruction_features,
                                const std::vector<Question>& questions);

}  // namespace coevo
