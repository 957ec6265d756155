#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coevo/rng.hpp"

namespace coevo {

/// Fact triples keyed by (entity, relation). Hop chains are built so that a
/// depth-d question needs d sequential lookups; distractor facts share
/// relations with chain facts so one broad lookup cannot shortcut d >= 2.
struct KnowledgeBase {
  std::map<std::pair<std::string, std::string>, std::string> facts;
  // one pinned distractor triple per (entity, relation) key, shown next to hits
  std::map<std::pair<std::string, std::string>, std::string> distractor_for;
  std::vector<std::string> distractor_pool;  // wrong-answer values for guessing

  std::optional<std::string> lookup(const std::string& entity, const std::string& relation) const;
};

struct Question {
  int id = 0;
  std::string text;
  // ordered (entity, relation) pairs; entity k>0 equals the value of hop k-1
  std::vector<std::pair<std::string, std::string>> hop_entities;
  std::string gold_answer;

  int depth() const { return static_cast<int>(hop_entities.size()); }
};

/// Fixed abstract action set. Slot-indexed searches and memory-indexed
/// answers keep |A| constant so the policy can own one weight block per
/// action.
struct ActionSet {
  int search_slots = 3;   // SEARCH(k): query hop k of the gold chain
  int memory_slots = 3;   // ANSWER(j): answer with the j-th most recent hit
  int size() const { return search_slots + memory_slots + 1; }  // +1 = ANSWER(guess)

  bool is_search(int a) const { return a >= 0 && a < search_slots; }
  bool is_answer_memory(int a) const { return a >= search_slots && a < search_slots + memory_slots; }
  bool is_answer_guess(int a) const { return a == search_slots + memory_slots; }
  int search_slot(int a) const { return a; }
  int memory_slot(int a) const { return a - search_slots; }
};

struct TrajectoryItem {
  bool is_agent = false;   // true: agent action, false: tool observation
  int action = -1;         // valid when is_agent
  std::string observation; // valid when !is_agent
};

struct Trajectory {
  int instruction_id = -1;
  int question_id = -1;
  std::vector<TrajectoryItem> items;
  std::optional<std::string> final_answer;
  int turns_used = 0;
  double reward = 0.0;
};

/// Mutable per-rollout cursor; the KnowledgeBase itself is immutable and
/// shared across concurrent rollouts.
struct RolloutState {
  const Question* question = nullptr;
  Trajectory trajectory;
  std::vector<std::string> memory;  // hit values, newest last
  int resolved_hops = 0;            // consecutive hops resolved from hop 0
  bool last_was_hit = false;
  bool terminal = false;
};

struct EnvConfig {
  int max_turns = 4;
  int memory_cap = 3;
  ActionSet actions;
};

constexpr int kStateDim = 7;  // turn, resolved fraction, last-hit, memory, depth one-hot(3)
constexpr int kMaxDepth = 3;

struct Environment {
  KnowledgeBase kb;
  std::vector<Question> questions;
  EnvConfig config;

  const Question& question_by_id(int id) const;

  RolloutState start(const Question& q, int instruction_id) const;

  /// Applies one agent action: appends the action item and, for searches,
  /// the observation item. ANSWER actions and the turn cap terminate.
  void step(RolloutState& s, int action) const;

  /// 1 iff the final answer matches the gold answer after trimming,
  /// whitespace collapsing and lowercasing.
  static double exact_match_reward(const Trajectory& t, const Question& q);

  Eigen::VectorXd state_features(const RolloutState& s) const;
};

struct DatasetSpec {
  std::uint64_t seed = 0;
  int count_depth1 = 160;
  int count_depth2 = 160;
  int count_depth3 = 80;
};

Environment generate_dataset(const DatasetSpec& spec, const EnvConfig& env_config = {});

/// Scripted reference policies used for environment sanity bounds.
int oracle_action(const Environment& env, const RolloutState& s);
int broad_single_search_action(const Environment& env, const RolloutState& s);

std::string normalize_answer(const std::string& s);

// JSONL serialization (one object per line)
std::string kb_to_jsonl(const KnowledgeBase& kb);
std::string questions_to_jsonl(const std::vector<Question>& qs);
KnowledgeBase kb_from_jsonl(const std::string& text);
std::vector<Question> questions_from_jsonl(const std::string& text);

}  // namespace coevo
