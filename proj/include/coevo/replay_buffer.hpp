#pragma once

#include <deque>
#include <vector>

#include "coevo/environment.hpp"
#include "coevo/rng.hpp"

namespace coevo {

struct ReplayRecord {
  int instruction_id = -1;
  int question_id = -1;
  Trajectory trajectory;
  double reward = 0.0;
  int step = 0;
};

/// FIFO ring of past (instruction, question, trajectory, reward) tuples.
/// Failures feed reflection; stored questions supply validation sets.
struct ReplayBuffer {
  std::deque<ReplayRecord> records;
  std::size_t capacity = 4096;
  double failure_threshold = 0.5;  // reward < threshold counts as a failure

  void push(ReplayRecord record);
  std::size_t size() const { return records.size(); }
};

/// Uniformly samples up to `count` failure records, preferring the most
/// recent step, then widening to the last `back_steps` steps, then to the
/// whole buffer. Each qualifying record is returned at most once.
std::vector<ReplayRecord> sample_failures(const ReplayBuffer& buffer, int count, Rng& rng,
                                          int back_steps = 5);

/// Up to `size` distinct question ids drawn uniformly from the buffer.
std::vector<int> validation_set(const ReplayBuffer& buffer, int size, Rng& rng);

std::string buffer_to_jsonl(const ReplayBuffer& buffer);
void buffer_from_jsonl(ReplayBuffer& buffer, const std::string& text);

}  // namespace coevo
