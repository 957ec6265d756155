#pragma once

#include <Eigen/Dense>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "coevo/rng.hpp"

namespace coevo {

/// An instruction candidate with its moving-average importance weight.
/// The weight always equals the mean of reward_window (0 when empty).
struct InstructionCandidate {
  int id = 0;
  std::string text;
  Eigen::VectorXd features;          // dimension kFeatureDim, entries in [-1, 1]
  double weight = 0.0;
  std::deque<double> reward_window;  // last n per-step mean rewards
  int birth_step = 0;
  std::optional<int> parent_id;
};

/// Dynamic population of instruction candidates with softmax selection,
/// moving-average weight updates and successive-halving pruning.
struct Population {
  std::vector<InstructionCandidate> candidates;
  int max_size = 7;       // N_P
  int n_parent = 1;
  double temperature = 0.2;
  int window_size = 5;    // n, capacity of each reward window

  const InstructionCandidate& by_id(int id) const;
  InstructionCandidate& by_id(int id);
  bool contains(int id) const;
};

/// Softmax of weights/temperature, computed with max-subtraction.
/// Throws std::invalid_argument on an empty population.
Eigen::VectorXd selection_probabilities(const Population& pop);

/// Inverse-CDF draw over the candidate ordering; returns a candidate id.
int sample_instruction(const Population& pop, Rng& rng);

/// Pushes the per-step group-mean reward onto the candidate's window
/// (evicting the oldest entry when full) and refreshes the weight.
/// Throws std::out_of_range on an unknown id.
void record_step_reward(Population& pop, int candidate_id, double mean_reward, int step);

/// Removes the floor(|P|/2) lowest-weight candidates, never dropping below
/// n_parent. Ties keep the lower (older) id. No-op when |P| <= n_parent.
void prune(Population& pop, int step);

/// argmax weight, ties to the lower id. Throws on an empty population.
int best_instruction(const Population& pop);

/// Ids of the top-k candidates by (weight desc, id asc).
std::vector<int> top_candidates(const Population& pop, int k);

/// Zeroes every weight and clears every reward window.
void reset_weights(Population& pop);

// Lossless JSON snapshot of the candidate list.
std::string population_to_json(const Population& pop);
void population_candidates_from_json(Population& pop, const std::string& text);

}  // namespace coevo
