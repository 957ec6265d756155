#pragma once

#include <Eigen/Dense>

#include "coevo/environment.hpp"
#include "coevo/policy.hpp"
#include "coevo/rng.hpp"

namespace coevo {

struct RolloutResult {
  Trajectory trajectory;
  std::vector<DecisionPoint> points;  // agent points plus masked observation points
  int tool_calls = 0;
};

/// Rolls one episode. Actions are drawn by inverse CDF from the softmax of
/// `which` parameters, or taken greedily (argmax, ties to the lowest id).
RolloutResult rollout(const Environment& env, const Question& question, int instruction_id,
                      const Eigen::VectorXd& instruction_features, const PolicyParams& policy,
                      ParamSet which, Rng& rng, bool greedy = false);

int sample_action(const Eigen::VectorXd& probabilities, Rng& rng);
int greedy_action(const Eigen::VectorXd& probabilities);

}  // namespace coevo
