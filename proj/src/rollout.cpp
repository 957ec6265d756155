#include "coevo/rollout.hpp"

namespace coevo {

int sample_action(const Eigen::VectorXd& probabilities, Rng& rng) {
  const double u = uniform01(rng);
  double cumulative = 0.0;
  for (Eigen::Index a = 0; a < probabilities.size(); ++a) {
    cumulative += probabilities[a];
    if (u < cumulative) return static_cast<int>(a);
  }
  return static_cast<int>(probabilities.size() - 1);
}

int greedy_action(const Eigen::VectorXd& probabilities) {
  int best = 0;
  for (Eigen::Index a = 1; a < probabilities.size(); ++a) {
    if (probabilities[a] > probabilities[best]) best = static_cast<int>(a);
  }
  return best;
}

RolloutResult rollout(const Environment& env, const Question& question, int instruction_id,
                      const Eigen::VectorXd& instruction_features, const PolicyParams& policy,
                      ParamSet which, Rng& rng, bool greedy) {
  RolloutResult out;
  RolloutState state = env.start(question, instruction_id);
  while (!state.terminal) {
    const Eigen::VectorXd s = env.state_features(state);
    const Eigen::VectorXd p = action_probabilities(policy, which, s, instruction_features);
    const int action = greedy ? greedy_action(p) : sample_action(p, rng);

    DecisionPoint point;
    point.state_features = s;
    point.instruction_features = instruction_features;
    point.action_taken = action;
    point.is_agent = true;
    out.points.push_back(std::move(point));
    if (env.config.actions.is_search(action)) ++out.tool_calls;

    env.step(state, action);

    if (!state.trajectory.items.empty() && !state.trajectory.items.back().is_agent) {
      DecisionPoint obs;
      obs.state_features = Eigen::VectorXd::Zero(policy.state_dim);
      obs.instruction_features = Eigen::VectorXd::Zero(policy.instr_dim);
      obs.is_agent = false;
      out.points.push_back(std::move(obs));
    }
  }
  out.trajectory = std::move(state.trajectory);
  return out;
}

}  // namespace coevo
