#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace coevo {

/// Featurized softmax policy over a finite action set.
///
/// logit(a) = theta_a . [state_features ++ instruction_features ++ 1],
/// one weight block per action. theta_ref is frozen at construction;
/// theta_old is refreshed at rollout time.
struct PolicyParams {
  Eigen::VectorXd theta;
  Eigen::VectorXd theta_ref;
  Eigen::VectorXd theta_old;
  int state_dim = 0;
  int instr_dim = 0;
  int num_actions = 0;

  int block_dim() const { return state_dim + instr_dim + 1; }
  int param_dim() const { return num_actions * block_dim(); }
};

enum class ParamSet { kCurrent, kOld, kRef };

/// One policy decision. Observation items carry is_agent=false and
/// contribute no likelihood.
struct DecisionPoint {
  Eigen::VectorXd state_features;
  Eigen::VectorXd instruction_features;
  int action_taken = -1;
  bool is_agent = false;
};

struct GroupRollout {
  std::vector<std::vector<DecisionPoint>> trajectories;
  std::vector<double> rewards;
  std::vector<double> advantages;
};

struct SurrogateResult {
  double loss = 0.0;
  Eigen::VectorXd gradient;
  bool ratio_underflow = false;  // set when an old-policy probability hit the clamp
};

PolicyParams make_policy(int state_dim, int instr_dim, int num_actions);

/// Hand-set prior linking instruction flags to the actions they describe,
/// standing in for a pretrained instruction-following model. State entries
/// stay zero; the task itself is learned by the policy gradient.
PolicyParams make_instruction_following_policy(int state_dim, int instr_dim, int num_actions,
                                               double prior_scale = 1.0);

Eigen::VectorXd action_logits(const PolicyParams& params, ParamSet which,
                              const Eigen::VectorXd& state_features,
                              const Eigen::VectorXd& instruction_features);

Eigen::VectorXd action_probabilities(const PolicyParams& params, ParamSet which,
                                     const Eigen::VectorXd& state_features,
                                     const Eigen::VectorXd& instruction_features);

/// Group-relative advantages: (r_i - mean) / population std, all zero when
/// the std falls below 1e-8. Throws for groups smaller than 2.
std::vector<double> compute_advantages(const std::vector<double>& rewards);

/// pi_theta(a|.) / pi_theta_old(a|.), denominator clamped at 1e-30.
double importance_ratio(const DecisionPoint& point, const PolicyParams& params,
                        bool* underflow = nullptr);

/// Closed-form KL(pi_theta || pi_ref) at one decision point.
double kl_penalty(const DecisionPoint& point, const PolicyParams& params);

/// Clipped masked surrogate with per-trajectory agent-point normalization.
/// Returns the negated objective and its analytic gradient; subgradient
/// ties at the clip boundary take the unclipped branch.
SurrogateResult surrogate_loss(const GroupRollout& group, const PolicyParams& params,
                               double clip_eps, double kl_coef);

/// Plain gradient step theta -= lr * gradient. Throws on non-finite input.
void apply_update(PolicyParams& params, const Eigen::VectorXd& gradient, double learning_rate);

void refresh_old(PolicyParams& params);

// Binary checkpoint: header {P, F, |A|, version}, then little-endian
// doubles for theta and theta_ref.
void save_policy(const PolicyParams& params, const std::string& path);
PolicyParams load_policy(const std::string& path);

}  // namespace coevo
