#include "coevo/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "coevo/environment.hpp"
#include "coevo/features.hpp"

namespace coevo {

namespace {

const Eigen::VectorXd& select(const PolicyParams& p, ParamSet which) {
  switch (which) {
    case ParamSet::kCurrent: return p.theta;
    case ParamSet::kOld: return p.theta_old;
    case ParamSet::kRef: return p.theta_ref;
  }
  throw std::logic_error("bad ParamSet");
}

Eigen::VectorXd combined_features(const PolicyParams& p, const Eigen::VectorXd& state,
                                  const Eigen::VectorXd& instr) {
  if (state.size() != p.state_dim || instr.size() != p.instr_dim) {
    throw std::invalid_argument("feature dimensions do not match the policy layout");
  }
  Eigen::VectorXd x(p.block_dim());
  x << state, instr, 1.0;
  return x;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd p = (logits.array() - logits.maxCoeff()).exp();
  p /= p.sum();
  return p;
}

}  // namespace

PolicyParams make_policy(int state_dim, int instr_dim, int num_actions) {
  PolicyParams p;
  p.state_dim = state_dim;
  p.instr_dim = instr_dim;
  p.num_actions = num_actions;
  p.theta = Eigen::VectorXd::Zero(p.param_dim());
  p.theta_ref = p.theta;
  p.theta_old = p.theta;
  return p;
}

PolicyParams make_instruction_following_policy(int state_dim, int instr_dim, int num_actions,
                                               double prior_scale) {
  PolicyParams p = make_policy(state_dim, instr_dim, num_actions);
  if (instr_dim != kFeatureDim || num_actions != ActionSet{}.size()) return p;

  const ActionSet acts;
  auto at = [&](int action, int feature) -> double& {
    return p.theta[action * p.block_dim() + state_dim + feature];
  };
  for (int a = 0; a < acts.search_slots; ++a) {
    at(a, kFlagStepByStep) = 0.5;
    at(a, kFlagIndividually) = 0.5;
    at(a, kFlagNeverEntireQuestion) = 0.5;
    at(a, kFlagPlan) = 0.25;
    at(a, kKnobSearchBias) = 1.0;
  }
  const int answer0 = acts.search_slots;
  at(answer0, kFlagAnalyze) = 0.5;
  at(answer0, kFlagVerify) = 0.5;
  at(answer0, kFlagContext) = 0.25;
  at(answer0, kFlagFormat) = 0.25;
  at(answer0, kKnobAnswerBias) = 1.0;
  at(answer0 + 1, kKnobStalePenalty) = -0.5;
  at(answer0 + 2, kKnobStalePenalty) = -1.0;
  const int guess = acts.search_slots + acts.memory_slots;
  at(guess, kFlagAnalyze) = -0.5;
  at(guess, kFlagVerify) = -0.5;
  at(guess, kFlagContext) = -0.25;
  at(guess, kKnobGuessPenalty) = -1.0;

  p.theta *= prior_scale;
  p.theta_ref = p.theta;
  p.theta_old = p.theta;
  return p;
}

Eigen::VectorXd action_logits(const PolicyParams& params, ParamSet which,
                              const Eigen::VectorXd& state_features,
                              const Eigen::VectorXd& instruction_features) {
  const Eigen::VectorXd x = combined_features(params, state_features, instruction_features);
  const Eigen::VectorXd& theta = select(params, which);
  Eigen::Map<const Eigen::MatrixXd> blocks(theta.data(), params.block_dim(), params.num_actions);
  return blocks.transpose() * x;
}

Eigen::VectorXd action_probabilities(const PolicyParams& params, ParamSet which,
                                     const Eigen::VectorXd& state_features,
                                     const Eigen::VectorXd& instruction_features) {
  return softmax(action_logits(params, which, state_features, instruction_features));
}

std::vector<double> compute_advantages(const std::vector<double>& rewards) {
  const std::size_t g = rewards.size();
  if (g < 2) throw std::invalid_argument("advantage normalization needs a group of at least 2");
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(g);
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  var /= static_cast<double>(g);  // population variance
  const double sd = std::sqrt(var);
  std::vector<double> adv(g, 0.0);
  if (sd < 1e-8) return adv;
  for (std::size_t i = 0; i < g; ++i) adv[i] = (rewards[i] - mean) / sd;
  return adv;
}

double importance_ratio(const DecisionPoint& point, const PolicyParams& params, bool* underflow) {
  if (!point.is_agent) throw std::invalid_argument("importance ratio on an observation point");
  const Eigen::VectorXd p_new =
      action_probabilities(params, ParamSet::kCurrent, point.state_features, point.instruction_features);
  const Eigen::VectorXd p_old =
      action_probabilities(params, ParamSet::kOld, point.state_features, point.instruction_features);
  double denom = p_old[point.action_taken];
  if (denom < 1e-30) {
    denom = 1e-30;
    if (underflow) *underflow = true;
  }
  return p_new[point.action_taken] / denom;
}

double kl_penalty(const DecisionPoint& point, const PolicyParams& params) {
  if (!point.is_agent) throw std::invalid_argument("KL penalty on an observation point");
  const Eigen::VectorXd p =
      action_probabilities(params, ParamSet::kCurrent, point.state_features, point.instruction_features);
  const Eigen::VectorXd q =
      action_probabilities(params, ParamSet::kRef, point.state_features, point.instruction_features);
  double kl = 0.0;
  for (Eigen::Index a = 0; a < p.size(); ++a) kl += p[a] * (std::log(p[a]) - std::log(q[a]));
  return kl;
}

SurrogateResult surrogate_loss(const GroupRollout& group, const PolicyParams& params,
                               double clip_eps, double kl_coef) {
  const std::size_t g = group.trajectories.size();
  if (g == 0 || group.advantages.size() != g) {
    throw std::invalid_argument("surrogate_loss needs trajectories with filled advantages");
  }
  const int block = params.block_dim();
  SurrogateResult out;
  out.gradient = Eigen::VectorXd::Zero(params.param_dim());
  double objective = 0.0;
  Eigen::VectorXd obj_grad = Eigen::VectorXd::Zero(params.param_dim());

  for (std::size_t i = 0; i < g; ++i) {
    const auto& traj = group.trajectories[i];
    const double adv = group.advantages[i];
    int agent_points = 0;
    for (const auto& pt : traj) {
      if (pt.is_agent) ++agent_points;
    }
    if (agent_points == 0) {
      throw std::invalid_argument("trajectory without agent decision points");
    }
    const double traj_norm = 1.0 / static_cast<double>(agent_points);
    double traj_term = 0.0;
    Eigen::VectorXd traj_grad = Eigen::VectorXd::Zero(params.param_dim());

    for (const auto& pt : traj) {
      if (!pt.is_agent) continue;  // masked observation point
      const Eigen::VectorXd x =
          (Eigen::VectorXd(block) << pt.state_features, pt.instruction_features, 1.0).finished();
      const Eigen::VectorXd p_cur = action_probabilities(params, ParamSet::kCurrent,
                                                         pt.state_features, pt.instruction_features);
      const Eigen::VectorXd p_old = action_probabilities(params, ParamSet::kOld,
                                                         pt.state_features, pt.instruction_features);
      const Eigen::VectorXd p_ref = action_probabilities(params, ParamSet::kRef,
                                                         pt.state_features, pt.instruction_features);
      double denom = p_old[pt.action_taken];
      if (denom < 1e-30) {
        denom = 1e-30;
        out.ratio_underflow = true;
      }
      const double rho = p_cur[pt.action_taken] / denom;
      const double clipped = std::clamp(rho, 1.0 - clip_eps, 1.0 + clip_eps);
      const double unclipped_term = rho * adv;
      const double clipped_term = clipped * adv;
      // ties take the unclipped branch
      const bool use_unclipped = unclipped_term <= clipped_term;
      traj_term += std::min(unclipped_term, clipped_term);

      double kl = 0.0;
      Eigen::VectorXd dlogit = Eigen::VectorXd::Zero(params.num_actions);
      for (int a = 0; a < params.num_actions; ++a) {
        const double ga = std::log(p_cur[a]) - std::log(p_ref[a]);
        kl += p_cur[a] * ga;
        dlogit[a] = p_cur[a] * ga;  // completed below with -p_a * sum(p g)
      }
      dlogit.array() -= p_cur.array() * kl;  // d KL / d logit_a
      traj_term -= kl_coef * kl;

      // d objective / d logit, accumulated per action then mapped to blocks
      Eigen::VectorXd dobj = -kl_coef * dlogit;
      if (use_unclipped) {
        // d(rho * adv)/d logit_a = adv * rho * (1{a = taken} - p_cur[a])
        dobj -= adv * rho * p_cur;
        dobj[pt.action_taken] += adv * rho;
      }
      for (int a = 0; a < params.num_actions; ++a) {
        traj_grad.segment(a * block, block) += dobj[a] * x;
      }
    }
    objective += traj_norm * traj_term;
    obj_grad += traj_norm * traj_grad;
  }

  const double group_norm = 1.0 / static_cast<double>(g);
  out.loss = -group_norm * objective;
  out.gradient = -group_norm * obj_grad;
  return out;
}

void apply_update(PolicyParams& params, const Eigen::VectorXd& gradient, double learning_rate) {
  if (!gradient.allFinite()) throw std::runtime_error("non-finite gradient; aborting update");
  if (gradient.size() != params.theta.size()) throw std::invalid_argument("gradient size mismatch");
  params.theta -= learning_rate * gradient;
}

void refresh_old(PolicyParams& params) { params.theta_old = params.theta; }

namespace {

constexpr std::uint32_t kPolicyFormatVersion = 1;

void write_u32(std::ofstream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::ifstream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

void write_f64(std::ofstream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::ifstream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

}  // namespace

void save_policy(const PolicyParams& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_u32(os, static_cast<std::uint32_t>(params.param_dim()));
  write_u32(os, static_cast<std::uint32_t>(params.instr_dim));
  write_u32(os, static_cast<std::uint32_t>(params.num_actions));
  write_u32(os, kPolicyFormatVersion);
  for (Eigen::Index i = 0; i < params.theta.size(); ++i) write_f64(os, params.theta[i]);
  for (Eigen::Index i = 0; i < params.theta_ref.size(); ++i) write_f64(os, params.theta_ref[i]);
}

PolicyParams load_policy(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  const auto p = read_u32(is);
  const auto f = read_u32(is);
  const auto a = read_u32(is);
  const auto version = read_u32(is);
  if (version != kPolicyFormatVersion) throw std::runtime_error("unsupported policy format version");
  if (a == 0 || p % a != 0) throw std::runtime_error("corrupt policy header");
  PolicyParams params;
  params.num_actions = static_cast<int>(a);
  params.instr_dim = static_cast<int>(f);
  params.state_dim = static_cast<int>(p / a) - static_cast<int>(f) - 1;
  if (params.state_dim < 0) throw std::runtime_error("corrupt policy header");
  params.theta.resize(static_cast<Eigen::Index>(p));
  params.theta_ref.resize(static_cast<Eigen::Index>(p));
  for (std::uint32_t i = 0; i < p; ++i) params.theta[i] = read_f64(is);
  for (std::uint32_t i = 0; i < p; ++i) params.theta_ref[i] = read_f64(is);
  if (!is) throw std::runtime_error("truncated policy file");
  params.theta_old = params.theta;
  return params;
}

}  // namespace coevo
