#include "coevo/population.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace coevo {

using nlohmann::json;

const InstructionCandidate& Population::by_id(int id) const {
  for (const auto& c : candidates) {
    if (c.id == id) return c;
  }
  throw std::out_of_range("unknown instruction id " + std::to_string(id));
}

InstructionCandidate& Population::by_id(int id) {
  return const_cast<InstructionCandidate&>(static_cast<const Population&>(*this).by_id(id));
}

bool Population::contains(int id) const {
  return std::any_of(candidates.begin(), candidates.end(),
                     [id](const InstructionCandidate& c) { return c.id == id; });
}

Eigen::VectorXd selection_probabilities(const Population& pop) {
  if (pop.candidates.empty()) throw std::invalid_argument("selection over empty population");
  if (!(pop.temperature > 0.0)) throw std::invalid_argument("temperature must be > 0");
  const auto n = static_cast<Eigen::Index>(pop.candidates.size());
  Eigen::VectorXd scaled(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    scaled[j] = pop.candidates[static_cast<std::size_t>(j)].weight / pop.temperature;
  }
  const double shift = scaled.maxCoeff();
  Eigen::VectorXd p = (scaled.array() - shift).exp();
  p /= p.sum();
  return p;
}

int sample_instruction(const Population& pop, Rng& rng) {
  const Eigen::VectorXd p = selection_probabilities(pop);
  const double u = uniform01(rng);
  double cumulative = 0.0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    cumulative += p[j];
    if (u < cumulative) return pop.candidates[static_cast<std::size_t>(j)].id;
  }
  return pop.candidates.back().id;  // guards against rounding at u ~ 1
}

void record_step_reward(Population& pop, int candidate_id, double mean_reward, int step) {
  (void)step;
  InstructionCandidate& c = pop.by_id(candidate_id);
  c.reward_window.push_back(mean_reward);
  while (static_cast<int>(c.reward_window.size()) > pop.window_size) c.reward_window.pop_front();
  c.weight = std::accumulate(c.reward_window.begin(), c.reward_window.end(), 0.0) /
             static_cast<double>(c.reward_window.size());
}

namespace {

// (weight desc, id asc): the retention order for pruning and parenting
std::vector<std::size_t> ranked_order(const Population& pop) {
  std::vector<std::size_t> order(pop.candidates.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ca = pop.candidates[a];
    const auto& cb = pop.candidates[b];
    if (ca.weight != cb.weight) return ca.weight > cb.weight;
    return ca.id < cb.id;
  });
  return order;
}

}  // namespace

void prune(Population& pop, int step) {
  (void)step;
  const int size = static_cast<int>(pop.candidates.size());
  if (size <= pop.n_parent) return;
  const int cut = std::min(size / 2, size - pop.n_parent);
  if (cut <= 0) return;
  const auto order = ranked_order(pop);
  std::vector<InstructionCandidate> kept;
  kept.reserve(static_cast<std::size_t>(size - cut));
  for (int r = 0; r < size - cut; ++r) kept.push_back(pop.candidates[order[static_cast<std::size_t>(r)]]);
  std::sort(kept.begin(), kept.end(),
            [](const InstructionCandidate& a, const InstructionCandidate& b) { return a.id < b.id; });
  pop.candidates = std::move(kept);
}

int best_instruction(const Population& pop) {
  if (pop.candidates.empty()) throw std::invalid_argument("best_instruction on empty population");
  return pop.candidates[ranked_order(pop)[0]].id;
}

std::vector<int> top_candidates(const Population& pop, int k) {
  const auto order = ranked_order(pop);
  std::vector<int> ids;
  for (std::size_t r = 0; r < order.size() && static_cast<int>(r) < k; ++r) {
    ids.push_back(pop.candidates[order[r]].id);
  }
  return ids;
}

void reset_weights(Population& pop) {
  for (auto& c : pop.candidates) {
    c.weight = 0.0;
    c.reward_window.clear();
  }
}

std::string population_to_json(const Population& pop) {
  json arr = json::array();
  for (const auto& c : pop.candidates) {
    json j{{"id", c.id},
           {"text", c.text},
           {"features", std::vector<double>(c.features.data(), c.features.data() + c.features.size())},
           {"weight", c.weight},
           {"reward_window", std::vector<double>(c.reward_window.begin(), c.reward_window.end())},
           {"birth_step", c.birth_step}};
    j["parent_id"] = c.parent_id ? json(*c.parent_id) : json(nullptr);
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

void population_candidates_from_json(Population& pop, const std::string& text) {
  pop.candidates.clear();
  for (const auto& j : json::parse(text)) {
    InstructionCandidate c;
    c.id = j.at("id").get<int>();
    c.text = j.at("text").get<std::string>();
    const auto fv = j.at("features").get<std::vector<double>>();
    c.features = Eigen::Map<const Eigen::VectorXd>(fv.data(), static_cast<Eigen::Index>(fv.size()));
    c.weight = j.at("weight").get<double>();
    for (double r : j.at("reward_window").get<std::vector<double>>()) c.reward_window.push_back(r);
    c.birth_step = j.at("birth_step").get<int>();
    if (!j.at("parent_id").is_null()) c.parent_id = j.at("parent_id").get<int>();
    pop.candidates.push_back(std::move(c));
  }
}

}  // namespace coevo
