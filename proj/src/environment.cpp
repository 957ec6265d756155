#include "coevo/environment.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <sstream>
#include <stdexcept>

namespace coevo {

using nlohmann::json;

std::optional<std::string> KnowledgeBase::lookup(const std::string& entity,
                                                const std::string& relation) const {
  auto it = facts.find({entity, relation});
  if (it == facts.end()) return std::nullopt;
  return it->second;
}

const Question& Environment::question_by_id(int id) const {
  for (const auto& q : questions) {
    if (q.id == id) return q;
  }
  throw std::out_of_range("unknown question id " + std::to_string(id));
}

RolloutState Environment::start(const Question& q, int instruction_id) const {
  RolloutState s;
  s.question = &q;
  s.trajectory.instruction_id = instruction_id;
  s.trajectory.question_id = q.id;
  return s;
}

void Environment::step(RolloutState& s, int action) const {
  if (s.terminal) throw std::logic_error("step() on a terminal trajectory");
  const ActionSet& acts = config.actions;
  const Question& q = *s.question;

  s.trajectory.items.push_back({true, action, {}});
  s.trajectory.turns_used += 1;

  if (acts.is_search(action)) {
    const int slot = acts.search_slot(action);
    std::string entity;
    bool entity_known = false;
    if (slot < q.depth()) {
      if (slot == 0) {
        entity = q.hop_entities[0].first;
        entity_known = true;
      } else if (slot <= s.resolved_hops) {
        // the entity for hop k is the value retrieved at hop k-1
        entity = kb.facts.at({q.hop_entities[slot - 1].first, q.hop_entities[slot - 1].second});
        entity_known = true;
      }
    }
    std::optional<std::string> hit;
    std::string relation = slot < q.depth() ? q.hop_entities[slot].second : std::string();
    if (entity_known) hit = kb.lookup(entity, relation);
    if (hit) {
      std::string obs = entity + " | " + relation + " -> " + *hit;
      auto d = kb.distractor_for.find({entity, relation});
      if (d != kb.distractor_for.end()) obs += " ; also: " + d->second;
      s.trajectory.items.push_back({false, -1, obs});
      s.memory.push_back(*hit);
      if (static_cast<int>(s.memory.size()) > config.memory_cap)
        s.memory.erase(s.memory.begin());
      if (slot == s.resolved_hops && slot < q.depth()) s.resolved_hops = slot + 1;
      s.last_was_hit = true;
    } else {
      s.trajectory.items.push_back({false, -1, "no result"});
      s.last_was_hit = false;
    }
  } else if (acts.is_answer_memory(action)) {
    const int j = acts.memory_slot(action);  // 0 = most recent hit
    const int m = static_cast<int>(s.memory.size());
    if (j < m) s.trajectory.final_answer = s.memory[m - 1 - j];
    s.terminal = true;
  } else if (acts.is_answer_guess(action)) {
    if (!kb.distractor_pool.empty()) {
      s.trajectory.final_answer =
          kb.distractor_pool[static_cast<std::size_t>(q.id) % kb.distractor_pool.size()];
    }
    s.terminal = true;
  } else {
    throw std::out_of_range("action id out of range: " + std::to_string(action));
  }

  if (!s.terminal && s.trajectory.turns_used >= config.max_turns) {
    s.terminal = true;  // force-terminate without an answer
  }
  if (s.terminal) {
    s.trajectory.reward = exact_match_reward(s.trajectory, q);
  }
}

std::string normalize_answer(const std::string& s) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      if (!out.empty()) pending_space = true;
    } else {
      if (pending_space) {
        out += ' ';
        pending_space = false;
      }
      out += static_cast<char>(std::tolower(c));
    }
  }
  return out;
}

double Environment::exact_match_reward(const Trajectory& t, const Question& q) {
  if (!t.final_answer) return 0.0;
  return normalize_answer(*t.final_answer) == normalize_answer(q.gold_answer) ? 1.0 : 0.0;
}

Eigen::VectorXd Environment::state_features(const RolloutState& s) const {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(kStateDim);
  const int d = s.question->depth();
  f[0] = static_cast<double>(s.trajectory.turns_used) / config.max_turns;
  f[1] = d > 0 ? static_cast<double>(s.resolved_hops) / d : 0.0;
  f[2] = s.last_was_hit ? 1.0 : 0.0;
  f[3] = static_cast<double>(s.memory.size()) / config.memory_cap;
  if (d >= 1 && d <= kMaxDepth) f[3 + d] = 1.0;
  return f;
}

namespace {

std::string entity_name(std::uint64_t n) {
  std::ostringstream os;
  os << "ent_" << n;
  return os.str();
}

std::string value_name(std::uint64_t n) {
  std::ostringstream os;
  os << "val_" << n;
  return os.str();
}

const std::vector<std::string>& relation_pool() {
  static const std::vector<std::string> pool = {
      "made_by", "located_in", "led_by", "named_after", "part_of", "born_in",
  };
  return pool;
}

std::string question_text(const Question& q) {
  // nested phrasing: "What is r2 of the r1 of the r0 of e0?"
  std::string inner = q.hop_entities[0].first;
  for (const auto& [entity, relation] : q.hop_entities) {
    (void)entity;
    inner = "the " + relation + " of " + inner;
  }
  return "What is " + inner + "?";
}

}  // namespace

Environment generate_dataset(const DatasetSpec& spec, const EnvConfig& env_config) {
  Environment env;
  env.config = env_config;
  Rng rng(mix64(spec.seed ^ 0xc0e'0da7aULL));

  std::uint64_t next_entity = 0;
  std::uint64_t next_value = 0;

  // wrong-answer pool, disjoint from every chain value
  for (int i = 0; i < 48; ++i) {
    env.kb.distractor_pool.push_back("stray_" + std::to_string(i));
  }

  const auto& rels = relation_pool();
  int qid = 0;
  auto make_chain = [&](int depth) {
    Question q;
    q.id = qid++;
    std::string head = entity_name(next_entity++);
    std::string current = head;
    for (int hop = 0; hop < depth; ++hop) {
      const std::string relation = rels[uniform_below(rng, rels.size())];
      const bool last = hop == depth - 1;
      const std::string value = last ? value_name(next_value++) : entity_name(next_entity++);
      env.kb.facts[{current, relation}] = value;
      // one distractor triple per key plus a same-relation decoy fact,
      // so relation slots must be resolved hop by hop
      const std::string decoy_entity = entity_name(next_entity++);
      const std::string decoy_value =
          env.kb.distractor_pool[uniform_below(rng, env.kb.distractor_pool.size())];
      env.kb.facts[{decoy_entity, relation}] = decoy_value;
      env.kb.distractor_for[{current, relation}] = decoy_entity + " | " + relation + " -> " + decoy_value;
      q.hop_entities.emplace_back(current, relation);
      current = value;
    }
    q.gold_answer = current;
    q.text = question_text(q);
    env.questions.push_back(q);
  };

  for (int i = 0; i < spec.count_depth1; ++i) make_chain(1);
  for (int i = 0; i < spec.count_depth2; ++i) make_chain(2);
  for (int i = 0; i < spec.count_depth3; ++i) make_chain(3);
  return env;
}

int oracle_action(const Environment& env, const RolloutState& s) {
  const ActionSet& acts = env.config.actions;
  if (s.resolved_hops < s.question->depth()) return s.resolved_hops;  // SEARCH(next hop)
  return acts.search_slots;                                           // ANSWER(most recent)
}

int broad_single_search_action(const Environment& env, const RolloutState& s) {
  const ActionSet& acts = env.config.actions;
  if (s.trajectory.turns_used == 0) return 0;  // one SEARCH(slot 0), mirroring the question
  return acts.search_slots;                    // then answer whatever came back
}

namespace {

json question_to_json(const Question& q) {
  json hops = json::array();
  for (const auto& [entity, relation] : q.hop_entities) {
    hops.push_back({{"entity", entity}, {"relation", relation}});
  }
  return json{{"id", q.id}, {"text", q.text}, {"hops", hops}, {"gold_answer", q.gold_answer}};
}

Question question_from_json(const json& j) {
  Question q;
  q.id = j.at("id").get<int>();
  q.text = j.at("text").get<std::string>();
  for (const auto& h : j.at("hops")) {
    q.hop_entities.emplace_back(h.at("entity").get<std::string>(),
                                h.at("relation").get<std::string>());
  }
  q.gold_answer = j.at("gold_answer").get<std::string>();
  return q;
}

}  // namespace

std::string kb_to_jsonl(const KnowledgeBase& kb) {
  std::ostringstream os;
  for (const auto& [key, value] : kb.facts) {
    json j{{"entity", key.first}, {"relation", key.second}, {"value", value}};
    auto d = kb.distractor_for.find(key);
    if (d != kb.distractor_for.end()) j["distractor"] = d->second;
    os << j.dump() << '\n';
  }
  json pool{{"distractor_pool", kb.distractor_pool}};
  os << pool.dump() << '\n';
  return os.str();
}

KnowledgeBase kb_from_jsonl(const std::string& text) {
  KnowledgeBase kb;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (j.contains("distractor_pool")) {
      kb.distractor_pool = j.at("distractor_pool").get<std::vector<std::string>>();
      continue;
    }
    std::pair<std::string, std::string> key{j.at("entity").get<std::string>(),
                                            j.at("relation").get<std::string>()};
    kb.facts[key] = j.at("value").get<std::string>();
    if (j.contains("distractor")) kb.distractor_for[key] = j.at("distractor").get<std::string>();
  }
  return kb;
}

std::string questions_to_jsonl(const std::vector<Question>& qs) {
  std::ostringstream os;
  for (const auto& q : qs) os << question_to_json(q).dump() << '\n';
  return os.str();
}

std::vector<Question> questions_from_jsonl(const std::string& text) {
  std::vector<Question> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty()) out.push_back(question_from_json(json::parse(line)));
  }
  return out;
}

}  // namespace coevo
