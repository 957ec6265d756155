#include "coevo/replay_buffer.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <climits>
#include <set>
#include <sstream>

namespace coevo {

using nlohmann::json;

void ReplayBuffer::push(ReplayRecord record) {
  records.push_back(std::move(record));
  while (records.size() > capacity) records.pop_front();
}

std::vector<ReplayRecord> sample_failures(const ReplayBuffer& buffer, int count, Rng& rng,
                                          int back_steps) {
  std::vector<ReplayRecord> picked;
  if (count < 1 || buffer.records.empty()) return picked;

  int latest = buffer.records.back().step;
  std::vector<std::size_t> failures;  // indices of all failures, insertion order
  for (std::size_t i = 0; i < buffer.records.size(); ++i) {
    if (buffer.records[i].reward < buffer.failure_threshold) failures.push_back(i);
  }
  if (failures.empty()) return picked;

  // widening ladder: latest step, last back_steps steps, whole buffer
  const int tiers[3][2] = {{latest, latest},
                           {latest - back_steps + 1, latest},
                           {INT_MIN, latest}};
  std::set<std::size_t> taken;
  for (const auto& tier : tiers) {
    std::vector<std::size_t> pool;
    for (std::size_t i : failures) {
      const int s = buffer.records[i].step;
      if (s >= tier[0] && s <= tier[1] && !taken.count(i)) pool.push_back(i);
    }
    shuffle(pool, rng);
    for (std::size_t i : pool) {
      if (static_cast<int>(picked.size()) >= count) break;
      picked.push_back(buffer.records[i]);
      taken.insert(i);
    }
    if (static_cast<int>(picked.size()) >= count) break;
  }
  return picked;
}

std::vector<int> validation_set(const ReplayBuffer& buffer, int size, Rng& rng) {
  std::vector<int> ids;
  if (size < 1 || buffer.records.empty()) return ids;
  std::set<int> seen;
  for (auto it = buffer.records.rbegin(); it != buffer.records.rend(); ++it) {
    if (seen.insert(it->question_id).second) ids.push_back(it->question_id);
  }
  shuffle(ids, rng);
  if (static_cast<int>(ids.size()) > size) ids.resize(static_cast<std::size_t>(size));
  return ids;
}

namespace {

json trajectory_to_json(const Trajectory& t) {
  json items = json::array();
  for (const auto& item : t.items) {
    if (item.is_agent) {
      items.push_back({{"a", item.action}});
    } else {
      items.push_back({{"o", item.observation}});
    }
  }
  json j{{"instruction_id", t.instruction_id},
         {"question_id", t.question_id},
         {"items", items},
         {"turns_used", t.turns_used},
         {"reward", t.reward}};
  j["final_answer"] = t.final_answer ? json(*t.final_answer) : json(nullptr);
  return j;
}

Trajectory trajectory_from_json(const json& j) {
  Trajectory t;
  t.instruction_id = j.at("instruction_id").get<int>();
  t.question_id = j.at("question_id").get<int>();
  for (const auto& item : j.at("items")) {
    if (item.contains("a")) {
      t.items.push_back({true, item.at("a").get<int>(), {}});
    } else {
      t.items.push_back({false, -1, item.at("o").get<std::string>()});
    }
  }
  t.turns_used = j.at("turns_used").get<int>();
  t.reward = j.at("reward").get<double>();
  if (!j.at("final_answer").is_null()) t.final_answer = j.at("final_answer").get<std::string>();
  return t;
}

}  // namespace

std::string buffer_to_jsonl(const ReplayBuffer& buffer) {
  std::ostringstream os;
  for (const auto& r : buffer.records) {
    json j{{"instruction_id", r.instruction_id},
           {"question_id", r.question_id},
           {"trajectory", trajectory_to_json(r.trajectory)},
           {"reward", r.reward},
           {"step", r.step}};
    os << j.dump() << '\n';
  }
  return os.str();
}

void buffer_from_jsonl(ReplayBuffer& buffer, const std::string& text) {
  buffer.records.clear();
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    ReplayRecord r;
    r.instruction_id = j.at("instruction_id").get<int>();
    r.question_id = j.at("question_id").get<int>();
    r.trajectory = trajectory_from_json(j.at("trajectory"));
    r.reward = j.at("reward").get<double>();
    r.step = j.at("step").get<int>();
    buffer.records.push_back(std::move(r));
  }
}

}  // namespace coevo
