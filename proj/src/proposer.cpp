#include "coevo/proposer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "coevo/features.hpp"
#include "coevo/rollout.hpp"

namespace coevo {

ProposerKind proposer_kind_from_string(const std::string& s) {
  if (s == "paraphrase") return ProposerKind::kParaphrase;
  if (s == "history") return ProposerKind::kHistory;
  if (s == "reflection") return ProposerKind::kReflection;
  if (s == "mutation") return ProposerKind::kMutation;
  throw std::invalid_argument("unknown proposer kind: " + s);
}

std::string to_string(ProposerKind kind) {
  switch (kind) {
    case ProposerKind::kParaphrase: return "paraphrase";
    case ProposerKind::kHistory: return "history";
    case ProposerKind::kReflection: return "reflection";
    case ProposerKind::kMutation: return "mutation";
  }
  return "?";
}

const std::string& default_seed_instruction() {
  static const std::string text =
      "Answer the given question. You must conduct reasoning inside <think> and </think> "
      "first every time you get new information. After reasoning, if you find you lack "
      "some knowledge, you can call a search engine by <search> query </search> and it "
      "will return the top searched results between <information> and </information>. "
      "You can search as many times as your want. If you find no further external "
      "knowledge needed, you can directly provide the answer inside <answer> and "
      "</answer>, without detailed illustrations. For example, <answer> Beijing </answer>.";
  return text;
}

namespace {

const char* kParaphraseTemplate =
    "<ins_0>\n"
    "{instruction}\n"
    "</ins_0>\n"
    "\n"
    "Improve the above prompt.\n"
    "\n"
    "Give {n} different candidates.\n"
    "\n"
    "Make sure you include the same XML tags <>...</> as the original prompt in your "
    "improved prompts.\n"
    "\n"
    "For each XML tag, include both the beginning and ending tags, such as "
    "<answer>...</answer>.\n"
    "\n"
    "List the instruction candidates in <ins_1>...</ins_1> to <ins_N>...</ins_N> tags.\n";

const char* kHistoryTemplate =
    "<history>\n"
    "\n"
    "{history}"
    "</history>\n"
    "\n"
    "Based on the above \"instruction: score\" history for instructions with their "
    "scores, where the score ranges from 0 to 100, analyze what components can lead to "
    "better performance.\n"
    "\n"
    "Give {n} different but better candidates. Make it concise and effective. Be "
    "creative and diverse in your suggestions.\n"
    "\n"
    "Make sure you include the same XML tags <>...</> as the original prompt in your "
    "improved prompts.\n"
    "\n"
    "For each XML tag, include both the beginning and ending tags, such as "
    "<answer>...</answer>.\n"
    "\n"
    "List the instruction candidates in <ins_1>...</ins_1> to <ins_N>...</ins_N> tags.\n";

const char* kReflectionTemplate =
    "The initial prompt is:\n"
    "\n"
    "<ins_0>\n"
    "\n"
    "{instruction}\n"
    "\n"
    "</ins_0>\n"
    "\n"
    "However, it still gets the following examples wrong:\n"
    "\n"
    "{examples}"
    "Analyze the reasons behind these mistakes and why the prompt could have gotten "
    "these examples wrong.\n"
    "\n"
    "Now take the reasons into account. Revise and improve the initial prompt by giving "
    "{n} different but better candidates.\n"
    "\n"
    "Make sure you include the same XML tags <>...</> as the original prompt in your "
    "improved prompts.\n"
    "\n"
    "For each XML tag, include both the beginning and ending tags, such as "
    "<answer>...</answer>.\n"
    "\n"
    "List the instruction candidates in <ins_1>...</ins_1> to <ins_N>...</ins_N> tags.\n";

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

std::string read_file_or(const std::string& path, const std::string& fallback) {
  std::ifstream is(path);
  if (!is) return fallback;
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

const PromptTemplates& default_templates() {
  static const PromptTemplates t{kParaphraseTemplate, kHistoryTemplate, kReflectionTemplate};
  return t;
}

PromptTemplates load_templates(const std::string& dir) {
  PromptTemplates t = default_templates();
  if (dir.empty()) return t;
  t.paraphrase = read_file_or(dir + "/paraphrase.txt", t.paraphrase);
  t.history = read_file_or(dir + "/history.txt", t.history);
  t.reflection = read_file_or(dir + "/reflection.txt", t.reflection);
  return t;
}

std::string render_trajectory(const Trajectory& t, const Environment& env) {
  const ActionSet& acts = env.config.actions;
  std::ostringstream os;
  os << "Question: " << env.question_by_id(t.question_id).text << "\n";
  for (const auto& item : t.items) {
    if (item.is_agent) {
      if (acts.is_search(item.action)) {
        os << "<search> hop " << acts.search_slot(item.action) << " </search>\n";
      } else if (acts.is_answer_memory(item.action)) {
        os << "<answer> memory slot " << acts.memory_slot(item.action);
      } else {
        os << "<answer> guess";
      }
    } else {
      os << "<information> " << item.observation << " </information>\n";
    }
  }
  if (t.final_answer) {
    os << ": " << *t.final_answer << " </answer>";
  } else if (!t.items.empty() && t.items.back().is_agent) {
    os << " </answer>";
  } else {
    os << "(ran out of turns without answering)";
  }
  return os.str();
}

std::string build_prompt(ProposerKind kind, const std::string& parent_text,
                         const PromptContext& context, const PromptTemplates& templates) {
  const std::string n = std::to_string(context.candidate_count);
  switch (kind) {
    case ProposerKind::kParaphrase: {
      std::string p = replace_all(templates.paraphrase, "{instruction}", parent_text);
      return replace_all(p, "{n}", n);
    }
    case ProposerKind::kHistory: {
      std::ostringstream hist;
      int i = 1;
      for (const auto& [text, weight] : context.history) {
        const int score = static_cast<int>(std::lround(std::clamp(weight, 0.0, 1.0) * 100.0));
        hist << "<ins_" << i << ">\n" << text << "\n</ins_" << i << ">\n\n";
        hist << "<score_" << i << ">\n" << score << "\n</score_" << i << ">\n\n";
        ++i;
      }
      std::string p = replace_all(templates.history, "{history}", hist.str());
      return replace_all(p, "{n}", n);
    }
    case ProposerKind::kReflection: {
      if (context.failures.empty()) {
        throw std::invalid_argument("reflection prompt needs at least one failure trajectory");
      }
      if (context.env == nullptr) {
        throw std::invalid_argument("reflection prompt needs the environment for rendering");
      }
      std::ostringstream examples;
      for (const auto& record : context.failures) {
        examples << "<example>\n\n";
        examples << "Response: " << render_trajectory(record.trajectory, *context.env) << "\n\n";
        examples << "Correct answer: " << context.env->question_by_id(record.question_id).gold_answer
                 << "\n\n";
        examples << "</example>\n\n";
      }
      std::string p = replace_all(templates.reflection, "{instruction}", parent_text);
      p = replace_all(p, "{examples}", examples.str());
      return replace_all(p, "{n}", n);
    }
    case ProposerKind::kMutation:
      throw std::invalid_argument("the mutation proposer does not use prompts");
  }
  throw std::logic_error("bad proposer kind");
}

std::vector<std::string> parse_candidates(const std::string& raw_response) {
  std::vector<std::string> out;
  for (int k = 1; k <= 99; ++k) {
    const std::string open = "<ins_" + std::to_string(k) + ">";
    const std::string close = "</ins_" + std::to_string(k) + ">";
    const std::size_t first = raw_response.find(open);
    if (first == std::string::npos) continue;
    if (raw_response.find(open, first + open.size()) != std::string::npos) {
      std::cerr << "[coevo] duplicate <ins_" << k << "> tags; skipping index " << k << "\n";
      continue;
    }
    const std::size_t end = raw_response.find(close, first + open.size());
    if (end == std::string::npos) {
      std::cerr << "[coevo] missing </ins_" << k << ">; skipping index " << k << "\n";
      continue;
    }
    std::string body = raw_response.substr(first + open.size(), end - first - open.size());
    const auto a = body.find_first_not_of(" \t\r\n");
    const auto b = body.find_last_not_of(" \t\r\n");
    if (a == std::string::npos) continue;
    out.push_back(body.substr(a, b - a + 1));
  }
  if (out.empty()) throw std::runtime_error("no <ins_k>...</ins_k> candidates in response");
  return out;
}

std::vector<ProposedCandidate> mutation_propose(const InstructionCandidate& parent, Rng& rng,
                                                int count) {
  std::vector<ProposedCandidate> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const int flag = static_cast<int>(uniform_below(rng, kNumFlags));
    const bool currently_set = parent.features[flag] > 0.5;
    ProposedCandidate cand;
    cand.text = currently_set ? splice_flag_out(parent.text, flag)
                              : splice_flag_in(parent.text, flag);
    cand.features = instruction_features_from_text(cand.text);
    for (int k = kNumFlags; k < kFeatureDim; ++k) {
      const double jitter = uniform_range(rng, -0.2, 0.2);
      cand.features[k] = std::clamp(parent.features[k] + jitter, -1.0, 1.0);
    }
    out.push_back(std::move(cand));
  }
  return out;
}

namespace {

double proxy_score(const Eigen::VectorXd& features, const std::vector<int>& questions,
                   const PolicyParams& policy, const Environment& env,
                   const VerifySettings& settings, int candidate_index) {
  if (questions.empty()) return 0.0;
  double total = 0.0;
  for (int qid : questions) {
    std::uint64_t seed = hash_combine(settings.master_seed, 0x7e71f1ULL);
    seed = hash_combine(seed, static_cast<std::uint64_t>(settings.step));
    seed = hash_combine(seed, static_cast<std::uint64_t>(qid));
    if (!settings.common_random_numbers) {
      seed = hash_combine(seed, static_cast<std::uint64_t>(candidate_index + 1));
    }
    Rng rng(seed);
    const RolloutResult r =
        rollout(env, env.question_by_id(qid), -1, features, policy, ParamSet::kCurrent, rng);
    total += r.trajectory.reward;
  }
  return total / static_cast<double>(questions.size());
}

}  // namespace

VerifyOutcome verify_candidates(const std::vector<ProposedCandidate>& candidates,
                                const std::vector<int>& validation_questions,
                                const PolicyParams& policy, const Environment& env,
                                const InstructionCandidate& parent, int admit_count,
                                const VerifySettings& settings) {
  VerifyOutcome out;
  if (settings.known_parent_score) {
    out.parent_score = *settings.known_parent_score;
  } else {
    out.parent_score = proxy_score(parent.features, validation_questions, policy, env, settings, 0);
    out.rollouts += static_cast<long>(validation_questions.size());
  }

  std::vector<double> scores(candidates.size(), 0.0);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    scores[i] = proxy_score(candidates[i].features, validation_questions, policy, env, settings,
                            static_cast<int>(i) + 1);
    out.rollouts += static_cast<long>(validation_questions.size());
  }
  out.all_scores = scores;

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const double bar = settings.acceptance_ratio * out.parent_score;
  for (std::size_t i : order) {
    if (static_cast<int>(out.admitted.size()) >= admit_count) break;
    if (scores[i] >= bar) {
      out.admitted.push_back(candidates[i]);
      out.admitted_scores.push_back(scores[i]);
    } else {
      std::cerr << "[coevo] rejected candidate (score " << scores[i] << " < " << bar << ")\n";
    }
  }
  return out;
}

EvolveStats evolve_population(Population& pop, const ReplayBuffer& buffer,
                              const PolicyParams& policy, const Environment& env,
                              TextGenerator* generator, const EvolveSettings& settings, int step,
                              int& next_instruction_id, Rng& proposer_rng, Rng& verification_rng,
                              const PromptTemplates& templates) {
  EvolveStats stats;
  const std::vector<int> parent_ids = top_candidates(pop, pop.n_parent);
  const std::vector<int> validation =
      validation_set(buffer, settings.validation_size, verification_rng);
  stats.validation_size = static_cast<int>(validation.size());

  VerifySettings verify_settings;
  verify_settings.acceptance_ratio = settings.acceptance_ratio;
  verify_settings.common_random_numbers = settings.common_random_numbers;
  verify_settings.master_seed = settings.master_seed;
  verify_settings.step = step;

  // one parent proxy score per event, shared by every round
  std::vector<std::pair<int, double>> parent_scores;
  auto parent_score_of = [&](int id) {
    for (const auto& [pid, score] : parent_scores) {
      if (pid == id) return score;
    }
    double score = 0.0;
    if (!validation.empty()) {
      score = proxy_score(pop.by_id(id).features, validation, policy, env, verify_settings, 0);
      stats.verification_rollouts += static_cast<long>(validation.size());
    }
    stats.parents_scored += 1;
    parent_scores.emplace_back(id, score);
    return score;
  };

  const int need = pop.max_size - static_cast<int>(parent_ids.size());
  std::vector<InstructionCandidate> admitted;

  while (static_cast<int>(admitted.size()) < need && stats.rounds < settings.retrial_cap) {
    stats.rounds += 1;
    stats.generator_calls += 1;
    const int parent_id =
        parent_ids[static_cast<std::size_t>(uniform_below(proposer_rng, parent_ids.size()))];
    const InstructionCandidate& parent = pop.by_id(parent_id);

    ProposerKind kind = settings.kind;
    std::vector<ReplayRecord> failures;
    if (kind == ProposerKind::kReflection) {
      failures = sample_failures(buffer, settings.failure_samples, proposer_rng,
                                 settings.back_steps);
      if (failures.empty()) {
        std::cerr << "[coevo] no failure trajectories for reflection; falling back to mutation\n";
        kind = ProposerKind::kMutation;
      }
    }

    std::vector<ProposedCandidate> proposals;
    if (kind == ProposerKind::kMutation) {
      proposals = mutation_propose(parent, proposer_rng, settings.candidates_per_call);
    } else {
      PromptContext context;
      context.candidate_count = settings.candidates_per_call;
      context.env = &env;
      context.failures = std::move(failures);
      for (const auto& c : pop.candidates) context.history.emplace_back(c.text, c.weight);
      std::vector<std::string> texts;
      try {
        const std::string prompt = build_prompt(kind, parent.text, context, templates);
        texts = parse_candidates(generator->generate(prompt));
      } catch (const std::exception& e) {
        std::cerr << "[coevo] generator round failed (" << e.what()
                  << "); falling back to mutation for this round\n";
        proposals = mutation_propose(parent, proposer_rng, settings.candidates_per_call);
      }
      for (const auto& text : texts) {
        ProposedCandidate cand;
        cand.text = text;
        cand.features = instruction_features_from_text(text);
        for (int k = kNumFlags; k < kFeatureDim; ++k) cand.features[k] = parent.features[k];
        proposals.push_back(std::move(cand));
      }
    }
    if (proposals.empty()) continue;

    verify_settings.known_parent_score = parent_score_of(parent_id);
    const int remaining = need - static_cast<int>(admitted.size());
    const VerifyOutcome outcome = verify_candidates(proposals, validation, policy, env,
                                                    pop.by_id(parent_id), remaining, verify_settings);
    stats.verification_rollouts += outcome.rollouts;
    stats.candidates_verified += static_cast<int>(proposals.size());
    for (const auto& cand : outcome.admitted) {
      InstructionCandidate c;
      c.id = next_instruction_id++;
      c.text = cand.text;
      c.features = cand.features;
      c.birth_step = step;
      c.parent_id = parent_id;
      admitted.push_back(std::move(c));
    }
  }

  // unconditional mutation fill keeps the population at max_size
  while (static_cast<int>(admitted.size()) < need) {
    const int parent_id =
        parent_ids[static_cast<std::size_t>(uniform_below(proposer_rng, parent_ids.size()))];
    auto fills = mutation_propose(pop.by_id(parent_id), proposer_rng, 1);
    InstructionCandidate c;
    c.id = next_instruction_id++;
    c.text = fills[0].text;
    c.features = fills[0].features;
    c.birth_step = step;
    c.parent_id = parent_id;
    admitted.push_back(std::move(c));
    stats.mutation_fills += 1;
  }
  stats.admitted = static_cast<int>(admitted.size());

  std::vector<InstructionCandidate> next;
  for (int id : parent_ids) next.push_back(pop.by_id(id));
  std::sort(next.begin(), next.end(),
            [](const InstructionCandidate& a, const InstructionCandidate& b) { return a.id < b.id; });
  for (auto& c : admitted) next.push_back(std::move(c));
  pop.candidates = std::move(next);
  if (settings.preserve_parent_weights) {
    for (auto& c : pop.candidates) {
      if (std::find(parent_ids.begin(), parent_ids.end(), c.id) == parent_ids.end()) {
        c.weight = 0.0;
        c.reward_window.clear();
      }
    }
  } else {
    reset_weights(pop);
  }
  return stats;
}

}  // namespace coevo
