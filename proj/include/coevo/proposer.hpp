#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coevo/environment.hpp"
#include "coevo/generator.hpp"
#include "coevo/policy.hpp"
#include "coevo/population.hpp"
#include "coevo/replay_buffer.hpp"
#include "coevo/rng.hpp"

namespace coevo {

enum class ProposerKind { kParaphrase, kHistory, kReflection, kMutation };

ProposerKind proposer_kind_from_string(const std::string& s);
std::string to_string(ProposerKind kind);

/// The instruction every run starts from.
const std::string& default_seed_instruction();

struct PromptContext {
  int candidate_count = 6;
  std::vector<std::pair<std::string, double>> history;  // (text, weight in [0,1])
  std::vector<ReplayRecord> failures;
  const Environment* env = nullptr;  // needed to render failures
};

struct PromptTemplates {
  std::string paraphrase;
  std::string history;
  std::string reflection;
};

/// Built-in templates; overridable by files named paraphrase.txt,
/// history.txt, reflection.txt in a directory.
const PromptTemplates& default_templates();
PromptTemplates load_templates(const std::string& dir);

/// Renders one rollout as a transcript for the reflection prompt.
std::string render_trajectory(const Trajectory& t, const Environment& env);

/// Fills the template for `kind`. History weights are scaled to 0-100;
/// each reflection failure becomes one <example> block. Throws
/// std::invalid_argument for a reflection prompt without failures.
std::string build_prompt(ProposerKind kind, const std::string& parent_text,
                         const PromptContext& context,
                         const PromptTemplates& templates = default_templates());

/// Extracts <ins_1>..</ins_1> through <ins_N>..</ins_N> contents in index
/// order. Malformed or duplicate indices are skipped with a warning.
/// Throws std::runtime_error when nothing parses.
std::vector<std::string> parse_candidates(const std::string& raw_response);

struct ProposedCandidate {
  std::string text;
  Eigen::VectorXd features;
};

/// Offline proposer: toggles one random keyword flag (splicing the lexicon
/// phrase in or out of the text) and jitters the continuous knobs by
/// uniform +-0.2 clipped to [-1, 1].
std::vector<ProposedCandidate> mutation_propose(const InstructionCandidate& parent, Rng& rng,
                                                int count);

struct VerifyOutcome {
  std::vector<ProposedCandidate> admitted;
  std::vector<double> admitted_scores;
  double parent_score = 0.0;
  long rollouts = 0;
  std::vector<double> all_scores;  // in candidate order, for logging
};

struct VerifySettings {
  double acceptance_ratio = 1.0;
  bool common_random_numbers = true;
  std::uint64_t master_seed = 0;
  int step = 0;
  std::optional<double> known_parent_score;  // reuse an already-computed parent score
};

/// Scores each candidate (and the parent) with one current-policy rollout
/// per validation question, then admits up to admit_count ranked candidates
/// whose proxy score clears acceptance_ratio * parent score. Rollout seeds
/// are shared between parent and candidates unless CRN is disabled.
VerifyOutcome verify_candidates(const std::vector<ProposedCandidate>& candidates,
                                const std::vector<int>& validation_questions,
                                const PolicyParams& policy, const Environment& env,
                                const InstructionCandidate& parent, int admit_count,
                                const VerifySettings& settings);

struct EvolveSettings {
  ProposerKind kind = ProposerKind::kMutation;
  int candidates_per_call = 6;
  int failure_samples = 4;
  int retrial_cap = 5;
  double acceptance_ratio = 1.0;
  int validation_size = 200;
  bool common_random_numbers = true;
  bool preserve_parent_weights = false;
  int back_steps = 5;
  std::uint64_t master_seed = 0;
};

struct EvolveStats {
  int rounds = 0;
  int generator_calls = 0;
  long verification_rollouts = 0;
  int candidates_verified = 0;
  int parents_scored = 0;
  int mutation_fills = 0;
  int validation_size = 0;
  int admitted = 0;
};

/// One evolution event: keeps the top n_parent candidates, refills the
/// population through generate/parse/verify rounds (mutation fills any
/// remainder unconditionally), and resets weights and reward windows.
EvolveStats evolve_population(Population& pop, const ReplayBuffer& buffer,
                              const PolicyParams& policy, const Environment& env,
                              TextGenerator* generator, const EvolveSettings& settings, int step,
                              int& next_instruction_id, Rng& proposer_rng, Rng& verification_rng,
                              const PromptTemplates& templates = default_templates());

}  // namespace coevo
