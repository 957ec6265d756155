#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace coevo {

/// Strategy-feature layout for instruction candidates.
///
/// The first kNumFlags dimensions are keyword flags detected from the
/// instruction text; the rest are continuous knobs in [-1, 1] that have no
/// textual surface and are set directly by the mutation proposer.
constexpr int kNumFlags = 8;
constexpr int kNumKnobs = 4;
constexpr int kFeatureDim = kNumFlags + kNumKnobs;

enum FlagIndex : int {
  kFlagStepByStep = 0,
  kFlagIndividually = 1,
  kFlagNeverEntireQuestion = 2,
  kFlagAnalyze = 3,
  kFlagVerify = 4,
  kFlagPlan = 5,
  kFlagContext = 6,
  kFlagFormat = 7,
};

enum KnobIndex : int {
  kKnobSearchBias = kNumFlags + 0,
  kKnobAnswerBias = kNumFlags + 1,
  kKnobGuessPenalty = kNumFlags + 2,
  kKnobStalePenalty = kNumFlags + 3,
};

struct FlagLexeme {
  std::vector<std::string> patterns;  // lowercase substrings that set the flag
  std::string splice;                 // canonical sentence toggled in/out by mutation
};

/// The fixed lexicon, indexed by FlagIndex.
const std::vector<FlagLexeme>& flag_lexicon();

/// Keyword-flag encoding of an instruction text. Flags are 0/1 by
/// case-insensitive substring match; knob dimensions are returned as 0.
Eigen::VectorXd instruction_features_from_text(const std::string& text);

/// Append the canonical phrase for `flag` to the text.
std::string splice_flag_in(const std::string& text, int flag);

/// Remove every occurrence of the flag's patterns until none matches.
std::string splice_flag_out(const std::string& text, int flag);

}  // namespace coevo
