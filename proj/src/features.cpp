#include "coevo/features.hpp"

#include <algorithm>
#include <cctype>

namespace coevo {

namespace {

std::string to_lower(const std::string& s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

const std::vector<FlagLexeme>& flag_lexicon() {
  // "verif" is a stem so that verify/verified/verification all count.
  static const std::vector<FlagLexeme> lexicon = {
      {{"step-by-step", "step by step"}, "Work step-by-step."},
      {{"individually"}, "Search for each entity individually."},
      {{"never search for the entire question"}, "Never search for the entire question."},
      {{"analyze"}, "Analyze the results of every search."},
      {{"verif"}, "Verify each fact before answering."},
      {{"plan"}, "Make a plan before acting."},
      {{"context"}, "Weigh the context of each result."},
      {{"answer format", "strict"}, "Keep the answer format strict."},
  };
  return lexicon;
}

Eigen::VectorXd instruction_features_from_text(const std::string& text) {
  Eigen::VectorXd f = Eigen::VectorXd::Zero(kFeatureDim);
  const std::string lower = to_lower(text);
  const auto& lexicon = flag_lexicon();
  for (int i = 0; i < kNumFlags; ++i) {
    for (const auto& pat : lexicon[i].patterns) {
      if (lower.find(pat) != std::string::npos) {
        f[i] = 1.0;
        break;
      }
    }
  }
  return f;
}

std::string splice_flag_in(const std::string& text, int flag) {
  std::string out = text;
  if (!out.empty() && out.back() != ' ' && out.back() != '\n') out += ' ';
  out += flag_lexicon()[flag].splice;
  return out;
}

std::string splice_flag_out(const std::string& text, int flag) {
  std::string lower = to_lower(text);
  std::string out = text;
  for (const auto& pat : flag_lexicon()[flag].patterns) {
    std::size_t pos;
    while ((pos = lower.find(pat)) != std::string::npos) {
      out.erase(pos, pat.size());
      lower.erase(pos, pat.size());
    }
  }
  return out;
}

}  // namespace coevo
