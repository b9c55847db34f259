#pragma once

#include <optional>
#include <string_view>

#include "lcr/parse.hpp"

namespace lcr::reward {

enum class LengthMode {
  kLiteral,   // -cos over the penalty window: -1 at l_max rising to 0
  kMonotone,  // opt-in -sin variant: 0 at l_max falling to -1
};

struct RewardConfig {
  double t1 = 0.45;
  double t2 = 0.55;
  int l_max = 9000;
  int l_completion = 10000;
  double alpha = 1.0;
  double beta = 1.0;
  LengthMode length_mode = LengthMode::kLiteral;

  void validate() const;
};

struct RewardBreakdown {
  double score = 0;
  double format = 0;
  double length = 0;
  double total = 0;  // alpha*score + beta*format + length
};

// Score reward. label must be 0 or 1; a missing parse is worth -1.
// label 0: 1 when s <= t1, else 1-2s. label 1: 1 when s > t2, else 2s-1.
double score_reward(const std::optional<parse::ParsedScore>& parsed, int label,
                    const RewardConfig& cfg);

// Indicator sum as printed: +1 for the full pattern (leading "<think>" and a
// "</think>" somewhere after), +0.5 per tag contained anywhere. Max 2.0.
double format_reward(std::string_view raw_text);

// Length penalty: 0 below l_max, then the cosine window up to l_completion.
double length_penalty(int token_length, const RewardConfig& cfg);

RewardBreakdown total_reward(const parse::ModelOutput& output, int label,
                             const RewardConfig& cfg);

}  // namespace lcr::reward
