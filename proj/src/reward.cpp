#include "lcr/reward.hpp"

#include <cmath>

#include "lcr/error.hpp"

namespace lcr::reward {

void RewardConfig::validate() const {
  if (!(0.0 <= t1 && t1 <= t2 && t2 <= 1.0)) {
    throw_config("require 0 <= t1 <= t2 <= 1");
  }
  if (!(0 < l_max && l_max < l_completion)) {
    throw_config("require 0 < l_max < l_completion");
  }
  if (alpha < 0 || beta < 0) throw_config("alpha and beta must be >= 0");
}

double score_reward(const std::optional<parse::ParsedScore>& parsed, int label,
                    const RewardConfig& cfg) {
  if (label != 0 && label != 1) {
    throw_data("score_reward requires a binary label");
  }
  if (!parsed) return -1.0;
  const double s = parsed->value;
  if (label == 0) return s <= cfg.t1 ? 1.0 : 1.0 - 2.0 * s;
  return s > cfg.t2 ? 1.0 : 2.0 * s - 1.0;
}

double format_reward(std::string_view raw_text) {
  const bool has_open =
      raw_text.find(parse::kThinkOpen) != std::string_view::npos;
  const bool has_close =
      raw_text.find(parse::kThinkClose) != std::string_view::npos;
  const bool pattern =
      raw_text.substr(0, parse::kThinkOpen.size()) == parse::kThinkOpen &&
      raw_text.find(parse::kThinkClose, parse::kThinkOpen.size()) !=
          std::string_view::npos;
  return (pattern ? 1.0 : 0.0) + (has_open ? 0.5 : 0.0) +
         (has_close ? 0.5 : 0.0);
}

double length_penalty(int token_length, const RewardConfig& cfg) {
  if (token_length < 0 || token_length > cfg.l_completion) {
    throw_data("token length outside [0, l_completion]");
  }
  if (token_length < cfg.l_max) return 0.0;
  const double arg = (static_cast<double>(token_length - cfg.l_max) /
                      static_cast<double>(cfg.l_completion - cfg.l_max)) *
                     (3.141592653589793 / 2.0);
  return cfg.length_mode == LengthMode::kLiteral ? -std::cos(arg)
                                                 : -std::sin(arg);
}

RewardBreakdown total_reward(const parse::ModelOutput& output, int label,
                             const RewardConfig& cfg) {
  cfg.validate();
  RewardBreakdown b;
  b.score = score_reward(parse::extract_score(output.answer), label, cfg);
  b.format = format_reward(output.raw_text);
  b.length = length_penalty(output.token_length, cfg);
  b.total = cfg.alpha * b.score + cfg.beta * b.format + b.length;
  return b;
}

}  // namespace lcr::reward
