#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace lcr::parse {

inline constexpr std::string_view kThinkOpen = "<think>";
inline constexpr std::string_view kThinkClose = "</think>";
inline constexpr std::string_view kBoxedOpen = "\\boxed{";

// A raw model output split into its optional think section and the answer.
struct ModelOutput {
  std::string raw_text;
  std::optional<std::string> think;
  std::string answer;
  int token_length = 0;  // output tokens under the pipeline vocabulary

  static ModelOutput from_raw(std::string raw_text, int token_length);
};

struct ParsedScore {
  double value = 0.0;  // in [0, 1]
};

struct SectionSplit {
  std::optional<std::string> think;
  std::string answer;
};

// If the text begins with "<think>" and contains "</think>", returns the
// content between the tags and the remainder; otherwise the whole text is
// the answer. Total on all inputs.
SectionSplit split_sections(std::string_view raw_text);

// Finds the last occurrence of \boxed{<decimal>} whose content is a decimal
// in [0, 1]. Accepted numerals: an integer part of one or more digits, an
// optional fraction of 1-6 digits, or a bare ".digits" fraction; optional
// spaces around the numeral. Nested braces are rejected. Returns nullopt
// when no valid occurrence exists ("wrong prediction" downstream).
std::optional<ParsedScore> extract_score(std::string_view answer);

}  // namespace lcr::parse
