#include "lcr/parse.hpp"

#include <cctype>
#include <cstdlib>
#include <string>

namespace lcr::parse {

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Validates the bounded numeral grammar, then converts with strtod so the
// value is the correctly rounded double of the decimal string. Content must
// already have surrounding spaces stripped.
std::optional<double> parse_numeral(std::string_view s) {
  if (s.empty()) return std::nullopt;
  size_t i = 0;
  size_t int_digits = 0;
  while (i < s.size() && is_digit(s[i])) {
    ++i;
    if (++int_digits > 9) return std::nullopt;
  }
  if (i < s.size() && s[i] == '.') {
    ++i;
    size_t frac_digits = 0;
    while (i < s.size() && is_digit(s[i])) {
      ++i;
      ++frac_digits;
    }
    if (frac_digits < 1 || frac_digits > 6) return std::nullopt;
  } else if (int_digits == 0) {
    return std::nullopt;
  }
  if (i != s.size()) return std::nullopt;
  return std::strtod(std::string(s).c_str(), nullptr);
}

std::string_view strip_spaces(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return s;
}

}  // namespace

SectionSplit split_sections(std::string_view raw_text) {
  SectionSplit out;
  if (raw_text.substr(0, kThinkOpen.size()) == kThinkOpen) {
    const size_t close = raw_text.find(kThinkClose, kThinkOpen.size());
    if (close != std::string_view::npos) {
      out.think = std::string(
          raw_text.substr(kThinkOpen.size(), close - kThinkOpen.size()));
      out.answer = std::string(raw_text.substr(close + kThinkClose.size()));
      return out;
    }
  }
  out.answer = std::string(raw_text);
  return out;
}

ModelOutput ModelOutput::from_raw(std::string raw_text, int token_length) {
  ModelOutput o;
  SectionSplit split = split_sections(raw_text);
  o.raw_text = std::move(raw_text);
  o.think = std::move(split.think);
  o.answer = std::move(split.answer);
  o.token_length = token_length;
  return o;
}

std::optional<ParsedScore> extract_score(std::string_view answer) {
  std::optional<ParsedScore> last;
  size_t pos = 0;
  while (true) {
    const size_t open = answer.find(kBoxedOpen, pos);
    if (open == std::string_view::npos) break;
    const size_t content_begin = open + kBoxedOpen.size();
    const size_t close = answer.find('}', content_begin);
    if (close == std::string_view::npos) break;
    std::string_view content =
        answer.substr(content_begin, close - content_begin);
    // A '{' inside the braces means nested markup; reject the occurrence.
    if (content.find('{') == std::string_view::npos) {
      const std::optional<double> v = parse_numeral(strip_spaces(content));
      if (v && *v >= 0.0 && *v <= 1.0) last = ParsedScore{*v};
    }
    pos = open + kBoxedOpen.size();
  }
  return last;
}

}  // namespace lcr::parse
