#include "doctest.h"

#include <cmath>
#include <regex>
#include <string>

#include "lcr/error.hpp"
#include "lcr/parse.hpp"
#include "lcr/reward.hpp"
#include "lcr/rng.hpp"

using lcr::parse::ModelOutput;
using lcr::parse::ParsedScore;
using lcr::reward::format_reward;
using lcr::reward::length_penalty;
using lcr::reward::LengthMode;
using lcr::reward::RewardConfig;
using lcr::reward::score_reward;
using lcr::reward::total_reward;

namespace {

std::optional<ParsedScore> score_of(double v) { return ParsedScore{v}; }

}  // namespace

TEST_CASE("score reward piecewise cases") {
  RewardConfig cfg;
  CHECK(score_reward(score_of(0.30), 0, cfg) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(score_reward(score_of(0.80), 0, cfg) == doctest::Approx(-0.6).epsilon(1e-15));
  CHECK(score_reward(score_of(0.20), 1, cfg) == doctest::Approx(-0.6).epsilon(1e-15));
  CHECK(score_reward(score_of(0.90), 1, cfg) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(score_reward(std::nullopt, 0, cfg) == -1.0);
  CHECK(score_reward(std::nullopt, 1, cfg) == -1.0);
  // Midpoint of both linear branches.
  CHECK(score_reward(score_of(0.5), 0, cfg) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(score_reward(score_of(0.5), 1, cfg) == doctest::Approx(0.0).epsilon(1e-15));
  // Thresholds are inclusive on the stated sides.
  CHECK(score_reward(score_of(0.45), 0, cfg) == 1.0);
  CHECK(score_reward(score_of(0.55), 1, cfg) == doctest::Approx(0.1).epsilon(1e-12));

  CHECK_THROWS_AS(score_reward(score_of(0.5), 2, cfg), lcr::Error);
  CHECK_THROWS_AS(score_reward(score_of(0.5), -1, cfg), lcr::Error);
}

TEST_CASE("score reward bounds and monotonicity on a grid") {
  RewardConfig cfg;
  double prev0 = 2.0, prev1 = -2.0;
  for (int i = 0; i <= 1000; ++i) {
    const double s = i / 1000.0;
    const double r0 = score_reward(score_of(s), 0, cfg);
    const double r1 = score_reward(score_of(s), 1, cfg);
    CHECK(r0 >= -1.0);
    CHECK(r0 <= 1.0);
    CHECK(r1 >= -1.0);
    CHECK(r1 <= 1.0);
    CHECK(r0 <= prev0 + 1e-12);  // non-increasing in s for label 0
    CHECK(r1 >= prev1 - 1e-12);  // non-decreasing in s for label 1
    prev0 = r0;
    prev1 = r1;
  }
}

TEST_CASE("no score in the (t1, t2] gap earns the maximum for either label") {
  RewardConfig cfg;
  for (int i = 0; i <= 200; ++i) {
    const double s = cfg.t1 + (cfg.t2 - cfg.t1) * (i + 1) / 201.0;
    CHECK(score_reward(score_of(s), 0, cfg) < 1.0);
    CHECK(score_reward(score_of(s), 1, cfg) < 1.0);
  }
}

TEST_CASE("format reward indicator sum") {
  CHECK(format_reward("<think>r</think>answer") == 2.0);
  CHECK(format_reward("answer only") == 0.0);
  CHECK(format_reward("<think>unterminated") == 0.5);
  CHECK(format_reward("x</think>y") == 0.5);
  CHECK(format_reward("<think></think>") == 2.0);
  CHECK(format_reward("pre<think>a</think>b") == 1.0);  // both tags, no pattern
}

TEST_CASE("format reward matches a regex oracle and takes only 5 values") {
  const std::regex pattern("^<think>[\\s\\S]*</think>[\\s\\S]*$");
  lcr::Rng rng(11);
  static const char* const kPieces[] = {"<think>", "</think>", "a", " ", "<",
                                        ">", "think", "/"};
  for (int it = 0; it < 5000; ++it) {
    std::string s;
    for (uint64_t i = rng.below(12); i > 0; --i) s += kPieces[rng.below(8)];
    double expected = 0.0;
    if (std::regex_search(s, pattern)) expected += 1.0;
    if (s.find("<think>") != std::string::npos) expected += 0.5;
    if (s.find("</think>") != std::string::npos) expected += 0.5;
    const double got = format_reward(s);
    CHECK(got == expected);
    const bool in_set = got == 0.0 || got == 0.5 || got == 1.0 ||
                        got == 1.5 || got == 2.0;
    CHECK(in_set);
  }
}

TEST_CASE("length penalty literal mode") {
  RewardConfig cfg;
  CHECK(length_penalty(8000, cfg) == 0.0);
  CHECK(length_penalty(0, cfg) == 0.0);
  CHECK(length_penalty(9000, cfg) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(std::abs(length_penalty(10000, cfg)) < 1e-12);
  CHECK(length_penalty(9500, cfg) ==
        doctest::Approx(-std::cos(3.141592653589793 / 4.0)).epsilon(1e-15));
  CHECK_THROWS_AS(length_penalty(10001, cfg), lcr::Error);
  CHECK_THROWS_AS(length_penalty(-1, cfg), lcr::Error);
}

TEST_CASE("length penalty monotone mode") {
  RewardConfig cfg;
  cfg.length_mode = LengthMode::kMonotone;
  CHECK(length_penalty(9000, cfg) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(length_penalty(10000, cfg) == doctest::Approx(-1.0).epsilon(1e-15));
  double prev = 1.0;
  for (int l = 9000; l <= 10000; l += 100) {
    const double p = length_penalty(l, cfg);
    CHECK(p <= prev + 1e-12);
    prev = p;
  }
}

TEST_CASE("total reward composes the three components") {
  RewardConfig cfg;
  {
    const auto o = ModelOutput::from_raw("<think>r</think>\\boxed{0.9}", 500);
    const auto b = total_reward(o, 1, cfg);
    CHECK(b.score == 1.0);
    CHECK(b.format == 2.0);
    CHECK(b.length == 0.0);
    CHECK(b.total == doctest::Approx(3.0).epsilon(1e-15));
  }
  {
    const auto o = ModelOutput::from_raw("", 0);
    const auto b = total_reward(o, 0, cfg);
    CHECK(b.total == doctest::Approx(-1.0).epsilon(1e-15));
  }
  {
    const auto o = ModelOutput::from_raw("<think>r</think>\\boxed{0.9}", 9000);
    const auto b = total_reward(o, 1, cfg);
    CHECK(b.total == doctest::Approx(2.0).epsilon(1e-15));
  }
}

TEST_CASE("alpha scales only the score component") {
  RewardConfig cfg;
  cfg.alpha = 3.5;
  const auto o = ModelOutput::from_raw("<think>r</think>\\boxed{0.9}", 120);
  const auto b = total_reward(o, 0, cfg);
  RewardConfig unit;
  const auto u = total_reward(o, 0, unit);
  CHECK(b.score == u.score);
  CHECK(b.format == u.format);
  CHECK(b.length == u.length);
  CHECK(b.total ==
        doctest::Approx(3.5 * u.score + u.format + u.length).epsilon(1e-12));
}

TEST_CASE("breakdown identity holds on random outputs") {
  lcr::Rng rng(5);
  RewardConfig cfg;
  static const char* const kPieces[] = {"<think>", "</think>", "\\boxed{0.7}",
                                        "\\boxed{0.2}", "text", " "};
  for (int it = 0; it < 2000; ++it) {
    std::string s;
    for (uint64_t i = rng.below(8); i > 0; --i) s += kPieces[rng.below(6)];
    const int len = static_cast<int>(rng.below(10001));
    const auto o = ModelOutput::from_raw(s, len);
    const int label = rng.bernoulli(0.5) ? 1 : 0;
    const auto b = total_reward(o, label, cfg);
    CHECK(std::abs(b.total - (cfg.alpha * b.score + cfg.beta * b.format +
                              b.length)) < 1e-12);
  }
}

TEST_CASE("reward config validation") {
  RewardConfig bad;
  bad.t1 = 0.6;
  bad.t2 = 0.5;
  CHECK_THROWS_AS(bad.validate(), lcr::Error);
  RewardConfig bad2;
  bad2.l_max = 10000;
  CHECK_THROWS_AS(bad2.validate(), lcr::Error);
}
