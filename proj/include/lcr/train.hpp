#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lcr/cohort.hpp"
#include "lcr/policy.hpp"
#include "lcr/reward.hpp"
#include "lcr/rng.hpp"

namespace lcr::train {

enum class TeacherMode { kPlain, kThink };

TeacherMode teacher_mode_from_string(const std::string& s);
const char* to_string(TeacherMode m);

// A scripted distillation target. Think traces carry a factor-by-factor
// analysis built from the generator's latent terms between think tags; plain
// traces are the answer sentence alone. The boxed score always lands on the
// correct side of 0.5 for the sample's label.
struct OracleTeacherTrace {
  TeacherMode mode = TeacherMode::kThink;
  std::string text;
  double target_score = 0.0;
};

OracleTeacherTrace make_teacher_trace(const cohort::LabeledSample& sample,
                                      TeacherMode mode, Rng& rng);

struct TraceExample {
  std::string text;
  int label = 0;
};

// Keeps a trace iff its boxed score parses and agrees with the label under
// the 0.5 positive-prediction rule (score > 0.5 is a positive prediction).
std::vector<TraceExample> rejection_filter(
    const std::vector<TraceExample>& traces);

struct TokenizedPair {
  std::vector<policy::TokenId> prompt;
  std::vector<policy::TokenId> target;
};

// Mean-over-samples, sum-over-target-tokens negative log-likelihood with its
// exact gradient. Loss is computed over target (response) tokens only.
std::pair<double, std::vector<double>> sft_loss_and_grad(
    const policy::PolicyParams& params, std::span<const TokenizedPair> batch);

// Group-normalized advantages: (R - mean) / population std, broadcast over
// each completion's tokens. Degenerate groups (std < 1e-8) get all zeros.
std::vector<double> group_advantages(std::span<const double> rewards);

struct ClipConfig {
  double eps_low = 0.2;
  double eps_high = 0.28;

  void validate() const;
};

struct RolloutGroup {
  std::vector<policy::TokenId> prompt;
  std::vector<policy::Completion> completions;  // sampled under the old policy
  std::vector<reward::RewardBreakdown> rewards;
  std::vector<double> advantages;
};

// Clipped token-level surrogate: per group, sum over completions and tokens
// of min(rho*A, clip(rho, 1-eps_low, 1+eps_high)*A) divided by the group's
// total output-token count, averaged over groups. The gradient treats old
// logprobs and advantages as constants and is exact in the parameters.
std::pair<double, std::vector<double>> grpo_objective_and_grad(
    const policy::PolicyParams& params, const policy::PolicyParams& old_params,
    std::span<const RolloutGroup> groups, const ClipConfig& clip);

struct PromptSample {
  std::vector<policy::TokenId> prompt_tokens;
  int label = 0;
  int horizon = 1;
};

struct StepMetrics {
  int step = 0;
  double mean_reward = 0;
  double mean_score_reward = 0;
  double mean_format_reward = 0;
  double mean_length_penalty = 0;
  double parse_failure_rate = 0;
  double mean_output_length = 0;
};

struct GrpoConfig {
  std::uint64_t seed = 1;
  int steps = 2000;
  int prompts_per_step = 8;
  int group_size = 8;
  int max_completion_len = 160;
  int inner_epochs = 1;
  double lr = 0.01;
  double momentum = 0.0;
  double grad_clip_norm = 0.0;
  double init_scale = 0.02;
  std::string optimizer = "sgd";  // or "adam"
  reward::RewardConfig reward;
  ClipConfig clip;
  policy::ModelShape shape;

  void validate() const;
};

struct GrpoResult {
  policy::PolicyParams params;
  std::vector<StepMetrics> metrics;
};

// Group-relative RL: per step, rollout G completions per prompt under the
// frozen old policy, score with the rule-based reward, normalize within each
// group, ascend the clipped objective. The old policy refreshes every step.
// Fully deterministic given config and seed; each completion draws from its own
// substream so results do not depend on rollout order.
GrpoResult grpo_train(const std::vector<PromptSample>& dataset,
                      const GrpoConfig& config,
                      const std::optional<policy::PolicyParams>& init);

struct SftStepMetrics {
  int epoch = 0;
  int step = 0;
  double loss = 0;
};

struct SftConfig {
  std::uint64_t seed = 1;
  int epochs = 4;
  int batch_size = 16;
  double lr = 0.05;
  double lr_decay = 1.0;  // per-epoch step-size multiplier
  double momentum = 0.9;
  double grad_clip_norm = 0.0;
  double init_scale = 0.02;
  std::string optimizer = "sgd";  // or "adam"
  policy::ModelShape shape;

  void validate() const;
};

struct SftResult {
  policy::PolicyParams params;
  std::vector<SftStepMetrics> metrics;
};

SftResult sft_train(const std::vector<TokenizedPair>& dataset,
                    const SftConfig& config,
                    const std::optional<policy::PolicyParams>& init);

}  // namespace lcr::train
