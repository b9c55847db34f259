#include "lcr/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lcr/error.hpp"
#include "lcr/parse.hpp"

namespace lcr::train {

using policy::PolicyParams;
using policy::TokenId;

TeacherMode teacher_mode_from_string(const std::string& s) {
  if (s == "plain") return TeacherMode::kPlain;
  if (s == "think") return TeacherMode::kThink;
  throw_config("unknown teacher mode: " + s);
}

const char* to_string(TeacherMode m) {
  return m == TeacherMode::kPlain ? "plain" : "think";
}

namespace {

std::string fmt(const char* spec, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

// Two-decimal score, parsed back so it compares equal to what the score
// parser extracts from the rendered trace.
double quantize_score(double s) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", s);
  return std::strtod(buf, nullptr);
}

std::string answer_sentence(double score) {
  return "The estimated probability is \\boxed{" + fmt("%.2f", score) + "}";
}

}  // namespace

OracleTeacherTrace make_teacher_trace(const cohort::LabeledSample& sample,
                                      TeacherMode mode, Rng& rng) {
  if (sample.label != cohort::Label::kNegative &&
      sample.label != cohort::Label::kPositive) {
    throw_data("teacher traces require a binary label");
  }
  if (!sample.latent) {
    throw_data("teacher traces require the generator's latent terms");
  }
  const cohort::LatentTerms& lt = *sample.latent;
  const int label = sample.label == cohort::Label::kPositive ? 1 : 0;

  const double p1 = lt.probability();
  const double pn = 1.0 - std::pow(1.0 - p1, sample.horizon_n);
  // Log-scale spread keeps the printed digits informative across the whole
  // cohort instead of piling up near the low-risk mode.
  const double spread =
      std::clamp(std::log(pn / 0.002) / std::log(0.5 / 0.002), 0.0, 1.0);
  double s = label == 1 ? 0.52 + 0.46 * spread : 0.02 + 0.44 * spread;
  s = quantize_score(s);

  OracleTeacherTrace trace;
  trace.mode = mode;
  trace.target_score = s;

  if (mode == TeacherMode::kPlain) {
    trace.text = answer_sentence(s);
    return trace;
  }

  // The think section carries content only in fixed-width numeric slots, so
  // any digit the model emits leaves the surrounding template intact. The
  // wording avoids substrings of the rendered input, which keeps greedy
  // decoding from sliding into an input-side continuation. Both openers have
  // the same length so downstream offsets stay aligned.
  const char* opener = rng.bernoulli(0.5) ? "factor check:" : "factor audit:";

  std::string think;
  think += "preliminary figure " + fmt("%.2f", s) + ". ";
  think += opener;
  think += " nodule " + fmt("%+.2f", lt.nodule_size) + "; margin " +
           fmt("%+.2f", lt.nodule_margin) + "; growth " +
           fmt("%+.2f", lt.nodule_growth) + "; smoking " +
           fmt("%+.2f", lt.smoking) + "; age " + fmt("%+.2f", lt.age) +
           "; emphysema " + fmt("%+.2f", lt.emphysema) + "; family " +
           fmt("%+.2f", lt.family_history) + "; baseline " +
           fmt("%+.2f", lt.baseline) + ".";
  think += " combined logit " + fmt("%+.2f", lt.logit()) +
           " gives one-year probability " + fmt("%.2f", p1) +
           "; over the stated horizon the estimate is " + fmt("%.2f", s) +
           ".";
  trace.text = "<think>" + think + "</think>" + answer_sentence(s);
  return trace;
}

std::vector<TraceExample> rejection_filter(
    const std::vector<TraceExample>& traces) {
  std::vector<TraceExample> kept;
  for (const auto& t : traces) {
    const auto parsed = parse::extract_score(t.text);
    if (!parsed) continue;
    const bool positive_prediction = parsed->value > 0.5;
    if ((positive_prediction && t.label == 1) ||
        (!positive_prediction && t.label == 0)) {
      kept.push_back(t);
    }
  }
  return kept;
}

std::pair<double, std::vector<double>> sft_loss_and_grad(
    const PolicyParams& params, std::span<const TokenizedPair> batch) {
  if (batch.empty()) throw_data("sft batch must be non-empty");
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  std::vector<double> grad(params.values.size(), 0.0);
  policy::TokenWorkspace ws;
  for (const auto& pair : batch) {
    if (pair.target.empty()) throw_data("sft target must be non-empty");
    for (size_t t = 0; t < pair.target.size(); ++t) {
      policy::context_window_into(params, pair.prompt, pair.target, t,
                                  ws.context);
      const double logp =
          policy::forward_token(params, ws.context, pair.target[t], ws);
      loss -= inv_n * logp;
      policy::backward_token(params, ws.context, pair.target[t], ws, -inv_n,
                             grad);
    }
  }
  return {loss, std::move(grad)};
}

std::vector<double> group_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) throw_data("advantage groups need G >= 2");
  const double n = static_cast<double>(rewards.size());
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double std_dev = std::sqrt(var / n);  // population std over the group
  std::vector<double> adv(rewards.size(), 0.0);
  if (std_dev < 1e-8) return adv;
  for (size_t i = 0; i < rewards.size(); ++i) {
    adv[i] = (rewards[i] - mean) / std_dev;
  }
  return adv;
}

void ClipConfig::validate() const {
  if (!(0.0 < eps_low && eps_low <= eps_high && eps_high < 1.0)) {
    throw_config("require 0 < eps_low <= eps_high < 1");
  }
}

std::pair<double, std::vector<double>> grpo_objective_and_grad(
    const PolicyParams& params, const PolicyParams& old_params,
    std::span<const RolloutGroup> groups, const ClipConfig& clip) {
  clip.validate();
  if (old_params.values.size() != params.values.size()) {
    throw_data("old and new parameters have different shapes");
  }
  double objective = 0.0;
  std::vector<double> grad(params.values.size(), 0.0);
  int counted_groups = 0;

  for (const auto& group : groups) {
    if (group.completions.size() != group.advantages.size()) {
      throw_internal("group advantages out of sync with completions");
    }
    long long total_tokens = 0;
    for (const auto& c : group.completions) {
      if (c.output_tokens.size() != c.logprobs.size()) {
        throw_internal("completion logprobs out of sync with tokens");
      }
      total_tokens += static_cast<long long>(c.output_tokens.size());
    }
    if (total_tokens == 0) continue;
    ++counted_groups;
    const double inv_tokens = 1.0 / static_cast<double>(total_tokens);

    double group_obj = 0.0;
    policy::TokenWorkspace ws;
    for (size_t i = 0; i < group.completions.size(); ++i) {
      const auto& c = group.completions[i];
      const double adv = group.advantages[i];
      for (size_t t = 0; t < c.output_tokens.size(); ++t) {
        policy::context_window_into(params, group.prompt, c.output_tokens, t,
                                    ws.context);
        const double logp_new =
            policy::forward_token(params, ws.context, c.output_tokens[t], ws);
        const double rho = std::exp(logp_new - c.logprobs[t]);
        const double clipped_rho =
            std::clamp(rho, 1.0 - clip.eps_low, 1.0 + clip.eps_high);
        const double unclipped = rho * adv;
        const double clipped = clipped_rho * adv;
        group_obj += std::min(unclipped, clipped);
        // min() follows the unclipped branch whenever it is not above the
        // clipped one; inside the trust region both branches coincide.
        if (unclipped <= clipped) {
          policy::backward_token(params, ws.context, c.output_tokens[t], ws,
                                 adv * rho * inv_tokens, grad);
        }
      }
    }
    objective += group_obj * inv_tokens;
  }

  if (counted_groups > 0) {
    const double inv_groups = 1.0 / static_cast<double>(counted_groups);
    objective *= inv_groups;
    for (double& g : grad) g *= inv_groups;
  }
  return {objective, std::move(grad)};
}


namespace {

policy::Optimizer::Kind optimizer_kind(const std::string& name) {
  if (name == "sgd") return policy::Optimizer::Kind::kSgd;
  if (name == "adam") return policy::Optimizer::Kind::kAdam;
  throw_config("optimizer must be sgd or adam");
}

}  // namespace

void GrpoConfig::validate() const {
  if (steps <= 0) throw_config("grpo steps must be positive");
  if (prompts_per_step <= 0) throw_config("prompts_per_step must be positive");
  if (group_size < 2) throw_config("group_size must be >= 2");
  if (max_completion_len <= 0 || max_completion_len > reward.l_completion) {
    throw_config("max_completion_len must be in (0, l_completion]");
  }
  if (inner_epochs <= 0) throw_config("inner_epochs must be positive");
  if (!(lr > 0)) throw_config("lr must be positive");
  optimizer_kind(optimizer);
  reward.validate();
  clip.validate();
}

GrpoResult grpo_train(const std::vector<PromptSample>& dataset,
                      const GrpoConfig& config,
                      const std::optional<PolicyParams>& init) {
  config.validate();
  if (dataset.empty()) throw_config("grpo training set is empty");

  const Rng base(config.seed);
  Rng init_rng = base.fork(0xA11CE);
  PolicyParams params =
      init ? *init
           : PolicyParams::random_init(config.shape, config.init_scale,
                                       init_rng);

  policy::Optimizer opt;
  opt.kind = optimizer_kind(config.optimizer);
  opt.step_size = config.lr;
  opt.momentum = config.momentum;
  opt.clip_norm = config.grad_clip_norm;

  GrpoResult result{params, {}};
  result.metrics.reserve(static_cast<size_t>(config.steps));

  for (int step = 0; step < config.steps; ++step) {
    const PolicyParams old_params = result.params;
    Rng select_rng = base.fork(0x5E1EC7'000000ULL + static_cast<std::uint64_t>(step));

    std::vector<RolloutGroup> groups;
    groups.reserve(static_cast<size_t>(config.prompts_per_step));

    StepMetrics m;
    m.step = step;
    int completions_count = 0;
    int parse_failures = 0;

    for (int pi = 0; pi < config.prompts_per_step; ++pi) {
      const PromptSample& prompt_sample =
          dataset[select_rng.below(dataset.size())];
      RolloutGroup group;
      group.prompt = prompt_sample.prompt_tokens;

      std::vector<double> totals;
      for (int gi = 0; gi < config.group_size; ++gi) {
        const std::uint64_t stream =
            (static_cast<std::uint64_t>(step) *
                 static_cast<std::uint64_t>(config.prompts_per_step) +
             static_cast<std::uint64_t>(pi)) *
                static_cast<std::uint64_t>(config.group_size) +
            static_cast<std::uint64_t>(gi) + 0x0107'0000'0000ULL;
        Rng rollout_rng = base.fork(stream);
        policy::Completion c = policy::sample_completion(
            old_params, group.prompt, config.max_completion_len, 1.0,
            rollout_rng);

        const std::string text =
            policy::Vocabulary::standard().decode(c.output_tokens);
        const parse::ModelOutput output = parse::ModelOutput::from_raw(
            text, static_cast<int>(c.output_tokens.size()));
        const reward::RewardBreakdown rb =
            reward::total_reward(output, prompt_sample.label, config.reward);

        if (!parse::extract_score(output.answer)) ++parse_failures;
        m.mean_reward += rb.total;
        m.mean_score_reward += rb.score;
        m.mean_format_reward += rb.format;
        m.mean_length_penalty += rb.length;
        m.mean_output_length += static_cast<double>(c.output_tokens.size());
        ++completions_count;

        totals.push_back(rb.total);
        group.rewards.push_back(rb);
        group.completions.push_back(std::move(c));
      }
      group.advantages = group_advantages(totals);
      groups.push_back(std::move(group));
    }

    for (int e = 0; e < config.inner_epochs; ++e) {
      auto [objective, grad] =
          grpo_objective_and_grad(result.params, old_params, groups,
                                  config.clip);
      (void)objective;
      for (double& g : grad) g = -g;  // ascend the objective
      result.params = opt.apply_gradient(result.params, grad);
    }

    const double inv = 1.0 / static_cast<double>(completions_count);
    m.mean_reward *= inv;
    m.mean_score_reward *= inv;
    m.mean_format_reward *= inv;
    m.mean_length_penalty *= inv;
    m.mean_output_length *= inv;
    m.parse_failure_rate =
        static_cast<double>(parse_failures) * inv;
    result.metrics.push_back(m);
  }
  return result;
}

void SftConfig::validate() const {
  if (epochs <= 0) throw_config("sft epochs must be positive");
  if (batch_size <= 0) throw_config("sft batch_size must be positive");
  if (!(lr > 0)) throw_config("sft lr must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) {
    throw_config("sft lr_decay must be in (0, 1]");
  }
  optimizer_kind(optimizer);
}

SftResult sft_train(const std::vector<TokenizedPair>& dataset,
                    const SftConfig& config,
                    const std::optional<PolicyParams>& init) {
  config.validate();
  if (dataset.empty()) throw_config("sft training set is empty");

  const Rng base(config.seed);
  Rng init_rng = base.fork(0xA11CE);
  PolicyParams params =
      init ? *init
           : PolicyParams::random_init(config.shape, config.init_scale,
                                       init_rng);

  policy::Optimizer opt;
  opt.kind = optimizer_kind(config.optimizer);
  opt.step_size = config.lr;
  opt.momentum = config.momentum;
  opt.clip_norm = config.grad_clip_norm;

  SftResult result{std::move(params), {}};

  std::vector<size_t> order(dataset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  int global_step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    opt.step_size = config.lr * std::pow(config.lr_decay, epoch);
    Rng epoch_rng = base.fork(0xE60C'0000ULL + static_cast<std::uint64_t>(epoch));
    for (size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[epoch_rng.below(i)]);
    }
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(config.batch_size)) {
      const size_t end =
          std::min(order.size(), start + static_cast<size_t>(config.batch_size));
      std::vector<TokenizedPair> batch;
      batch.reserve(end - start);
      for (size_t i = start; i < end; ++i) batch.push_back(dataset[order[i]]);
      auto [loss, grad] = sft_loss_and_grad(result.params, batch);
      result.params = opt.apply_gradient(result.params, grad);
      result.metrics.push_back({epoch, global_step, loss});
      ++global_step;
    }
  }
  return result;
}

}  // namespace lcr::train
