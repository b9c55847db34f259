#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "fd_check.hpp"
#include "lcr/cohort.hpp"
#include "lcr/error.hpp"
#include "lcr/parse.hpp"
#include "lcr/policy.hpp"
#include "lcr/reward.hpp"
#include "lcr/rng.hpp"
#include "lcr/train.hpp"

using namespace lcr;
using namespace lcr::train;
using policy::Completion;
using policy::ModelShape;
using policy::PolicyParams;
using policy::TokenId;

namespace {

std::vector<TokenId> random_tokens(Rng& rng, int vocab, int len) {
  std::vector<TokenId> out;
  for (int i = 0; i < len; ++i) {
    out.push_back(static_cast<TokenId>(rng.below(static_cast<uint64_t>(vocab))));
  }
  return out;
}

// A random GRPO instance with completions genuinely sampled from old_params
// and the evaluation point slightly displaced so ratios sit inside the trust
// region, keeping the objective smooth for finite differences.
struct GrpoInstance {
  PolicyParams params;
  PolicyParams old_params;
  std::vector<RolloutGroup> groups;
  ClipConfig clip;
};

GrpoInstance make_grpo_instance(Rng& rng, int vocab, int group_count, int g,
                                int max_len, double displacement) {
  ModelShape shape{vocab, 3, 4};
  GrpoInstance inst;
  Rng init_rng = rng.fork(1);
  inst.old_params = PolicyParams::random_init(shape, 0.4, init_rng);
  inst.params = inst.old_params;
  for (double& v : inst.params.values) {
    v += displacement * (rng.next_double() - 0.5);
  }
  for (int gi = 0; gi < group_count; ++gi) {
    RolloutGroup group;
    group.prompt = random_tokens(rng, vocab, 3);
    std::vector<double> rewards;
    for (int i = 0; i < g; ++i) {
      Rng roll = rng.fork(100 + static_cast<uint64_t>(gi) * 16 + i);
      Completion c = policy::sample_completion(inst.old_params, group.prompt,
                                               max_len, 1.0, roll);
      group.completions.push_back(std::move(c));
      rewards.push_back(std::floor(rng.next_double() * 4.0));
    }
    group.advantages = group_advantages(rewards);
    for (double r : rewards) {
      reward::RewardBreakdown b;
      b.total = r;
      group.rewards.push_back(b);
    }
    inst.groups.push_back(std::move(group));
  }
  return inst;
}

cohort::LabeledSample make_labeled_sample(int label, double nodule_term) {
  cohort::LabeledSample s;
  s.patient.patient_id = "P0";
  s.patient.demographics.age = 62;
  s.patient.smoking.cigarettes_per_day = 20;
  s.patient.smoking.years_smoked = 43;
  s.patient.smoking.pack_years = 43;
  s.patient.smoking.years_since_quit = 3;
  s.patient.family_lung_cancer_history = 1;
  cohort::ScreeningExam exam;
  exam.exam_year_index = 0;
  if (nodule_term > 0) {
    cohort::ImagingFinding f;
    f.kind = cohort::FindingKind::kNodule;
    f.location = "right upper lobe";
    f.size_mm = 11;
    f.margin = cohort::NoduleMargin::kSpiculated;
    f.change = cohort::ChangeVsPrior::kUnknown;
    exam.findings.push_back(f);
  }
  s.exams.push_back(exam);
  s.reference_year = 0;
  s.horizon_n = 2;
  s.label = label == 1 ? cohort::Label::kPositive : cohort::Label::kNegative;
  cohort::LatentTerms lt;
  lt.baseline = -4.2;
  lt.smoking = 0.67;
  lt.age = 0.31;
  lt.nodule_size = nodule_term;
  lt.nodule_margin = nodule_term > 0 ? 1.1 : 0.0;
  lt.family_history = 0.17;
  s.latent = lt;
  return s;
}

}  // namespace

TEST_CASE("group advantages match hand-computed values") {
  const std::vector<double> r = {1, 1, 0, 0, 0, 0, 0, 0};
  const auto adv = group_advantages(r);
  REQUIRE(adv.size() == 8);
  CHECK(adv[0] == doctest::Approx(1.7320508).epsilon(1e-6));
  CHECK(adv[1] == doctest::Approx(1.7320508).epsilon(1e-6));
  for (size_t i = 2; i < 8; ++i) {
    CHECK(adv[i] == doctest::Approx(-0.57735027).epsilon(1e-6));
  }

  const auto zeros = group_advantages(std::vector<double>{2, 2, 2, 2});
  for (double a : zeros) CHECK(a == 0.0);

  const auto pm = group_advantages(std::vector<double>{1, -1});
  CHECK(pm[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pm[1] == doctest::Approx(-1.0).epsilon(1e-12));

  CHECK_THROWS_AS(group_advantages(std::vector<double>{1.0}), lcr::Error);
}

TEST_CASE("advantages are mean-shift and positive-scale invariant") {
  Rng rng(31);
  for (int it = 0; it < 300; ++it) {
    const int g = 2 + static_cast<int>(rng.below(7));
    std::vector<double> r;
    for (int i = 0; i < g; ++i) r.push_back(rng.uniform(-3, 3));
    const auto base = group_advantages(r);

    const double shift = rng.uniform(-10, 10);
    std::vector<double> shifted = r;
    for (double& x : shifted) x += shift;
    const auto adv_shift = group_advantages(shifted);

    const double scale = 0.1 + 3.0 * rng.next_double();
    std::vector<double> scaled = r;
    for (double& x : scaled) x *= scale;
    const auto adv_scale = group_advantages(scaled);

    double mean = 0;
    for (double a : base) mean += a;
    CHECK(std::abs(mean) < 1e-9 * static_cast<double>(g));
    for (int i = 0; i < g; ++i) {
      CHECK(adv_shift[i] == doctest::Approx(base[i]).epsilon(1e-9));
      CHECK(adv_scale[i] == doctest::Approx(base[i]).epsilon(1e-9));
    }
  }
}

TEST_CASE("sft loss closed forms") {
  // Uniform policy over V=4: a 3-token target costs 3 ln 4.
  ModelShape shape{4, 2, 3};
  const PolicyParams uniform = PolicyParams::zeros(shape);
  TokenizedPair pair;
  pair.prompt = {0, 1};
  pair.target = {2, 3, 1};
  const auto [loss, grad] = sft_loss_and_grad(uniform, std::vector{pair});
  CHECK(loss == doctest::Approx(3.0 * std::log(4.0)).epsilon(1e-12));
  CHECK(grad.size() == uniform.values.size());

  // A policy with overwhelming bias on the constant target has ~zero loss.
  PolicyParams sharp = PolicyParams::zeros(shape);
  sharp.values[shape.bias_index(2)] = 60.0;
  TokenizedPair constant;
  constant.prompt = {0};
  constant.target = {2, 2, 2};
  const auto [loss2, grad2] = sft_loss_and_grad(sharp, std::vector{constant});
  (void)grad2;
  CHECK(loss2 < 1e-12);

  CHECK_THROWS_AS(sft_loss_and_grad(uniform, std::vector<TokenizedPair>{}),
                  lcr::Error);
}

TEST_CASE("sft gradient matches central finite differences") {
  Rng rng(71);
  for (int trial = 0; trial < 8; ++trial) {
    const int vocab = 6 + static_cast<int>(rng.below(10));
    ModelShape shape{vocab, 3, 4};
    Rng init = rng.fork(static_cast<uint64_t>(trial));
    const PolicyParams p = PolicyParams::random_init(shape, 0.5, init);
    std::vector<TokenizedPair> batch;
    const int n = 1 + static_cast<int>(rng.below(3));
    for (int i = 0; i < n; ++i) {
      TokenizedPair pair;
      pair.prompt = random_tokens(rng, vocab, 2 + static_cast<int>(rng.below(3)));
      pair.target =
          random_tokens(rng, vocab, 1 + static_cast<int>(rng.below(11)));
      batch.push_back(std::move(pair));
    }
    const auto [loss, grad] = sft_loss_and_grad(p, batch);
    (void)loss;
    const double err = lcr_test::gradient_rel_error(
        [&](const PolicyParams& q) { return sft_loss_and_grad(q, batch).first; },
        p, grad);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("grpo objective: ratio-one identity") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    Rng inst_rng = rng.fork(static_cast<uint64_t>(trial));
    GrpoInstance inst = make_grpo_instance(inst_rng, 8, 2, 4, 6, 0.0);

    const auto [obj, grad] = grpo_objective_and_grad(
        inst.params, inst.old_params, inst.groups, inst.clip);

    // Objective value: sum of advantages weighted by token counts per group.
    double expected_obj = 0.0;
    for (const auto& g : inst.groups) {
      double total_tokens = 0, acc = 0;
      for (size_t i = 0; i < g.completions.size(); ++i) {
        const double len =
            static_cast<double>(g.completions[i].output_tokens.size());
        acc += len * g.advantages[i];
        total_tokens += len;
      }
      expected_obj += acc / total_tokens;
    }
    expected_obj /= static_cast<double>(inst.groups.size());
    CHECK(obj == doctest::Approx(expected_obj).epsilon(1e-9));

    // Gradient: the vanilla policy-gradient estimator, computed directly.
    std::vector<double> vanilla(inst.params.values.size(), 0.0);
    for (const auto& g : inst.groups) {
      double total_tokens = 0;
      for (const auto& c : g.completions) {
        total_tokens += static_cast<double>(c.output_tokens.size());
      }
      for (size_t i = 0; i < g.completions.size(); ++i) {
        const auto& c = g.completions[i];
        for (size_t t = 0; t < c.output_tokens.size(); ++t) {
          const auto ctx = policy::context_window(inst.params, g.prompt,
                                                  c.output_tokens, t);
          policy::accumulate_logprob_grad(
              inst.params, ctx, c.output_tokens[t],
              g.advantages[i] / total_tokens /
                  static_cast<double>(inst.groups.size()),
              vanilla);
        }
      }
    }
    for (size_t i = 0; i < vanilla.size(); ++i) {
      CHECK(std::abs(grad[i] - vanilla[i]) < 1e-9);
    }
  }
}

TEST_CASE("grpo objective is invariant to reward shifts and scales") {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    Rng inst_rng = rng.fork(static_cast<uint64_t>(trial));
    GrpoInstance inst = make_grpo_instance(inst_rng, 8, 2, 4, 5, 0.05);
    const auto [obj, grad] = grpo_objective_and_grad(
        inst.params, inst.old_params, inst.groups, inst.clip);

    // Rebuild advantages from shifted and scaled raw rewards.
    GrpoInstance shifted = inst;
    for (auto& g : shifted.groups) {
      std::vector<double> r;
      for (const auto& b : g.rewards) r.push_back(b.total + 7.25);
      g.advantages = group_advantages(r);
    }
    const auto [obj2, grad2] = grpo_objective_and_grad(
        shifted.params, shifted.old_params, shifted.groups, shifted.clip);
    CHECK(obj2 == doctest::Approx(obj).epsilon(1e-9));
    for (size_t i = 0; i < grad.size(); ++i) {
      CHECK(std::abs(grad[i] - grad2[i]) < 1e-9);
    }

    GrpoInstance scaled = inst;
    for (auto& g : scaled.groups) {
      std::vector<double> r;
      for (const auto& b : g.rewards) r.push_back(b.total * 3.5);
      g.advantages = group_advantages(r);
    }
    const auto [obj3, grad3] = grpo_objective_and_grad(
        scaled.params, scaled.old_params, scaled.groups, scaled.clip);
    CHECK(obj3 == doctest::Approx(obj).epsilon(1e-9));
    for (size_t i = 0; i < grad.size(); ++i) {
      CHECK(std::abs(grad[i] - grad3[i]) < 1e-9);
    }
  }
}

TEST_CASE("grpo gradient matches central finite differences") {
  Rng rng(17);
  for (int trial = 0; trial < 6; ++trial) {
    Rng inst_rng = rng.fork(static_cast<uint64_t>(trial));
    const int g = trial % 2 == 0 ? 2 : 8;
    GrpoInstance inst = make_grpo_instance(inst_rng, 8, 2, g, 8, 0.02);
    const auto [obj, grad] = grpo_objective_and_grad(
        inst.params, inst.old_params, inst.groups, inst.clip);
    (void)obj;
    const double err = lcr_test::gradient_rel_error(
        [&](const PolicyParams& q) {
          return grpo_objective_and_grad(q, inst.old_params, inst.groups,
                                         inst.clip)
              .first;
        },
        inst.params, grad);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("clip saturation silences positive-advantage tokens") {
  Rng rng(23);
  GrpoInstance inst = make_grpo_instance(rng, 8, 1, 2, 5, 0.0);
  RolloutGroup& group = inst.groups[0];
  // Force completion 0 to look much more likely now than at sampling time:
  // rho = exp(logp_new - logp_old) = e > 1 + eps_high.
  for (double& lp : group.completions[0].logprobs) lp -= 1.0;
  std::vector<double> rewards = {2.0, 0.0};
  group.advantages = group_advantages(rewards);
  REQUIRE(group.advantages[0] > 0);

  const auto [obj, grad] = grpo_objective_and_grad(inst.params, inst.old_params,
                                                   inst.groups, inst.clip);
  (void)obj;
  // Only completion 1 (ratio 1) can contribute gradient.
  double total_tokens = 0;
  for (const auto& c : group.completions) {
    total_tokens += static_cast<double>(c.output_tokens.size());
  }
  std::vector<double> expected(inst.params.values.size(), 0.0);
  const auto& c1 = group.completions[1];
  for (size_t t = 0; t < c1.output_tokens.size(); ++t) {
    const auto ctx =
        policy::context_window(inst.params, group.prompt, c1.output_tokens, t);
    policy::accumulate_logprob_grad(inst.params, ctx, c1.output_tokens[t],
                                    group.advantages[1] / total_tokens,
                                    expected);
  }
  for (size_t i = 0; i < grad.size(); ++i) {
    CHECK(std::abs(grad[i] - expected[i]) < 1e-9);
  }
}

TEST_CASE("symmetric clipping reduces to an independent reference surrogate") {
  // Reference: standard PPO clipped surrogate with eps_low = eps_high = eps,
  // coded from scratch on 5-token toys.
  Rng rng(29);
  for (int trial = 0; trial < 40; ++trial) {
    Rng inst_rng = rng.fork(static_cast<uint64_t>(trial));
    GrpoInstance inst = make_grpo_instance(inst_rng, 6, 1, 4, 5, 0.4);
    inst.clip.eps_low = inst.clip.eps_high = 0.2;
    const auto [obj, grad] = grpo_objective_and_grad(
        inst.params, inst.old_params, inst.groups, inst.clip);
    (void)grad;

    double reference = 0.0;
    const auto& group = inst.groups[0];
    double total_tokens = 0.0;
    for (const auto& c : group.completions) {
      total_tokens += static_cast<double>(c.output_tokens.size());
    }
    for (size_t i = 0; i < group.completions.size(); ++i) {
      const auto& c = group.completions[i];
      const auto logp =
          policy::sequence_logprobs(inst.params, group.prompt, c.output_tokens);
      for (size_t t = 0; t < c.output_tokens.size(); ++t) {
        const double ratio = std::exp(logp[t] - c.logprobs[t]);
        const double a = group.advantages[i];
        const double clipped =
            std::min(ratio, 1.2) > 0.8 ? std::clamp(ratio, 0.8, 1.2) : 0.8;
        reference += std::min(ratio * a, clipped * a) / total_tokens;
      }
    }
    CHECK(obj == doctest::Approx(reference).epsilon(1e-9));
  }
}

TEST_CASE("clip config validation") {
  ClipConfig bad;
  bad.eps_low = 0.0;
  CHECK_THROWS_AS(bad.validate(), lcr::Error);
  ClipConfig bad2;
  bad2.eps_low = 0.3;
  bad2.eps_high = 0.2;
  CHECK_THROWS_AS(bad2.validate(), lcr::Error);
}

TEST_CASE("teacher traces are parseable, labeled correctly and deterministic") {
  Rng rng(3);
  const auto pos = make_labeled_sample(1, 1.4);
  const auto neg = make_labeled_sample(0, 0.0);

  Rng r1 = rng.fork(1), r2 = rng.fork(1);
  const auto think1 = make_teacher_trace(pos, TeacherMode::kThink, r1);
  const auto think2 = make_teacher_trace(pos, TeacherMode::kThink, r2);
  CHECK(think1.text == think2.text);

  const auto parsed = parse::extract_score(think1.text);
  REQUIRE(parsed.has_value());
  CHECK(parsed->value == think1.target_score);
  CHECK(parsed->value > 0.5);
  CHECK(reward::format_reward(think1.text) == 2.0);
  CHECK(think1.text.find("nodule") != std::string::npos);
  CHECK(think1.text.find("smoking") != std::string::npos);

  Rng r3 = rng.fork(2);
  const auto neg_trace = make_teacher_trace(neg, TeacherMode::kThink, r3);
  const auto neg_parsed = parse::extract_score(neg_trace.text);
  REQUIRE(neg_parsed.has_value());
  CHECK(neg_parsed->value <= 0.5);

  Rng r4 = rng.fork(3);
  const auto plain = make_teacher_trace(pos, TeacherMode::kPlain, r4);
  CHECK(reward::format_reward(plain.text) == 0.0);
  CHECK(parse::extract_score(plain.text).has_value());

  auto excluded = pos;
  excluded.label = cohort::Label::kExcluded;
  Rng r5 = rng.fork(4);
  CHECK_THROWS_AS(make_teacher_trace(excluded, TeacherMode::kThink, r5),
                  lcr::Error);
}

TEST_CASE("rejection filter keeps exactly the agreeing traces") {
  const std::vector<TraceExample> traces = {
      {"\\boxed{0.8}", 1},   // kept: positive prediction, positive label
      {"\\boxed{0.8}", 0},   // dropped
      {"no score", 1},       // dropped: unparseable
      {"\\boxed{0.5}", 1},   // dropped: 0.5 is not > 0.5
      {"\\boxed{0.5}", 0},   // kept
      {"\\boxed{0.2}", 0},   // kept
  };
  const auto kept = rejection_filter(traces);
  REQUIRE(kept.size() == 3);
  CHECK(kept[0].text == "\\boxed{0.8}");
  CHECK(kept[1].text == "\\boxed{0.5}");
  CHECK(kept[2].text == "\\boxed{0.2}");

  // Brute-force re-check of the predicate on fuzzed traces.
  Rng rng(5);
  std::vector<TraceExample> fuzz;
  for (int i = 0; i < 500; ++i) {
    const double s = rng.next_double() * 1.2;
    char buf[48];
    std::snprintf(buf, sizeof buf, "score \\boxed{%.2f}", s);
    fuzz.push_back({rng.bernoulli(0.2) ? "garbage" : buf,
                    rng.bernoulli(0.5) ? 1 : 0});
  }
  const auto kept_fuzz = rejection_filter(fuzz);
  size_t expected = 0;
  for (const auto& t : fuzz) {
    const auto p = parse::extract_score(t.text);
    if (p && ((p->value > 0.5 && t.label == 1) ||
              (p->value <= 0.5 && t.label == 0))) {
      ++expected;
    }
  }
  CHECK(kept_fuzz.size() == expected);
}

TEST_CASE("sft memorizes a 10-sample set") {
  const auto& vocab = policy::Vocabulary::standard();
  std::vector<TokenizedPair> data;
  for (int i = 0; i < 10; ++i) {
    TokenizedPair pair;
    pair.prompt = vocab.encode("case " + std::to_string(i) + ":\n");
    char buf[32];
    std::snprintf(buf, sizeof buf, "\\boxed{0.%d}", i);
    pair.target = vocab.encode(buf);
    pair.target.push_back(vocab.eos());
    data.push_back(std::move(pair));
  }
  SftConfig cfg;
  cfg.seed = 5;
  cfg.epochs = 800;
  cfg.batch_size = 10;  // full batch: loss per step is the epoch loss
  cfg.lr = 0.12;
  cfg.momentum = 0.0;
  cfg.grad_clip_norm = 5.0;
  cfg.init_scale = 0.3;
  cfg.shape = ModelShape{vocab.size(), 12, 12};
  const SftResult result = sft_train(data, cfg, std::nullopt);

  REQUIRE_FALSE(result.metrics.empty());
  CHECK(result.metrics.back().loss < 0.01);
  for (size_t i = 1; i < result.metrics.size(); ++i) {
    CHECK(result.metrics[i].loss <= result.metrics[i - 1].loss);
  }

  // The trained model reproduces its targets greedily.
  int correct = 0;
  for (int i = 0; i < 10; ++i) {
    Rng unused(0);
    const Completion c = policy::sample_completion(
        result.params, data[static_cast<size_t>(i)].prompt, 16, 0.0, unused);
    std::vector<TokenId> want = data[static_cast<size_t>(i)].target;
    if (c.output_tokens == want) ++correct;
  }
  CHECK(correct >= 9);
}

TEST_CASE("grpo_train is seed-deterministic and validates configs") {
  const auto& vocab = policy::Vocabulary::standard();
  std::vector<PromptSample> data;
  for (int i = 0; i < 4; ++i) {
    PromptSample p;
    p.prompt_tokens = vocab.encode("patient " + std::to_string(i) + "\n");
    p.label = i % 2;
    data.push_back(std::move(p));
  }
  GrpoConfig cfg;
  cfg.seed = 77;
  cfg.steps = 3;
  cfg.prompts_per_step = 2;
  cfg.group_size = 2;
  cfg.max_completion_len = 8;
  cfg.shape = ModelShape{vocab.size(), 4, 8};

  const GrpoResult a = grpo_train(data, cfg, std::nullopt);
  const GrpoResult b = grpo_train(data, cfg, std::nullopt);
  REQUIRE(a.metrics.size() == b.metrics.size());
  for (size_t i = 0; i < a.metrics.size(); ++i) {
    CHECK(a.metrics[i].mean_reward == b.metrics[i].mean_reward);
    CHECK(a.metrics[i].parse_failure_rate == b.metrics[i].parse_failure_rate);
    CHECK(a.metrics[i].mean_output_length == b.metrics[i].mean_output_length);
  }
  CHECK(a.params.values == b.params.values);

  CHECK_THROWS_AS(grpo_train({}, cfg, std::nullopt), lcr::Error);
  GrpoConfig bad = cfg;
  bad.group_size = 1;
  CHECK_THROWS_AS(grpo_train(data, bad, std::nullopt), lcr::Error);
}
