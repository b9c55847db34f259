#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "lcr/error.hpp"
#include "lcr/policy.hpp"
#include "lcr/rng.hpp"

using namespace lcr::policy;

TEST_CASE("vocabulary round-trips template and teacher text") {
  const Vocabulary& v = Vocabulary::standard();
  CHECK(v.size() <= 256);
  const std::vector<std::string> probes = {
      "<think>risk factors: nodule 9 mm spiculated growing.</think>"
      "the estimated probability is \\boxed{0.48}",
      "Patient record for screening exam T1 (first-year scan).\n"
      "Demographics: age 64 years; height 176 cm.",
      "pack_years: 48.75\nfindings_T0: nodule | 6 mm | smooth\n",
      "What are the chances of the patient developing lung cancer within "
      "four years post-second-year CT scan?",
      "", "0.123456", "{}[]<>/\\",
  };
  for (const auto& s : probes) {
    const auto tokens = v.encode(s);
    CHECK(v.decode(tokens) == s);
  }
  // Multi-character literals become single tokens.
  CHECK(v.encode("<think>").size() == 1);
  CHECK(v.encode("</think>").size() == 1);
  CHECK(v.encode("\\boxed{").size() == 1);
  CHECK(v.encode("<thin").size() == 5);
  CHECK_THROWS_AS(v.encode("\t"), lcr::Error);
}

TEST_CASE("zero parameters give the uniform distribution") {
  ModelShape shape{Vocabulary::standard().size(), 8, 8};
  const PolicyParams p = PolicyParams::zeros(shape);
  std::vector<TokenId> ctx(8, 1);
  const auto dist = next_token_dist(p, ctx);
  double sum = 0;
  for (double d : dist) {
    CHECK(d == doctest::Approx(1.0 / shape.vocab_size).epsilon(1e-12));
    sum += d;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("softmax closed form and shift invariance") {
  // Two-token model: bias (0, ln 2) must give (1/3, 2/3).
  ModelShape shape{2, 1, 1};
  PolicyParams p = PolicyParams::zeros(shape);
  p.values[shape.bias_index(1)] = std::log(2.0);
  std::vector<TokenId> ctx(1, 0);
  const auto dist = next_token_dist(p, ctx);
  CHECK(dist[0] == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(dist[1] == doctest::Approx(2.0 / 3).epsilon(1e-12));

  // Shifting every bias by a constant leaves the distribution unchanged.
  PolicyParams q = p;
  for (TokenId t = 0; t < shape.vocab_size; ++t) {
    q.values[shape.bias_index(t)] += 5.0;
  }
  const auto dist_q = next_token_dist(q, ctx);
  for (size_t i = 0; i < dist.size(); ++i) {
    CHECK(dist_q[i] == doctest::Approx(dist[i]).epsilon(1e-12));
  }
}

TEST_CASE("invalid token ids are rejected") {
  ModelShape shape{16, 4, 4};
  const PolicyParams p = PolicyParams::zeros(shape);
  std::vector<TokenId> ctx(4, 99);
  CHECK_THROWS_AS(next_token_dist(p, ctx), lcr::Error);
  std::vector<TokenId> short_ctx(3, 0);
  CHECK_THROWS_AS(next_token_dist(p, short_ctx), lcr::Error);
}

TEST_CASE("greedy sampling is deterministic and self-consistent") {
  ModelShape shape{24, 6, 8};
  lcr::Rng rng(5);
  const PolicyParams p = PolicyParams::random_init(shape, 0.3, rng);
  const std::vector<TokenId> prompt = {2, 3, 4, 5};
  lcr::Rng r1(1), r2(2);
  const Completion a = sample_completion(p, prompt, 20, 0.0, r1);
  const Completion b = sample_completion(p, prompt, 20, 0.0, r2);
  CHECK(a.output_tokens == b.output_tokens);
  CHECK(a.logprobs == b.logprobs);

  // Rescoring a self-sample reproduces its recorded logprobs bit-exactly.
  lcr::Rng r3(9);
  const Completion c = sample_completion(p, prompt, 30, 1.0, r3);
  const auto rescored = sequence_logprobs(p, prompt, c.output_tokens);
  REQUIRE(rescored.size() == c.logprobs.size());
  for (size_t i = 0; i < rescored.size(); ++i) {
    CHECK(rescored[i] == c.logprobs[i]);  // bit-exact
    CHECK(rescored[i] <= 0.0);
  }
  double total = 0;
  for (double lp : c.logprobs) total += lp;
  CHECK(std::exp(total) <= 1.0);
}

TEST_CASE("uniform policy scores every token at -ln V") {
  ModelShape shape{4, 2, 3};
  const PolicyParams p = PolicyParams::zeros(shape);
  const std::vector<TokenId> prompt = {1, 2};
  const std::vector<TokenId> output = {3, 2, 1};
  const auto lps = sequence_logprobs(p, prompt, output);
  REQUIRE(lps.size() == 3);
  for (double lp : lps) {
    CHECK(lp == doctest::Approx(-std::log(4.0)).epsilon(1e-12));
  }
}

TEST_CASE("scoring under different parameters stays finite and bounded") {
  ModelShape shape{24, 6, 8};
  lcr::Rng rng(15);
  const PolicyParams gen = PolicyParams::random_init(shape, 0.3, rng);
  const PolicyParams other = PolicyParams::random_init(shape, 0.3, rng);
  lcr::Rng r(3);
  const std::vector<TokenId> prompt = {2, 3};
  const Completion c = sample_completion(gen, prompt, 25, 1.0, r);
  const auto lps = sequence_logprobs(other, prompt, c.output_tokens);
  for (double lp : lps) {
    CHECK(std::isfinite(lp));
    CHECK(lp <= 0.0);
  }
}

TEST_CASE("single-step sampling frequencies match the distribution") {
  ModelShape shape{12, 4, 4};
  lcr::Rng rng(21);
  const PolicyParams p = PolicyParams::random_init(shape, 0.5, rng);
  const std::vector<TokenId> prompt = {1, 2, 3, 4};
  const std::vector<TokenId> ctx = context_window(p, prompt, {}, 0);
  const auto dist = next_token_dist(p, ctx);

  const int kDraws = 100000;
  std::vector<int> counts(static_cast<size_t>(shape.vocab_size), 0);
  lcr::Rng sample_rng(1000);
  for (int i = 0; i < kDraws; ++i) {
    lcr::Rng draw_rng = sample_rng.fork(static_cast<uint64_t>(i));
    const Completion c = sample_completion(p, prompt, 1, 1.0, draw_rng);
    REQUIRE(c.output_tokens.size() == 1);
    counts[static_cast<size_t>(c.output_tokens[0])]++;
  }
  for (TokenId t = 0; t < shape.vocab_size; ++t) {
    const double expected = dist[static_cast<size_t>(t)] * kDraws;
    const double sigma =
        std::sqrt(dist[static_cast<size_t>(t)] *
                  (1 - dist[static_cast<size_t>(t)]) * kDraws);
    CHECK(std::abs(counts[static_cast<size_t>(t)] - expected) <=
          3.0 * sigma + 1.0);
  }
}

TEST_CASE("optimizer fixed points and closed-form step") {
  ModelShape shape{4, 2, 2};
  lcr::Rng rng(3);
  const PolicyParams p = PolicyParams::random_init(shape, 0.1, rng);

  Optimizer opt;
  opt.step_size = 0.5;
  std::vector<double> zero(p.values.size(), 0.0);
  const PolicyParams same = opt.apply_gradient(p, zero);
  CHECK(same.values == p.values);

  Optimizer opt0;
  opt0.step_size = 0.0;
  std::vector<double> g(p.values.size(), 1.0);
  const PolicyParams same2 = opt0.apply_gradient(p, g);
  CHECK(same2.values == p.values);

  // One descent step on f(x) = 0.5*||x - a||^2 matches x - lr*(x - a).
  Optimizer opt2;
  opt2.step_size = 0.25;
  std::vector<double> target(p.values.size(), 2.0);
  std::vector<double> grad(p.values.size());
  for (size_t i = 0; i < grad.size(); ++i) grad[i] = p.values[i] - target[i];
  const PolicyParams stepped = opt2.apply_gradient(p, grad);
  for (size_t i = 0; i < grad.size(); ++i) {
    CHECK(stepped.values[i] ==
          doctest::Approx(p.values[i] - 0.25 * (p.values[i] - target[i]))
              .epsilon(1e-15));
  }

  std::vector<double> nan_grad(p.values.size(), 0.0);
  nan_grad[0] = std::nan("");
  Optimizer opt3;
  CHECK_THROWS_AS(opt3.apply_gradient(p, nan_grad), lcr::Error);
}

TEST_CASE("checkpoints reload bit-exactly") {
  ModelShape shape{Vocabulary::standard().size(), 12, 16};
  lcr::Rng rng(8);
  const PolicyParams p = PolicyParams::random_init(shape, 0.7, rng);
  const std::string path =
      (std::filesystem::temp_directory_path() / "lcr_ckpt_test.txt").string();
  p.save(path);
  const PolicyParams q = PolicyParams::load(path);
  CHECK(q.shape.vocab_size == shape.vocab_size);
  CHECK(q.shape.embed_dim == shape.embed_dim);
  CHECK(q.shape.context_window == shape.context_window);
  REQUIRE(q.values.size() == p.values.size());
  for (size_t i = 0; i < p.values.size(); ++i) {
    CHECK(p.values[i] == q.values[i]);  // bit-exact
  }
  std::filesystem::remove(path);
}

TEST_CASE("context windows left-pad and slide") {
  ModelShape shape{8, 2, 4};
  const PolicyParams p = PolicyParams::zeros(shape);
  const std::vector<TokenId> prompt = {5, 6};
  const std::vector<TokenId> output = {7, 3};

  const auto w0 = context_window(p, prompt, output, 0);
  CHECK(w0 == std::vector<TokenId>{1, 1, 5, 6});
  const auto w1 = context_window(p, prompt, output, 1);
  CHECK(w1 == std::vector<TokenId>{1, 5, 6, 7});
  const auto w2 = context_window(p, prompt, output, 2);
  CHECK(w2 == std::vector<TokenId>{5, 6, 7, 3});
}
