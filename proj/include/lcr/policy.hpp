#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lcr/rng.hpp"

namespace lcr::policy {

using TokenId = int;

// Character-level vocabulary with a handful of multi-character literals.
// Encoding is greedy longest-match, so "<think>", "</think>" and "\boxed{"
// always become single tokens. Round-trips losslessly for any string over
// the character set.
class Vocabulary {
 public:
  static const Vocabulary& standard();

  int size() const { return static_cast<int>(tokens_.size()); }
  TokenId eos() const { return 0; }
  TokenId pad() const { return 1; }

  const std::string& token_text(TokenId id) const;

  // Throws ErrorCode::kData on characters outside the vocabulary.
  std::vector<TokenId> encode(std::string_view text) const;
  std::string decode(std::span<const TokenId> tokens) const;

  bool can_encode(std::string_view text) const;

 private:
  Vocabulary();
  std::vector<std::string> tokens_;
  std::vector<TokenId> single_char_id_;  // 256 entries, -1 when absent
  std::vector<std::pair<std::string, TokenId>> literals_;  // longest first
};

struct ModelShape {
  int vocab_size = 0;
  int embed_dim = 16;
  int context_window = 32;

  int param_count() const {
    return vocab_size * embed_dim       // token embeddings
           + context_window * embed_dim  // per-channel position weights
           + vocab_size * embed_dim      // output projection
           + vocab_size;                 // output bias
  }

  // Flat parameter layout: [E | w | U | b].
  size_t embedding_index(int token, int dim) const {
    return static_cast<size_t>(token) * embed_dim + dim;
  }
  size_t position_index(int pos, int dim) const {
    return static_cast<size_t>(vocab_size) * embed_dim +
           static_cast<size_t>(pos) * embed_dim + dim;
  }
  size_t projection_index(int token, int dim) const {
    return static_cast<size_t>(vocab_size) * embed_dim +
           static_cast<size_t>(context_window) * embed_dim +
           static_cast<size_t>(token) * embed_dim + dim;
  }
  size_t bias_index(int token) const {
    return static_cast<size_t>(vocab_size) * embed_dim +
           static_cast<size_t>(context_window) * embed_dim +
           static_cast<size_t>(vocab_size) * embed_dim +
           static_cast<size_t>(token);
  }
};

// Immutable parameter snapshot of the next-token scorer. The model embeds
// each token of a fixed-width context window, averages the embeddings with
// learned per-channel position weights, and projects to vocabulary logits:
//   h[d] = sum_j w[j][d] * E[ctx[j]][d],  logits = U h + b.
// Per-channel weights let some channels track the local token pattern while
// others hold long-range reads. All math is IEEE double; snapshots serialize
// bit-exactly.
struct PolicyParams {
  ModelShape shape;
  std::vector<double> values;  // [E | w | U | b]

  static PolicyParams zeros(const ModelShape& shape);
  static PolicyParams random_init(const ModelShape& shape, double scale,
                                  Rng& rng);

  double embedding(TokenId token, int dim) const;
  double position_weight(int pos, int dim) const;
  double projection(TokenId token, int dim) const;
  double bias(TokenId token) const;

  // Checkpoint format: text header with dimensions, then one hexfloat per
  // line. Reload is bit-exact.
  void save(const std::string& path) const;
  static PolicyParams load(const std::string& path);
};

struct Completion {
  std::vector<TokenId> prompt_tokens;
  std::vector<TokenId> output_tokens;
  // log pi(token | context) under the generating parameters (temperature 1).
  std::vector<double> logprobs;
};

// Left-padded window of the last `context_window` tokens ending just before
// the position to predict.
std::vector<TokenId> context_window(const PolicyParams& params,
                                    std::span<const TokenId> prompt,
                                    std::span<const TokenId> output,
                                    size_t next_index);

// Probability vector over the vocabulary; entries positive, summing to 1.
std::vector<double> next_token_dist(const PolicyParams& params,
                                    std::span<const TokenId> context);

// Autoregressive sampling until EOS or max_len tokens. temperature 0 means
// greedy (ties broken toward the lowest id). Recorded logprobs are always
// the temperature-1 model values.
Completion sample_completion(const PolicyParams& params,
                             std::span<const TokenId> prompt, int max_len,
                             double temperature, Rng& rng);

// Teacher-forced per-token log-probabilities of `output` after `prompt`.
// Re-scoring a completion under its generating parameters reproduces its
// recorded logprobs bit-exactly.
std::vector<double> sequence_logprobs(const PolicyParams& params,
                                      std::span<const TokenId> prompt,
                                      std::span<const TokenId> output);

// Accumulates coeff * d(log pi(token | context))/d(theta) into grad.
// Shared by the SFT loss and the RL objective.
void accumulate_logprob_grad(const PolicyParams& params,
                             std::span<const TokenId> context, TokenId token,
                             double coeff, std::vector<double>& grad);

// Reusable buffers for fused forward/backward over a sequence.
struct TokenWorkspace {
  std::vector<double> hidden;
  std::vector<double> probs;
  std::vector<double> dhidden;
  std::vector<TokenId> context;
};

// Forward pass for one position: fills the workspace and returns
// log pi(token | context).
double forward_token(const PolicyParams& params,
                     std::span<const TokenId> context, TokenId token,
                     TokenWorkspace& ws);

// Backward pass reusing the workspace filled by forward_token on the same
// (params, context, token).
void backward_token(const PolicyParams& params,
                    std::span<const TokenId> context, TokenId token,
                    TokenWorkspace& ws, double coeff,
                    std::vector<double>& grad);

// context_window without the per-call allocation.
void context_window_into(const PolicyParams& params,
                         std::span<const TokenId> prompt,
                         std::span<const TokenId> output, size_t next_index,
                         std::vector<TokenId>& ctx);

struct Optimizer {
  enum class Kind { kSgd, kAdam };

  Kind kind = Kind::kSgd;  // plain gradient step with optional momentum
  double step_size = 0.01;
  double momentum = 0.0;
  double clip_norm = 0.0;  // 0 disables gradient-norm clipping
  double beta1 = 0.9;      // Adam moments
  double beta2 = 0.999;
  double epsilon = 1e-8;

  std::vector<double> velocity;  // lazily sized
  std::vector<double> moment1;
  std::vector<double> moment2;
  long step_count = 0;

  // Descends along `gradient`. Throws ErrorCode::kNumeric on NaN/Inf
  // gradients without touching the parameters.
  PolicyParams apply_gradient(const PolicyParams& params,
                              std::span<const double> gradient);
};

}  // namespace lcr::policy
