#include "lcr/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "lcr/error.hpp"

namespace lcr::policy {

namespace {

// Character inventory for everything the renderer and teacher can produce.
constexpr std::string_view kCharset =
    " \nabcdefghijklmnopqrstuvwxyz"
    "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    "0123456789"
    ".,:;-+()/%?'\"=_<>[]{}\\|*#&!";

}  // namespace

Vocabulary::Vocabulary() {
  tokens_.push_back("<eos>");
  tokens_.push_back("<pad>");
  // Multi-character literals, longest first so greedy encoding always takes
  // the longest match. The "\boxed{0" merges mirror what byte-pair merges
  // produce on this corpus, where every boxed score starts with "0." or "0}".
  const char* const kLiterals[] = {"\\boxed{0.", "</think>", "\\boxed{0",
                                   "<think>", "\\boxed{"};
  for (const char* lit : kLiterals) {
    literals_.emplace_back(lit, static_cast<TokenId>(tokens_.size()));
    tokens_.push_back(lit);
  }

  single_char_id_.assign(256, -1);
  for (char c : kCharset) {
    single_char_id_[static_cast<unsigned char>(c)] =
        static_cast<TokenId>(tokens_.size());
    tokens_.push_back(std::string(1, c));
  }
}

const Vocabulary& Vocabulary::standard() {
  static const Vocabulary v;
  return v;
}

const std::string& Vocabulary::token_text(TokenId id) const {
  if (id < 0 || id >= size()) throw_data("token id out of range");
  return tokens_[static_cast<size_t>(id)];
}

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    bool matched = false;
    for (const auto& [lit, id] : literals_) {
      if (text.compare(i, lit.size(), lit) == 0) {
        out.push_back(id);
        i += lit.size();
        matched = true;
        break;
      }
    }
    if (matched) continue;
    const TokenId id = single_char_id_[static_cast<unsigned char>(text[i])];
    if (id < 0) throw_data("unencodable character in text");
    out.push_back(id);
    ++i;
  }
  return out;
}

std::string Vocabulary::decode(std::span<const TokenId> tokens) const {
  std::string out;
  for (TokenId id : tokens) {
    if (id == eos() || id == pad()) continue;
    out += token_text(id);
  }
  return out;
}

bool Vocabulary::can_encode(std::string_view text) const {
  for (char c : text) {
    if (single_char_id_[static_cast<unsigned char>(c)] < 0) return false;
  }
  return true;
}

PolicyParams PolicyParams::zeros(const ModelShape& shape) {
  PolicyParams p;
  p.shape = shape;
  p.values.assign(static_cast<size_t>(shape.param_count()), 0.0);
  return p;
}

PolicyParams PolicyParams::random_init(const ModelShape& shape, double scale,
                                       Rng& rng) {
  PolicyParams p = zeros(shape);
  for (double& v : p.values) v = scale * rng.normal();
  // Position weights start near uniform averaging so the embedding path
  // carries signal from the first step.
  const double base = 1.0 / static_cast<double>(shape.context_window);
  for (int j = 0; j < shape.context_window; ++j) {
    for (int d = 0; d < shape.embed_dim; ++d) {
      p.values[shape.position_index(j, d)] = base * (1.0 + scale * rng.normal());
    }
  }
  return p;
}

namespace {

inline size_t embed_offset(const ModelShape& s, TokenId t, int d) {
  return s.embedding_index(t, d);
}
inline size_t posw_offset(const ModelShape& s, int j, int d) {
  return s.position_index(j, d);
}
inline size_t proj_offset(const ModelShape& s, TokenId t, int d) {
  return s.projection_index(t, d);
}
inline size_t bias_offset(const ModelShape& s, TokenId t) {
  return s.bias_index(t);
}

void check_tokens(const ModelShape& shape, std::span<const TokenId> tokens) {
  for (TokenId t : tokens) {
    if (t < 0 || t >= shape.vocab_size) throw_data("invalid token id");
  }
}

void hidden_state_into(const PolicyParams& p, std::span<const TokenId> context,
                       std::vector<double>& h) {
  const ModelShape& s = p.shape;
  h.assign(static_cast<size_t>(s.embed_dim), 0.0);
  for (int j = 0; j < s.context_window; ++j) {
    const TokenId t = context[static_cast<size_t>(j)];
    const size_t ebase = embed_offset(s, t, 0);
    const size_t wbase = posw_offset(s, j, 0);
    for (int d = 0; d < s.embed_dim; ++d) {
      h[static_cast<size_t>(d)] += p.values[wbase + d] * p.values[ebase + d];
    }
  }
}

std::vector<double> hidden_state(const PolicyParams& p,
                                 std::span<const TokenId> context) {
  std::vector<double> h;
  hidden_state_into(p, context, h);
  return h;
}

std::vector<double> logits_from_hidden(const PolicyParams& p,
                                       const std::vector<double>& h) {
  const ModelShape& s = p.shape;
  std::vector<double> logits(static_cast<size_t>(s.vocab_size));
  for (TokenId v = 0; v < s.vocab_size; ++v) {
    double acc = p.values[bias_offset(s, v)];
    const size_t base = proj_offset(s, v, 0);
    for (int d = 0; d < s.embed_dim; ++d) {
      acc += p.values[base + d] * h[static_cast<size_t>(d)];
    }
    logits[static_cast<size_t>(v)] = acc;
  }
  return logits;
}

void softmax_inplace(std::vector<double>& logits) {
  double max_logit = logits[0];
  for (double v : logits) max_logit = std::max(max_logit, v);
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - max_logit);
    sum += v;
  }
  for (double& v : logits) v /= sum;
}

}  // namespace

double PolicyParams::embedding(TokenId token, int dim) const {
  return values[embed_offset(shape, token, dim)];
}
double PolicyParams::position_weight(int pos, int dim) const {
  return values[posw_offset(shape, pos, dim)];
}
double PolicyParams::projection(TokenId token, int dim) const {
  return values[proj_offset(shape, token, dim)];
}
double PolicyParams::bias(TokenId token) const {
  return values[bias_offset(shape, token)];
}

void context_window_into(const PolicyParams& params,
                         std::span<const TokenId> prompt,
                         std::span<const TokenId> output, size_t next_index,
                         std::vector<TokenId>& ctx) {
  const int w = params.shape.context_window;
  ctx.assign(static_cast<size_t>(w), 1 /* pad */);
  // The window ends with the token immediately before output[next_index].
  long long total =
      static_cast<long long>(prompt.size()) + static_cast<long long>(next_index);
  for (int j = w - 1; j >= 0; --j) {
    const long long src = total - (w - j);
    if (src < 0) break;
    const size_t s = static_cast<size_t>(src);
    ctx[static_cast<size_t>(j)] =
        s < prompt.size() ? prompt[s] : output[s - prompt.size()];
  }
}

std::vector<TokenId> context_window(const PolicyParams& params,
                                    std::span<const TokenId> prompt,
                                    std::span<const TokenId> output,
                                    size_t next_index) {
  std::vector<TokenId> ctx;
  context_window_into(params, prompt, output, next_index, ctx);
  return ctx;
}

std::vector<double> next_token_dist(const PolicyParams& params,
                                    std::span<const TokenId> context) {
  if (static_cast<int>(context.size()) != params.shape.context_window) {
    throw_data("context length must equal the model context window");
  }
  check_tokens(params.shape, context);
  std::vector<double> logits =
      logits_from_hidden(params, hidden_state(params, context));
  softmax_inplace(logits);
  return logits;
}

Completion sample_completion(const PolicyParams& params,
                             std::span<const TokenId> prompt, int max_len,
                             double temperature, Rng& rng) {
  if (temperature < 0) throw_data("temperature must be >= 0");
  check_tokens(params.shape, prompt);
  Completion c;
  c.prompt_tokens.assign(prompt.begin(), prompt.end());

  for (int step = 0; step < max_len; ++step) {
    const std::vector<TokenId> ctx = context_window(
        params, prompt, c.output_tokens, c.output_tokens.size());
    const std::vector<double> dist = next_token_dist(params, ctx);

    TokenId chosen = 0;
    if (temperature == 0.0) {
      for (TokenId v = 1; v < params.shape.vocab_size; ++v) {
        if (dist[static_cast<size_t>(v)] > dist[static_cast<size_t>(chosen)]) {
          chosen = v;
        }
      }
    } else if (temperature == 1.0) {
      const double u = rng.next_double();
      double cum = 0.0;
      chosen = params.shape.vocab_size - 1;
      for (TokenId v = 0; v < params.shape.vocab_size; ++v) {
        cum += dist[static_cast<size_t>(v)];
        if (u < cum) {
          chosen = v;
          break;
        }
      }
    } else {
      // Temperature reshapes the sampling distribution only; recorded
      // logprobs stay the temperature-1 model values.
      std::vector<double> scaled(dist.size());
      double sum = 0.0;
      for (size_t v = 0; v < dist.size(); ++v) {
        scaled[v] = std::pow(dist[v], 1.0 / temperature);
        sum += scaled[v];
      }
      const double u = rng.next_double() * sum;
      double cum = 0.0;
      chosen = params.shape.vocab_size - 1;
      for (TokenId v = 0; v < params.shape.vocab_size; ++v) {
        cum += scaled[static_cast<size_t>(v)];
        if (u < cum) {
          chosen = v;
          break;
        }
      }
    }

    c.output_tokens.push_back(chosen);
    c.logprobs.push_back(std::log(dist[static_cast<size_t>(chosen)]));
    if (chosen == 0 /* eos */) break;
  }
  return c;
}

std::vector<double> sequence_logprobs(const PolicyParams& params,
                                      std::span<const TokenId> prompt,
                                      std::span<const TokenId> output) {
  check_tokens(params.shape, prompt);
  check_tokens(params.shape, output);
  std::vector<double> out;
  out.reserve(output.size());
  for (size_t i = 0; i < output.size(); ++i) {
    const std::vector<TokenId> ctx = context_window(params, prompt, output, i);
    const std::vector<double> dist = next_token_dist(params, ctx);
    out.push_back(std::log(dist[static_cast<size_t>(output[i])]));
  }
  return out;
}

double forward_token(const PolicyParams& params,
                     std::span<const TokenId> context, TokenId token,
                     TokenWorkspace& ws) {
  const ModelShape& s = params.shape;
  if (static_cast<int>(context.size()) != s.context_window) {
    throw_data("context length must equal the model context window");
  }
  hidden_state_into(params, context, ws.hidden);
  ws.probs.resize(static_cast<size_t>(s.vocab_size));
  for (TokenId v = 0; v < s.vocab_size; ++v) {
    double acc = params.values[bias_offset(s, v)];
    const size_t base = proj_offset(s, v, 0);
    for (int d = 0; d < s.embed_dim; ++d) {
      acc += params.values[base + d] * ws.hidden[static_cast<size_t>(d)];
    }
    ws.probs[static_cast<size_t>(v)] = acc;
  }
  softmax_inplace(ws.probs);
  return std::log(ws.probs[static_cast<size_t>(token)]);
}

void backward_token(const PolicyParams& params,
                    std::span<const TokenId> context, TokenId token,
                    TokenWorkspace& ws, double coeff,
                    std::vector<double>& grad) {
  const ModelShape& s = params.shape;
  if (grad.size() != params.values.size()) {
    throw_data("gradient buffer has wrong dimension");
  }
  // d log p(token) / d logits = e_token - p
  ws.dhidden.assign(static_cast<size_t>(s.embed_dim), 0.0);
  double* dh = ws.dhidden.data();
  for (TokenId v = 0; v < s.vocab_size; ++v) {
    const double dl =
        coeff * ((v == token ? 1.0 : 0.0) - ws.probs[static_cast<size_t>(v)]);
    grad[bias_offset(s, v)] += dl;
    const size_t base = proj_offset(s, v, 0);
    for (int d = 0; d < s.embed_dim; ++d) {
      grad[base + d] += dl * ws.hidden[static_cast<size_t>(d)];
      dh[d] += dl * params.values[base + d];
    }
  }
  for (int j = 0; j < s.context_window; ++j) {
    const TokenId t = context[static_cast<size_t>(j)];
    const size_t ebase = embed_offset(s, t, 0);
    const size_t wbase = posw_offset(s, j, 0);
    for (int d = 0; d < s.embed_dim; ++d) {
      grad[wbase + d] += dh[d] * params.values[ebase + d];
      grad[ebase + d] += params.values[wbase + d] * dh[d];
    }
  }
}

void accumulate_logprob_grad(const PolicyParams& params,
                             std::span<const TokenId> context, TokenId token,
                             double coeff, std::vector<double>& grad) {
  TokenWorkspace ws;
  forward_token(params, context, token, ws);
  backward_token(params, context, token, ws, coeff, grad);
}

PolicyParams Optimizer::apply_gradient(const PolicyParams& params,
                                       std::span<const double> gradient) {
  if (gradient.size() != params.values.size()) {
    throw_data("gradient dimension mismatch");
  }
  double norm2 = 0.0;
  for (double g : gradient) {
    if (!std::isfinite(g)) throw_numeric("non-finite gradient");
    norm2 += g * g;
  }
  double scale = 1.0;
  if (clip_norm > 0.0) {
    const double norm = std::sqrt(norm2);
    if (norm > clip_norm) scale = clip_norm / norm;
  }
  PolicyParams next = params;
  if (kind == Kind::kAdam) {
    if (moment1.size() != gradient.size()) {
      moment1.assign(gradient.size(), 0.0);
      moment2.assign(gradient.size(), 0.0);
    }
    ++step_count;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (size_t i = 0; i < gradient.size(); ++i) {
      const double g = scale * gradient[i];
      moment1[i] = beta1 * moment1[i] + (1.0 - beta1) * g;
      moment2[i] = beta2 * moment2[i] + (1.0 - beta2) * g * g;
      const double m_hat = moment1[i] / bc1;
      const double v_hat = moment2[i] / bc2;
      next.values[i] -= step_size * m_hat / (std::sqrt(v_hat) + epsilon);
    }
    return next;
  }
  if (velocity.size() != gradient.size()) {
    velocity.assign(gradient.size(), 0.0);
  }
  for (size_t i = 0; i < gradient.size(); ++i) {
    velocity[i] = momentum * velocity[i] + scale * gradient[i];
    next.values[i] -= step_size * velocity[i];
  }
  return next;
}

void PolicyParams::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_data("cannot open " + path + " for writing");
  out << "lcr-policy 1\n";
  out << shape.vocab_size << ' ' << shape.embed_dim << ' '
      << shape.context_window << '\n';
  char buf[40];
  for (double v : values) {
    std::snprintf(buf, sizeof buf, "%a\n", v);
    out << buf;
  }
  if (!out) throw_data("checkpoint write failed");
}

PolicyParams PolicyParams::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_data("cannot open " + path);
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "lcr-policy" || version != 1) {
    throw_data("unrecognized checkpoint format");
  }
  ModelShape shape;
  in >> shape.vocab_size >> shape.embed_dim >> shape.context_window;
  if (!in || shape.vocab_size <= 0 || shape.embed_dim <= 0 ||
      shape.context_window <= 0) {
    throw_data("bad checkpoint header");
  }
  PolicyParams p = zeros(shape);
  std::string tok;
  for (double& v : p.values) {
    if (!(in >> tok)) throw_data("truncated checkpoint");
    v = std::strtod(tok.c_str(), nullptr);
  }
  return p;
}

}  // namespace lcr::policy
