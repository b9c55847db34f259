#include "lcr.h"

#include <cstring>
#include <string>

#include "lcr/config.hpp"
#include "lcr/error.hpp"
#include "lcr/parse.hpp"
#include "lcr/pipeline.hpp"
#include "lcr/policy.hpp"
#include "lcr/reward.hpp"

namespace {

thread_local std::string t_last_error;

lcr_status status_from_code(lcr::ErrorCode code) {
  switch (code) {
    case lcr::ErrorCode::kUsage: return LCR_E_USAGE;
    case lcr::ErrorCode::kConfig: return LCR_E_CONFIG;
    case lcr::ErrorCode::kData: return LCR_E_DATA;
    case lcr::ErrorCode::kNumeric: return LCR_E_NUMERIC;
    case lcr::ErrorCode::kInternal: return LCR_E_INTERNAL;
  }
  return LCR_E_INTERNAL;
}

template <typename Fn>
lcr_status guarded(Fn&& fn) {
  try {
    fn();
    t_last_error.clear();
    return LCR_OK;
  } catch (const lcr::Error& e) {
    t_last_error = e.what();
    return status_from_code(e.code());
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return LCR_E_INTERNAL;
  } catch (...) {
    t_last_error = "unknown error";
    return LCR_E_INTERNAL;
  }
}

lcr_status require(bool ok, const char* message) {
  if (ok) return LCR_OK;
  t_last_error = message;
  return LCR_E_USAGE;
}

lcr_status copy_out(const std::string& text, char* buf, size_t cap,
                    size_t* needed) {
  if (needed) *needed = text.size();
  if (buf && cap > 0) {
    const size_t n = text.size() < cap - 1 ? text.size() : cap - 1;
    std::memcpy(buf, text.data(), n);
    buf[n] = '\0';
  }
  return LCR_OK;
}

}  // namespace

struct lcr_config {
  lcr::config::PipelineConfig impl;
};

struct lcr_policy {
  lcr::policy::PolicyParams params;
};

extern "C" {

const char* lcr_last_error(void) { return t_last_error.c_str(); }

lcr_status lcr_config_create(lcr_config** out) {
  if (lcr_status s = require(out != nullptr, "out must not be null")) return s;
  return guarded([&] { *out = new lcr_config(); });
}

void lcr_config_destroy(lcr_config* cfg) { delete cfg; }

lcr_status lcr_config_load_file(lcr_config* cfg, const char* path) {
  if (lcr_status s = require(cfg && path, "null argument")) return s;
  return guarded([&] { cfg->impl.load_file(path); });
}

lcr_status lcr_config_set(lcr_config* cfg, const char* key,
                          const char* value) {
  if (lcr_status s = require(cfg && key && value, "null argument")) return s;
  return guarded([&] { cfg->impl.set(key, value); });
}

lcr_status lcr_config_dump(const lcr_config* cfg, char* buf, size_t cap,
                           size_t* needed) {
  if (lcr_status s = require(cfg != nullptr, "null config")) return s;
  return guarded([&] { copy_out(cfg->impl.dump(), buf, cap, needed); });
}

lcr_status lcr_run_synth(const lcr_config* cfg, const char* out_path) {
  if (lcr_status s = require(cfg && out_path, "null argument")) return s;
  return guarded([&] { lcr::pipeline::run_synth(cfg->impl, out_path); });
}

lcr_status lcr_run_render(const lcr_config* cfg, const char* cohort_path,
                          const char* train_out,
                          const char* test_out_or_null) {
  if (lcr_status s = require(cfg && cohort_path && train_out, "null argument"))
    return s;
  return guarded([&] {
    lcr::pipeline::run_render(cfg->impl, cohort_path, train_out,
                              test_out_or_null ? test_out_or_null : "");
  });
}

lcr_status lcr_run_label_check(const lcr_config* cfg, const char* cohort_path,
                               char* buf, size_t cap, size_t* needed) {
  if (lcr_status s = require(cfg && cohort_path, "null argument")) return s;
  return guarded([&] {
    copy_out(lcr::pipeline::run_label_check(cfg->impl, cohort_path), buf, cap,
             needed);
  });
}

lcr_status lcr_run_reward_eval(const lcr_config* cfg, const char* in_path,
                               const char* out_path) {
  if (lcr_status s = require(cfg && in_path && out_path, "null argument"))
    return s;
  return guarded(
      [&] { lcr::pipeline::run_reward_eval(cfg->impl, in_path, out_path); });
}

lcr_status lcr_run_parse_check(const lcr_config* cfg, const char* in_path,
                               const char* out_path) {
  if (lcr_status s = require(cfg && in_path && out_path, "null argument"))
    return s;
  return guarded(
      [&] { lcr::pipeline::run_parse_check(cfg->impl, in_path, out_path); });
}

lcr_status lcr_run_train_sft(const lcr_config* cfg, const char* dataset_path,
                             const char* checkpoint_out,
                             const char* metrics_out_or_null) {
  if (lcr_status s =
          require(cfg && dataset_path && checkpoint_out, "null argument"))
    return s;
  return guarded([&] {
    lcr::pipeline::run_train_sft(cfg->impl, dataset_path, checkpoint_out,
                                 metrics_out_or_null ? metrics_out_or_null
                                                     : "");
  });
}

lcr_status lcr_run_train_grpo(const lcr_config* cfg, const char* dataset_path,
                              const char* init_checkpoint_or_null,
                              const char* checkpoint_out,
                              const char* metrics_out_or_null) {
  if (lcr_status s =
          require(cfg && dataset_path && checkpoint_out, "null argument"))
    return s;
  return guarded([&] {
    lcr::pipeline::run_train_grpo(
        cfg->impl, dataset_path,
        init_checkpoint_or_null ? init_checkpoint_or_null : "", checkpoint_out,
        metrics_out_or_null ? metrics_out_or_null : "");
  });
}

lcr_status lcr_run_evaluate(const lcr_config* cfg, const char* checkpoint_path,
                            const char* cohort_path, const char* report_out,
                            const char* roc_prefix_or_null) {
  if (lcr_status s = require(cfg && checkpoint_path && cohort_path && report_out,
                             "null argument"))
    return s;
  return guarded([&] {
    lcr::pipeline::run_evaluate(cfg->impl, checkpoint_path, cohort_path,
                                report_out,
                                roc_prefix_or_null ? roc_prefix_or_null : "");
  });
}

lcr_status lcr_run_report(const lcr_config* cfg, const char* report_path,
                          char* buf, size_t cap, size_t* needed) {
  (void)cfg;
  if (lcr_status s = require(report_path != nullptr, "null report path"))
    return s;
  return guarded([&] {
    copy_out(lcr::pipeline::run_report(report_path), buf, cap, needed);
  });
}

lcr_status lcr_extract_score(const char* text, double* out_score) {
  if (lcr_status s = require(text && out_score, "null argument")) return s;
  return guarded([&] {
    const auto split = lcr::parse::split_sections(text);
    const auto parsed = lcr::parse::extract_score(split.answer);
    if (!parsed) lcr::throw_data("no valid boxed score");
    *out_score = parsed->value;
  });
}

lcr_status lcr_reward_total(const lcr_config* cfg, const char* text, int label,
                            int token_length, double out[4]) {
  if (lcr_status s = require(cfg && text && out, "null argument")) return s;
  return guarded([&] {
    const int len =
        token_length >= 0
            ? token_length
            : static_cast<int>(
                  lcr::policy::Vocabulary::standard().encode(text).size());
    const lcr::parse::ModelOutput output =
        lcr::parse::ModelOutput::from_raw(text, len);
    const lcr::reward::RewardBreakdown b =
        lcr::reward::total_reward(output, label, cfg->impl.reward_config());
    out[0] = b.score;
    out[1] = b.format;
    out[2] = b.length;
    out[3] = b.total;
  });
}

lcr_status lcr_policy_load(const char* checkpoint_path, lcr_policy** out) {
  if (lcr_status s = require(checkpoint_path && out, "null argument")) return s;
  return guarded([&] {
    *out = new lcr_policy{lcr::policy::PolicyParams::load(checkpoint_path)};
  });
}

void lcr_policy_destroy(lcr_policy* policy) { delete policy; }

lcr_status lcr_policy_generate(const lcr_policy* policy,
                               const char* prompt_text, int max_len,
                               double temperature, uint64_t seed, char* buf,
                               size_t cap, size_t* needed) {
  if (lcr_status s = require(policy && prompt_text, "null argument")) return s;
  return guarded([&] {
    const auto& vocab = lcr::policy::Vocabulary::standard();
    const auto prompt = vocab.encode(prompt_text);
    lcr::Rng rng(seed);
    const lcr::policy::Completion c = lcr::policy::sample_completion(
        policy->params, prompt, max_len, temperature, rng);
    copy_out(vocab.decode(c.output_tokens), buf, cap, needed);
  });
}

}  // extern "C"
