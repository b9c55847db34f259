/* C API for the lung cancer risk pipeline.
 *
 * The core is a C++ library; this header is the stable surface for other
 * languages and for the bundled CLI. All functions return an lcr_status and
 * never throw; the last error message for the calling thread is available
 * via lcr_last_error(). Handles are opaque and must be released with their
 * destroy function.
 */
#ifndef LCR_H
#define LCR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LCR_API __declspec(dllexport)
#else
#define LCR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lcr_status {
  LCR_OK = 0,
  LCR_E_USAGE = 2,
  LCR_E_CONFIG = 3,
  LCR_E_DATA = 4,
  LCR_E_NUMERIC = 5,
  LCR_E_INTERNAL = 6,
} lcr_status;

/* Message describing the most recent failure on this thread. */
LCR_API const char* lcr_last_error(void);

/* ---- configuration ---- */

typedef struct lcr_config lcr_config;

LCR_API lcr_status lcr_config_create(lcr_config** out);
LCR_API void lcr_config_destroy(lcr_config* cfg);
LCR_API lcr_status lcr_config_load_file(lcr_config* cfg, const char* path);
LCR_API lcr_status lcr_config_set(lcr_config* cfg, const char* key,
                                  const char* value);
/* Resolved `key = value` lines. Writes up to cap bytes including the NUL
 * terminator; *needed receives the full length (excluding the NUL). */
LCR_API lcr_status lcr_config_dump(const lcr_config* cfg, char* buf,
                                   size_t cap, size_t* needed);

/* ---- pipeline stages (file to file) ---- */

LCR_API lcr_status lcr_run_synth(const lcr_config* cfg, const char* out_path);
LCR_API lcr_status lcr_run_render(const lcr_config* cfg,
                                  const char* cohort_path,
                                  const char* train_out,
                                  const char* test_out_or_null);
LCR_API lcr_status lcr_run_label_check(const lcr_config* cfg,
                                       const char* cohort_path, char* buf,
                                       size_t cap, size_t* needed);
LCR_API lcr_status lcr_run_reward_eval(const lcr_config* cfg,
                                       const char* in_path,
                                       const char* out_path);
LCR_API lcr_status lcr_run_parse_check(const lcr_config* cfg,
                                       const char* in_path,
                                       const char* out_path);
LCR_API lcr_status lcr_run_train_sft(const lcr_config* cfg,
                                     const char* dataset_path,
                                     const char* checkpoint_out,
                                     const char* metrics_out_or_null);
LCR_API lcr_status lcr_run_train_grpo(const lcr_config* cfg,
                                      const char* dataset_path,
                                      const char* init_checkpoint_or_null,
                                      const char* checkpoint_out,
                                      const char* metrics_out_or_null);
LCR_API lcr_status lcr_run_evaluate(const lcr_config* cfg,
                                    const char* checkpoint_path,
                                    const char* cohort_path,
                                    const char* report_out,
                                    const char* roc_prefix_or_null);
LCR_API lcr_status lcr_run_report(const lcr_config* cfg,
                                  const char* report_path, char* buf,
                                  size_t cap, size_t* needed);

/* ---- direct primitives ---- */

/* Extracts the boxed risk score; LCR_E_DATA when no valid score exists. */
LCR_API lcr_status lcr_extract_score(const char* text, double* out_score);

/* Rule-based reward for one output. label must be 0 or 1; token_length < 0
 * means "tokenize the text with the pipeline vocabulary". out receives
 * {score, format, length, total}. */
LCR_API lcr_status lcr_reward_total(const lcr_config* cfg, const char* text,
                                    int label, int token_length,
                                    double out[4]);

/* ---- policy handles ---- */

typedef struct lcr_policy lcr_policy;

LCR_API lcr_status lcr_policy_load(const char* checkpoint_path,
                                   lcr_policy** out);
LCR_API void lcr_policy_destroy(lcr_policy* policy);
/* Greedy when temperature is 0. The completion is decoded text. */
LCR_API lcr_status lcr_policy_generate(const lcr_policy* policy,
                                       const char* prompt_text, int max_len,
                                       double temperature, uint64_t seed,
                                       char* buf, size_t cap, size_t* needed);

#ifdef __cplusplus
}
#endif

#endif /* LCR_H */
