#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lcr/config.hpp"

namespace lcr::pipeline {

// File-to-file pipeline stages shared by the C API, the CLI and the tests.
// Every stage is deterministic given the resolved config.

void run_synth(const config::PipelineConfig& cfg, const std::string& out_path);

cohort::Cohort load_cohort(const std::string& path);

// Deterministic patient-level split: a patient lands in the test split when
// hash(patient_id, seed) falls below the test fraction.
bool in_test_split(const std::string& patient_id, std::uint64_t seed,
                   double test_fraction);

// Builds labeled samples from the cohort, splits by patient, renders every
// sample (style drawn from the configured mix) and writes dataset records.
// When teacher_mode is plain/think, distillation traces are attached after
// rejection filtering. test_out may be empty to skip the test file.
void run_render(const config::PipelineConfig& cfg,
                const std::string& cohort_path, const std::string& train_out,
                const std::string& test_out);

std::vector<render::DatasetRecord> load_dataset(const std::string& path);

// Per-horizon label counts over a cohort file.
std::string run_label_check(const config::PipelineConfig& cfg,
                            const std::string& cohort_path);

// {raw_text, label} records in, reward breakdown records out.
void run_reward_eval(const config::PipelineConfig& cfg,
                     const std::string& in_path, const std::string& out_path);

// {raw_text} records in, per-line parse results out.
void run_parse_check(const config::PipelineConfig& cfg,
                     const std::string& in_path, const std::string& out_path);

void run_train_sft(const config::PipelineConfig& cfg,
                   const std::string& dataset_path,
                   const std::string& checkpoint_out,
                   const std::string& metrics_out);

void run_train_grpo(const config::PipelineConfig& cfg,
                    const std::string& dataset_path,
                    const std::string& init_checkpoint,  // may be empty
                    const std::string& checkpoint_out,
                    const std::string& metrics_out);

// Rebuilds the configured split from the cohort, evaluates the checkpoint
// and writes the report plus per-horizon ROC point files (roc_prefix may be
// empty to skip them).
void run_evaluate(const config::PipelineConfig& cfg,
                  const std::string& checkpoint_path,
                  const std::string& cohort_path,
                  const std::string& report_out, const std::string& roc_prefix);

// Human-readable summary of a report file.
std::string run_report(const std::string& report_path);

// Shared helpers, exposed for tests and the acceptance suite.
std::vector<cohort::LabeledSample> split_samples(
    const cohort::Cohort& cohort, const std::vector<int>& horizons,
    std::uint64_t seed, double test_fraction, const std::string& which);

train::TokenizedPair to_sft_pair(const std::string& input_text,
                                 const std::string& teacher_text);

std::vector<policy::TokenId> prompt_tokens(const std::string& input_text);

}  // namespace lcr::pipeline
