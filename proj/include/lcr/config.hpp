#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lcr/cohort.hpp"
#include "lcr/eval.hpp"
#include "lcr/render.hpp"
#include "lcr/reward.hpp"
#include "lcr/train.hpp"

namespace lcr::config {

// Key-value pipeline configuration. Files hold one `key = value` pair per
// line with '#' comments; flags override file values. Unknown keys are
// config errors so typos fail fast.
class PipelineConfig {
 public:
  PipelineConfig();

  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);

  std::uint64_t seed() const { return get_u64("seed"); }

  cohort::CohortConfig cohort_config() const;
  reward::RewardConfig reward_config() const;
  train::ClipConfig clip_config() const;
  policy::ModelShape model_shape() const;
  train::GrpoConfig grpo_config() const;
  train::SftConfig sft_config() const;
  eval::EvalConfig eval_config() const;

  std::vector<int> horizons() const;
  double test_fraction() const { return get_double("render.test_fraction"); }
  // Style weights in declaration order: template, table, freetext, narrative.
  std::vector<double> style_weights() const;
  std::string teacher_mode() const { return get_string("render.teacher_mode"); }
  std::string eval_split() const { return get_string("eval.split"); }

  // Resolved configuration, one sorted `key = value` per line.
  std::string dump() const;

  // Range-checks every numeric field. Throws ErrorCode::kConfig.
  void validate() const;

 private:
  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;

  std::map<std::string, std::string> values_;
};

}  // namespace lcr::config
