#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "lcr/cohort.hpp"
#include "lcr/policy.hpp"
#include "lcr/render.hpp"
#include "lcr/reward.hpp"

namespace lcr::eval {

struct RocPoint {
  double fpr = 0;
  double tpr = 0;
  double threshold = 0;
};

struct HorizonReport {
  int horizon = 0;
  int samples = 0;
  int positives = 0;
  std::optional<double> auc;           // absent for single-class horizons
  std::optional<double> baseline_auc;  // rule-based nodule score
  bool single_class = false;
  std::vector<RocPoint> roc;
};

struct EvalReport {
  std::map<int, HorizonReport> horizons;
  double parse_failure_rate = 0;
  int total_samples = 0;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

// Mann-Whitney AUC via average ranks: (correctly ordered pairs + half the
// ties) / (P*N). Throws ErrorCode::kData when a class is missing.
double roc_auc(const std::vector<double>& scores,
               const std::vector<int>& labels);

// ROC staircase points over the distinct score thresholds.
std::vector<RocPoint> roc_points(const std::vector<double>& scores,
                                 const std::vector<int>& labels);

// Category score for the most suspicious nodule state at the latest exam:
// none 0.05; <6 mm 0.15; 6-8 mm 0.35; 8-15 mm or new 6-8 mm 0.60;
// >=15 mm, spiculated >=8 mm, or growth 0.85.
double rule_baseline_score(const std::vector<cohort::ScreeningExam>& exams);

struct EvalConfig {
  render::RenderStyle style = render::RenderStyle::kTemplate;
  int max_completion_len = 768;
  std::uint64_t render_seed = 17;
};

// Renders each sample, generates greedily, extracts the boxed score (parse
// failures score 0.5 and are counted separately), and reports per-horizon
// AUC against the labels plus the rule-baseline AUC.
EvalReport evaluate_policy(const policy::PolicyParams& params,
                           const std::vector<cohort::LabeledSample>& samples,
                           const EvalConfig& config);

}  // namespace lcr::eval
