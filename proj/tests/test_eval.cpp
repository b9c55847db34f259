#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "lcr/cohort.hpp"
#include "lcr/error.hpp"
#include "lcr/eval.hpp"
#include "lcr/rng.hpp"

using namespace lcr;
using eval::roc_auc;
using eval::rule_baseline_score;

namespace {

// O(P*N) pairwise oracle with half credit for ties.
double brute_force_auc(const std::vector<double>& scores,
                       const std::vector<int>& labels) {
  double wins = 0;
  long pairs = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      ++pairs;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

cohort::ImagingFinding nodule(int size_mm, cohort::NoduleMargin margin,
                              cohort::ChangeVsPrior change) {
  cohort::ImagingFinding f;
  f.kind = cohort::FindingKind::kNodule;
  f.location = "left upper lobe";
  f.size_mm = size_mm;
  f.margin = margin;
  f.attenuation = cohort::NoduleAttenuation::kSolid;
  f.change = change;
  return f;
}

}  // namespace

TEST_CASE("roc_auc basic examples") {
  CHECK(roc_auc({0.9, 0.1}, {1, 0}) == 1.0);
  CHECK(roc_auc({0.1, 0.9}, {1, 0}) == 0.0);
  CHECK(roc_auc({0.7, 0.7}, {1, 0}) == 0.5);
  CHECK(roc_auc({0.2, 0.5, 0.8}, {0, 1, 1}) == 1.0);

  CHECK_THROWS_AS(roc_auc({0.5, 0.6}, {1, 1}), lcr::Error);
  CHECK_THROWS_AS(roc_auc({0.5, 0.6}, {0, 0}), lcr::Error);
  CHECK_THROWS_AS(roc_auc({0.5}, {1, 0}), lcr::Error);
  CHECK_THROWS_AS(roc_auc({0.5, 0.4}, {1, 2}), lcr::Error);
}

TEST_CASE("sort-based AUC equals the brute-force oracle on 1000 instances") {
  Rng rng(55);
  for (int it = 0; it < 1000; ++it) {
    const int n = 2 + static_cast<int>(rng.below(199));
    std::vector<double> scores;
    std::vector<int> labels;
    bool has_pos = false, has_neg = false;
    for (int i = 0; i < n; ++i) {
      // Coarse grid so ties are frequent.
      scores.push_back(rng.below(12) / 11.0);
      const int l = rng.bernoulli(0.4) ? 1 : 0;
      labels.push_back(l);
      (l ? has_pos : has_neg) = true;
    }
    if (!has_pos) labels[0] = 1;
    if (!has_neg) labels[labels.size() - 1] = 0;
    const double fast = roc_auc(scores, labels);
    const double slow = brute_force_auc(scores, labels);
    CHECK(std::abs(fast - slow) < 1e-12);
  }
}

TEST_CASE("AUC is invariant under strictly increasing transforms") {
  Rng rng(56);
  for (int it = 0; it < 300; ++it) {
    const int n = 5 + static_cast<int>(rng.below(60));
    std::vector<double> scores;
    std::vector<int> labels;
    for (int i = 0; i < n; ++i) {
      scores.push_back(rng.next_double());
      labels.push_back(rng.bernoulli(0.5) ? 1 : 0);
    }
    labels[0] = 1;
    labels[1] = 0;
    const double base = roc_auc(scores, labels);

    const double a = 0.5 + 2.0 * rng.next_double();
    const double b = rng.uniform(-2, 2);
    std::vector<double> mapped = scores;
    for (double& s : mapped) s = std::exp(a * s) + b;  // strictly increasing
    CHECK(roc_auc(mapped, labels) == doctest::Approx(base).epsilon(1e-12));

    // Complement identity.
    std::vector<int> flipped = labels;
    for (int& l : flipped) l = 1 - l;
    CHECK(roc_auc(scores, labels) + roc_auc(scores, flipped) ==
          doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("rule baseline decision table") {
  using cohort::ChangeVsPrior;
  using cohort::NoduleMargin;
  cohort::ScreeningExam t0;
  t0.exam_year_index = 0;

  // No nodules at any year.
  CHECK(rule_baseline_score({t0}) == 0.05);

  // Single 7 mm smooth solid stable nodule.
  cohort::ScreeningExam t1;
  t1.exam_year_index = 1;
  t1.findings.push_back(
      nodule(7, NoduleMargin::kSmooth, ChangeVsPrior::kStable));
  CHECK(rule_baseline_score({t0, t1}) == 0.35);

  // 6 mm at T0 grown to 10 mm at T1.
  cohort::ScreeningExam g0;
  g0.exam_year_index = 0;
  g0.findings.push_back(
      nodule(6, NoduleMargin::kSmooth, ChangeVsPrior::kUnknown));
  cohort::ScreeningExam g1;
  g1.exam_year_index = 1;
  g1.findings.push_back(
      nodule(10, NoduleMargin::kSmooth, ChangeVsPrior::kGrown));
  CHECK(rule_baseline_score({g0, g1}) == 0.85);

  // Size bands.
  cohort::ScreeningExam small;
  small.exam_year_index = 0;
  small.findings.push_back(
      nodule(4, NoduleMargin::kSmooth, ChangeVsPrior::kUnknown));
  CHECK(rule_baseline_score({small}) == 0.15);

  cohort::ScreeningExam mid;
  mid.exam_year_index = 0;
  mid.findings.push_back(
      nodule(10, NoduleMargin::kSmooth, ChangeVsPrior::kUnknown));
  CHECK(rule_baseline_score({mid}) == 0.60);

  cohort::ScreeningExam big;
  big.exam_year_index = 0;
  big.findings.push_back(
      nodule(17, NoduleMargin::kSmooth, ChangeVsPrior::kUnknown));
  CHECK(rule_baseline_score({big}) == 0.85);

  // Spiculated >= 8 mm is high risk; new 6-8 mm upgrades a band.
  cohort::ScreeningExam spic;
  spic.exam_year_index = 0;
  spic.findings.push_back(
      nodule(9, NoduleMargin::kSpiculated, ChangeVsPrior::kUnknown));
  CHECK(rule_baseline_score({spic}) == 0.85);

  cohort::ScreeningExam newn;
  newn.exam_year_index = 1;
  newn.findings.push_back(nodule(7, NoduleMargin::kSmooth, ChangeVsPrior::kNew));
  CHECK(rule_baseline_score({t0, newn}) == 0.60);

  // The dominant (most suspicious) nodule wins.
  cohort::ScreeningExam multi;
  multi.exam_year_index = 0;
  multi.findings.push_back(
      nodule(4, NoduleMargin::kSmooth, ChangeVsPrior::kUnknown));
  multi.findings.push_back(
      nodule(12, NoduleMargin::kSpiculated, ChangeVsPrior::kUnknown));
  CHECK(rule_baseline_score({multi}) == 0.85);

  CHECK_THROWS_AS(rule_baseline_score({}), lcr::Error);
}

TEST_CASE("evaluate_policy on an untrained uniform policy") {
  cohort::CohortConfig cfg;
  cfg.size = 60;
  Rng rng(19);
  const cohort::Cohort c = cohort::synth_cohort(cfg, rng);
  auto samples = cohort::build_samples(c, {1, 3});

  const policy::ModelShape shape{policy::Vocabulary::standard().size(), 4, 8};
  const policy::PolicyParams zero = policy::PolicyParams::zeros(shape);
  eval::EvalConfig ec;
  ec.max_completion_len = 12;
  const eval::EvalReport report = eval::evaluate_policy(zero, samples, ec);

  CHECK(report.total_samples == static_cast<int>(samples.size()));
  // A zero policy emits low-id tokens greedily; no boxed score exists.
  CHECK(report.parse_failure_rate == 1.0);
  for (const auto& [n, h] : report.horizons) {
    if (h.single_class) continue;
    // All scores 0.5: the tie-handling midpoint.
    CHECK(*h.auc == doctest::Approx(0.5).epsilon(1e-12));
  }

  // Determinism of the whole report.
  const eval::EvalReport again = eval::evaluate_policy(zero, samples, ec);
  CHECK(report.to_json().dump() == again.to_json().dump());
}

TEST_CASE("eval report JSON round-trips") {
  eval::EvalReport r;
  r.total_samples = 10;
  r.parse_failure_rate = 0.2;
  eval::HorizonReport h;
  h.horizon = 1;
  h.samples = 10;
  h.positives = 3;
  h.auc = 0.91;
  h.baseline_auc = 0.7;
  h.roc.push_back({0.0, 0.0, 2.0});
  h.roc.push_back({1.0, 1.0, 0.0});
  r.horizons[1] = h;
  const auto j = r.to_json();
  const auto back = eval::EvalReport::from_json(j);
  CHECK(back.to_json().dump() == j.dump());
}
