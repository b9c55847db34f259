#include "lcr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lcr/error.hpp"
#include "lcr/parse.hpp"

namespace lcr::eval {

using cohort::ChangeVsPrior;
using cohort::FindingKind;
using cohort::NoduleMargin;
using cohort::ScreeningExam;

double roc_auc(const std::vector<double>& scores,
               const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw_data("scores and labels differ in length");
  }
  long positives = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw_data("labels must be binary");
    positives += l;
  }
  const long negatives = static_cast<long>(labels.size()) - positives;
  if (positives == 0 || negatives == 0) {
    throw_data("AUC undefined for single-class inputs");
  }

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // Average ranks over tied scores, then the rank-sum statistic.
  double rank_sum_pos = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) +
                                   static_cast<double>(j));  // 1-based
    for (size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double p = static_cast<double>(positives);
  const double n = static_cast<double>(negatives);
  return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n);
}

std::vector<RocPoint> roc_points(const std::vector<double>& scores,
                                 const std::vector<int>& labels) {
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  long positives = 0, negatives = 0;
  for (int l : labels) (l == 1 ? positives : negatives) += 1;

  std::vector<RocPoint> points;
  points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  long tp = 0, fp = 0;
  size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    while (i < order.size() && scores[order[i]] == threshold) {
      (labels[order[i]] == 1 ? tp : fp) += 1;
      ++i;
    }
    points.push_back({negatives ? static_cast<double>(fp) / negatives : 0.0,
                      positives ? static_cast<double>(tp) / positives : 0.0,
                      threshold});
  }
  return points;
}

double rule_baseline_score(const std::vector<ScreeningExam>& exams) {
  if (exams.empty()) throw_data("baseline score needs at least one exam");
  const ScreeningExam& latest = exams.back();

  double category = 0.05;  // no current nodule
  for (const auto& f : latest.findings) {
    if (f.kind != FindingKind::kNodule) continue;
    double c;
    if (f.size_mm < 6)
      c = 0.15;
    else if (f.size_mm < 8)
      c = f.change == ChangeVsPrior::kNew ? 0.60 : 0.35;
    else if (f.size_mm < 15)
      c = 0.60;
    else
      c = 0.85;
    if (f.size_mm >= 15) c = 0.85;
    if (f.margin == NoduleMargin::kSpiculated && f.size_mm >= 8) c = 0.85;
    if (f.change == ChangeVsPrior::kGrown) c = 0.85;
    category = std::max(category, c);
  }
  return category;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["total_samples"] = total_samples;
  j["parse_failure_rate"] = parse_failure_rate;
  nlohmann::json hs = nlohmann::json::array();
  for (const auto& [n, h] : horizons) {
    nlohmann::json hj;
    hj["horizon"] = n;
    hj["samples"] = h.samples;
    hj["positives"] = h.positives;
    hj["single_class"] = h.single_class;
    if (h.auc) hj["auc"] = *h.auc;
    if (h.baseline_auc) hj["baseline_auc"] = *h.baseline_auc;
    nlohmann::json roc = nlohmann::json::array();
    for (const auto& p : h.roc) {
      roc.push_back({{"fpr", p.fpr},
                     {"tpr", p.tpr},
                     {"threshold", std::isfinite(p.threshold)
                                       ? p.threshold
                                       : 2.0}});
    }
    hj["roc"] = roc;
    hs.push_back(hj);
  }
  j["horizons"] = hs;
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  r.total_samples = j.at("total_samples").get<int>();
  r.parse_failure_rate = j.at("parse_failure_rate").get<double>();
  for (const auto& hj : j.at("horizons")) {
    HorizonReport h;
    h.horizon = hj.at("horizon").get<int>();
    h.samples = hj.at("samples").get<int>();
    h.positives = hj.at("positives").get<int>();
    h.single_class = hj.at("single_class").get<bool>();
    if (hj.contains("auc")) h.auc = hj.at("auc").get<double>();
    if (hj.contains("baseline_auc")) {
      h.baseline_auc = hj.at("baseline_auc").get<double>();
    }
    if (hj.contains("roc")) {
      for (const auto& pj : hj.at("roc")) {
        h.roc.push_back({pj.at("fpr").get<double>(), pj.at("tpr").get<double>(),
                         pj.at("threshold").get<double>()});
      }
    }
    r.horizons[h.horizon] = std::move(h);
  }
  return r;
}

EvalReport evaluate_policy(const policy::PolicyParams& params,
                           const std::vector<cohort::LabeledSample>& samples,
                           const EvalConfig& config) {
  const policy::Vocabulary& vocab = policy::Vocabulary::standard();
  const Rng base(config.render_seed);

  struct PerHorizon {
    std::vector<double> scores;
    std::vector<double> baseline;
    std::vector<int> labels;
  };
  std::map<int, PerHorizon> buckets;

  int failures = 0;
  for (size_t i = 0; i < samples.size(); ++i) {
    const auto& sample = samples[i];
    Rng render_rng = base.fork(i);
    const render::RenderedInput rendered =
        render::render_record(sample, config.style, render_rng);
    const std::vector<policy::TokenId> prompt =
        vocab.encode(rendered.text + "\n");

    Rng unused(0);  // greedy decoding consumes no randomness
    const policy::Completion completion = policy::sample_completion(
        params, prompt, config.max_completion_len, 0.0, unused);
    const std::string text = vocab.decode(completion.output_tokens);
    const auto split = parse::split_sections(text);
    const auto parsed = parse::extract_score(split.answer);

    double score = 0.5;  // parse failures score as maximally uninformative
    if (parsed) {
      score = parsed->value;
    } else {
      ++failures;
    }

    PerHorizon& b = buckets[sample.horizon_n];
    b.scores.push_back(score);
    b.baseline.push_back(rule_baseline_score(sample.exams));
    b.labels.push_back(sample.label == cohort::Label::kPositive ? 1 : 0);
  }

  EvalReport report;
  report.total_samples = static_cast<int>(samples.size());
  report.parse_failure_rate =
      samples.empty() ? 0.0
                      : static_cast<double>(failures) /
                            static_cast<double>(samples.size());

  for (auto& [n, b] : buckets) {
    HorizonReport h;
    h.horizon = n;
    h.samples = static_cast<int>(b.labels.size());
    h.positives = static_cast<int>(
        std::count(b.labels.begin(), b.labels.end(), 1));
    const bool single =
        h.positives == 0 || h.positives == h.samples;
    h.single_class = single;
    if (!single) {
      h.auc = roc_auc(b.scores, b.labels);
      h.baseline_auc = roc_auc(b.baseline, b.labels);
      h.roc = roc_points(b.scores, b.labels);
    }
    report.horizons[n] = std::move(h);
  }
  return report;
}

}  // namespace lcr::eval
