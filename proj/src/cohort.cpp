#include "lcr/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "lcr/error.hpp"

namespace lcr::cohort {

namespace {

double clampd(double v, double lo, double hi) {
  return std::min(hi, std::max(lo, v));
}

std::string format_id(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "P%06d", index);
  return buf;
}

}  // namespace

const std::vector<std::string>& opportunistic_labels() {
  static const std::vector<std::string> kLabels = {
      "atelectasis",
      "pleural thickening or effusion",
      "non-calcified hilar or mediastinal adenopathy or mass",
      "chest wall abnormality",
      "consolidation",
      "emphysema",
      "reticular opacities, fibrosis or scar",
      "cardiovascular abnormality",
  };
  return kLabels;
}

const char* to_string(NoduleMargin m) {
  switch (m) {
    case NoduleMargin::kSmooth: return "smooth";
    case NoduleMargin::kLobulated: return "lobulated";
    case NoduleMargin::kSpiculated: return "spiculated";
  }
  return "smooth";
}

const char* to_string(NoduleAttenuation a) {
  switch (a) {
    case NoduleAttenuation::kSolid: return "solid";
    case NoduleAttenuation::kPartSolid: return "part-solid";
    case NoduleAttenuation::kGroundGlass: return "ground-glass";
  }
  return "solid";
}

const char* to_string(ChangeVsPrior c) {
  switch (c) {
    case ChangeVsPrior::kNew: return "new";
    case ChangeVsPrior::kStable: return "stable";
    case ChangeVsPrior::kGrown: return "grown";
    case ChangeVsPrior::kShrunk: return "shrunk";
    case ChangeVsPrior::kUnknown: return "unknown";
  }
  return "unknown";
}

const char* to_string(Sex s) {
  return s == Sex::kMale ? "male" : "female";
}

void PatientRecord::validate() const {
  if (patient_id.empty()) throw_data("patient_id empty");
  if (demographics.age < 0) throw_data("age negative");
  if (smoking.cigarettes_per_day < 0 || smoking.years_smoked < 0) {
    throw_data("smoking fields negative");
  }
  const double expected =
      smoking.cigarettes_per_day * smoking.years_smoked / 20.0;
  if (std::abs(smoking.pack_years - expected) > 1e-9) {
    throw_data("pack_years inconsistent with cigarettes_per_day and years_smoked");
  }
  const bool current = smoking.status == SmokingStatus::kCurrent;
  if (current != (smoking.years_since_quit == 0.0)) {
    throw_data("years_since_quit must be 0 iff current smoker");
  }
  if (family_lung_cancer_history < 0) throw_data("family history negative");
}

void ImagingFinding::validate() const {
  if (kind == FindingKind::kNodule) {
    if (size_mm <= 0) throw_data("nodule size must be positive");
    if (location.empty()) throw_data("nodule location empty");
    if (!abnormality.empty()) throw_data("nodule with abnormality label");
  } else {
    if (abnormality.empty()) throw_data("opportunistic finding without label");
    if (size_mm != 0 || !location.empty()) {
      throw_data("opportunistic finding with nodule fields");
    }
  }
}

void ScreeningExam::validate() const {
  if (exam_year_index < 0 || exam_year_index > 2) {
    throw_data("exam_year_index must be in {0,1,2}");
  }
  for (const auto& f : findings) f.validate();
}

void Outcome::validate() const {
  if (followup_years < 0) throw_data("followup_years negative");
  if (cancer_confirmed_years) {
    if (*cancer_confirmed_years < 0) throw_data("cancer_confirmed_years negative");
    if (*cancer_confirmed_years > followup_years) {
      throw_data("cancer_confirmed_years exceeds followup_years");
    }
  }
}

void LabeledSample::validate() const {
  patient.validate();
  if (exams.empty()) throw_data("sample without exams");
  for (size_t i = 0; i < exams.size(); ++i) {
    exams[i].validate();
    if (i > 0 && exams[i - 1].exam_year_index >= exams[i].exam_year_index) {
      throw_data("exams not sorted by year");
    }
  }
  if (exams.back().exam_year_index != reference_year) {
    throw_data("last exam does not match reference_year");
  }
  if (horizon_n < 1 || horizon_n > 6) throw_data("horizon out of range");
  if (label == Label::kExcluded) throw_data("excluded sample materialized");
}

void CohortConfig::validate() const {
  if (size <= 0) throw_data("cohort size must be positive");
  if (positive_prevalence < 0.03 || positive_prevalence > 0.07) {
    throw_data("positive_prevalence outside [0.03, 0.07]");
  }
  const double* coefs[] = {
      &coefficients.pack_years,    &coefficients.age,
      &coefficients.nodule_size,   &coefficients.nodule_margin,
      &coefficients.nodule_growth, &coefficients.emphysema,
      &coefficients.family_history};
  for (const double* c : coefs) {
    if (!(*c >= 0)) throw_data("risk coefficients must be non-negative");
  }
}

Label derive_label(const Outcome& outcome, int horizon_n) {
  if (horizon_n < 1 || horizon_n > 6) throw_data("horizon must be in [1, 6]");
  outcome.validate();
  const double n = static_cast<double>(horizon_n);
  const bool cancer_within =
      outcome.cancer_confirmed_years && *outcome.cancer_confirmed_years <= n;
  const bool followed = outcome.followup_years >= n;
  if (cancer_within && followed) return Label::kPositive;
  if (!cancer_within && followed && !outcome.died_of_lung_cancer) {
    return Label::kNegative;
  }
  return Label::kExcluded;
}

namespace {

// Everything random about one patient is drawn up front so the intercept
// calibration can re-evaluate outcomes as a pure function of b0.
struct PatientDraws {
  PatientRecord record;
  std::vector<ScreeningExam> exams;          // years 0..2, before truncation
  std::vector<LatentTerms> partial_terms;    // per exam, baseline left at 0
  double u_event = 0;                        // inverse-CDF draw for cancer time
  double admin_followup = 0;                 // years from T0
  bool death_if_cancer = false;              // lung-cancer death after diagnosis
  double death_delay = 0;                    // years after confirmation
  bool occult_death = false;                 // LC death with no confirmed cancer
  double occult_time_frac = 0;               // fraction of admin follow-up
};

struct MaterializedPatient {
  // Per existing exam: outcome measured from that exam.
  std::vector<int> exam_years;
  std::vector<Outcome> outcomes;
};

constexpr int kHazardYears = 9;  // events may fall anywhere in [0, 9)

std::vector<double> yearly_probabilities(const PatientDraws& p, double b0) {
  std::vector<double> q(kHazardYears);
  for (int j = 0; j < kHazardYears; ++j) {
    const LatentTerms& t =
        p.partial_terms[static_cast<size_t>(std::min(j, 2))];
    const double z = b0 + t.logit();  // partial terms carry baseline 0
    q[static_cast<size_t>(j)] = 1.0 / (1.0 + std::exp(-z));
  }
  return q;
}

// Inverts the yearly-hazard CDF at the patient's fixed uniform draw.
// Returns the cancer time in years from T0, or nullopt if no event occurs
// within the modeled window.
std::optional<double> invert_event_time(const PatientDraws& p, double b0) {
  const std::vector<double> q = yearly_probabilities(p, b0);
  double survival = 1.0;
  for (int j = 0; j < kHazardYears; ++j) {
    const double qj = q[static_cast<size_t>(j)];
    const double lo = 1.0 - survival;
    const double hi = 1.0 - survival * (1.0 - qj);
    if (p.u_event < hi) {
      const double frac = (p.u_event - lo) / (hi - lo);
      double t = snap_to_day(j + frac);
      if (t <= j) t = j + kDayResolution;  // confirmation follows the screen
      return t;
    }
    survival *= 1.0 - qj;
  }
  return std::nullopt;
}

MaterializedPatient materialize(const PatientDraws& p, double b0) {
  MaterializedPatient out;
  const std::optional<double> cancer_time = invert_event_time(p, b0);

  double followup_end = p.admin_followup;
  bool died = false;
  std::optional<double> confirmed;  // absolute years from T0

  if (cancer_time && *cancer_time <= p.admin_followup) {
    confirmed = *cancer_time;
    if (p.death_if_cancer) {
      const double death_time = snap_to_day(*cancer_time + p.death_delay);
      if (death_time <= p.admin_followup) {
        died = true;
        followup_end = death_time;
      }
    }
  } else if (!cancer_time && p.occult_death) {
    died = true;
    followup_end = snap_to_day(
        clampd(p.occult_time_frac * p.admin_followup, 1.0, p.admin_followup));
  }

  for (int k = 0; k < 3; ++k) {
    if (static_cast<double>(k) > followup_end) break;
    if (confirmed && static_cast<double>(k) >= *confirmed) break;
    if (cancer_time && static_cast<double>(k) >= *cancer_time) break;
    Outcome o;
    if (confirmed) o.cancer_confirmed_years = *confirmed - k;
    o.followup_years = followup_end - k;
    o.died_of_lung_cancer = died;
    out.exam_years.push_back(k);
    out.outcomes.push_back(o);
  }
  return out;
}

double pooled_one_year_prevalence(const std::vector<PatientDraws>& draws,
                                  double b0) {
  long positives = 0;
  long negatives = 0;
  for (const auto& p : draws) {
    const MaterializedPatient m = materialize(p, b0);
    for (const Outcome& o : m.outcomes) {
      switch (derive_label(o, 1)) {
        case Label::kPositive: ++positives; break;
        case Label::kNegative: ++negatives; break;
        case Label::kExcluded: break;
      }
    }
  }
  const long kept = positives + negatives;
  if (kept == 0) return 0.0;
  return static_cast<double>(positives) / static_cast<double>(kept);
}

const char* const kLobes[] = {"right upper lobe", "right middle lobe",
                              "right lower lobe", "left upper lobe",
                              "left lower lobe"};

struct NoduleState {
  std::string location;
  int size_mm;
  NoduleMargin margin;
  NoduleAttenuation attenuation;
  ChangeVsPrior change;
};

NoduleState draw_nodule(Rng& rng, double aggressiveness, ChangeVsPrior change) {
  NoduleState n;
  n.location = kLobes[rng.below(5)];
  const double u = rng.next_double();
  n.size_mm = 3 + static_cast<int>(-std::log(1.0 - u) * 4.0 *
                                   (1.0 + 0.8 * aggressiveness));
  n.size_mm = std::clamp(n.size_mm, 2, 28);
  const double p_spic =
      clampd(0.08 + 0.03 * n.size_mm / 5.0 + 0.18 * aggressiveness, 0.0, 0.6);
  if (rng.bernoulli(p_spic)) {
    n.margin = NoduleMargin::kSpiculated;
  } else {
    n.margin = rng.bernoulli(0.28) ? NoduleMargin::kLobulated
                                   : NoduleMargin::kSmooth;
  }
  const double ua = rng.next_double();
  n.attenuation = ua < 0.72   ? NoduleAttenuation::kSolid
                  : ua < 0.86 ? NoduleAttenuation::kPartSolid
                              : NoduleAttenuation::kGroundGlass;
  n.change = change;
  return n;
}

PatientRecord draw_patient_record(Rng& rng, int index) {
  PatientRecord r;
  r.patient_id = format_id(index);

  r.demographics.age = 55 + static_cast<int>(rng.below(20));
  r.demographics.sex = rng.bernoulli(0.41) ? Sex::kFemale : Sex::kMale;
  const double ur = rng.next_double();
  r.demographics.race = ur < 0.90   ? "white"
                        : ur < 0.94 ? "black"
                        : ur < 0.96 ? "asian"
                                    : "other";
  r.demographics.ethnicity =
      rng.bernoulli(0.02) ? "hispanic" : "not hispanic";
  const bool male = r.demographics.sex == Sex::kMale;
  r.demographics.height_cm = std::clamp(
      static_cast<int>((male ? 176.0 : 163.0) + rng.normal() * 7.0), 145, 205);
  r.demographics.weight_kg = std::clamp(
      static_cast<int>((male ? 86.0 : 72.0) + rng.normal() * 15.0), 40, 170);
  static const char* const kEducation[] = {
      "less than high school", "high school graduate", "some college",
      "college graduate", "postgraduate degree"};
  const double ue = rng.next_double();
  r.demographics.education = kEducation[ue < 0.12   ? 0
                                        : ue < 0.44 ? 1
                                        : ue < 0.74 ? 2
                                        : ue < 0.91 ? 3
                                                    : 4];

  r.smoking.status = rng.bernoulli(0.48) ? SmokingStatus::kCurrent
                                         : SmokingStatus::kFormer;
  r.smoking.cigarettes_per_day = 10.0 + 5.0 * static_cast<double>(rng.below(9));
  double years = 20.0 + static_cast<double>(rng.below(35));
  const double min_years =
      std::ceil(30.0 * 20.0 / r.smoking.cigarettes_per_day);  // >= 30 pack-years
  years = std::max(years, min_years);
  years = std::min(years, static_cast<double>(r.demographics.age - 16));
  r.smoking.years_smoked = years;
  r.smoking.pack_years = r.smoking.cigarettes_per_day * years / 20.0;
  r.smoking.years_since_quit =
      r.smoking.status == SmokingStatus::kCurrent
          ? 0.0
          : 1.0 + static_cast<double>(rng.below(15));

  if (rng.bernoulli(0.18)) r.disease_history.push_back("emphysema");
  if (rng.bernoulli(0.12)) r.disease_history.push_back("copd");
  if (rng.bernoulli(0.08)) r.disease_history.push_back("asthma");
  if (rng.bernoulli(0.10)) r.disease_history.push_back("prior pneumonia");
  if (rng.bernoulli(0.02)) r.disease_history.push_back("pulmonary fibrosis");

  if (rng.bernoulli(0.08)) {
    static const char* const kCancers[] = {"breast cancer", "prostate cancer",
                                           "colon cancer", "bladder cancer",
                                           "melanoma"};
    r.personal_cancer_history.push_back(kCancers[rng.below(5)]);
  }

  const double uf = rng.next_double();
  r.family_lung_cancer_history = uf < 0.78 ? 0 : uf < 0.94 ? 1 : uf < 0.99 ? 2 : 3;

  if (rng.bernoulli(0.08)) r.work_history.push_back("asbestos exposure");
  if (rng.bernoulli(0.06)) r.work_history.push_back("diesel exhaust exposure");
  if (rng.bernoulli(0.04)) r.work_history.push_back("silica dust exposure");
  if (rng.bernoulli(0.04)) r.work_history.push_back("welding fumes exposure");

  r.alcohol_drinks_per_week =
      std::clamp(static_cast<int>(rng.normal() * 6.0 + 4.0), 0, 40);
  return r;
}

LatentTerms compute_partial_terms(const RiskCoefficients& c,
                                  const PatientRecord& r,
                                  const ScreeningExam& exam,
                                  bool emphysema_seen_on_imaging) {
  LatentTerms t;
  t.baseline = 0.0;  // calibrated intercept added later
  t.smoking = c.pack_years * std::min(r.smoking.pack_years, 90.0) / 90.0;
  t.age = c.age *
          clampd((r.demographics.age + exam.exam_year_index - 55.0) / 20.0, 0.0,
                 1.2);

  int dominant_size = 0;
  double margin_score = 0.0;
  double growth_score = 0.0;
  for (const auto& f : exam.findings) {
    if (f.kind != FindingKind::kNodule) continue;
    dominant_size = std::max(dominant_size, f.size_mm);
    const double ms = f.margin == NoduleMargin::kSpiculated  ? 1.0
                      : f.margin == NoduleMargin::kLobulated ? 0.4
                                                             : 0.0;
    margin_score = std::max(margin_score, ms);
    const double gs = f.change == ChangeVsPrior::kGrown ? 1.0
                      : f.change == ChangeVsPrior::kNew ? 0.5
                                                        : 0.0;
    growth_score = std::max(growth_score, gs);
  }
  t.nodule_size = c.nodule_size * std::min(dominant_size, 25) / 25.0;
  t.nodule_margin = c.nodule_margin * margin_score;
  t.nodule_growth = c.nodule_growth * growth_score;

  bool emph = emphysema_seen_on_imaging;
  for (const auto& d : r.disease_history) {
    if (d == "emphysema") emph = true;
  }
  t.emphysema = c.emphysema * (emph ? 1.0 : 0.0);
  t.family_history =
      c.family_history * std::min(r.family_lung_cancer_history, 3) / 3.0;
  return t;
}

PatientDraws draw_patient(const CohortConfig& config, Rng& rng, int index) {
  PatientDraws p;
  p.record = draw_patient_record(rng, index);

  const double frailty = rng.normal();
  const double aggr = std::max(0.0, frailty);

  // Nodule histories across the three screens.
  std::vector<NoduleState> nodules;
  const double p_nodule = clampd(0.20 + 0.12 * aggr, 0.05, 0.75);
  if (rng.bernoulli(p_nodule)) {
    nodules.push_back(draw_nodule(rng, aggr, ChangeVsPrior::kUnknown));
    if (rng.bernoulli(0.15)) {
      nodules.push_back(draw_nodule(rng, aggr, ChangeVsPrior::kUnknown));
    }
  }

  bool emphysema_imaging = false;
  std::vector<std::string> standing_opportunistic;

  for (int k = 0; k < 3; ++k) {
    ScreeningExam exam;
    exam.exam_year_index = k;

    if (k > 0) {
      std::vector<NoduleState> next;
      for (auto n : nodules) {
        if (rng.bernoulli(0.10)) continue;  // resolved
        const double p_grow = clampd(0.10 + 0.30 * aggr, 0.0, 0.6);
        if (rng.bernoulli(p_grow)) {
          n.size_mm = std::min(28, n.size_mm + 1 + static_cast<int>(rng.below(5)));
          n.change = ChangeVsPrior::kGrown;
          if (n.margin == NoduleMargin::kSmooth && rng.bernoulli(0.3)) {
            n.margin = NoduleMargin::kLobulated;
          }
        } else if (rng.bernoulli(0.08)) {
          n.size_mm = std::max(2, n.size_mm - 1 - static_cast<int>(rng.below(2)));
          n.change = ChangeVsPrior::kShrunk;
        } else {
          n.change = ChangeVsPrior::kStable;
        }
        next.push_back(n);
      }
      if (next.size() < 3 && rng.bernoulli(0.08 + 0.05 * aggr)) {
        next.push_back(draw_nodule(rng, aggr, ChangeVsPrior::kNew));
      }
      nodules = std::move(next);
    }

    for (const auto& n : nodules) {
      ImagingFinding f;
      f.kind = FindingKind::kNodule;
      f.location = n.location;
      f.size_mm = n.size_mm;
      f.margin = n.margin;
      f.attenuation = n.attenuation;
      f.change = n.change;
      exam.findings.push_back(f);
    }

    // Opportunistic findings: persistent once seen, occasionally new.
    bool has_emph_history = false;
    for (const auto& d : p.record.disease_history) {
      if (d == "emphysema") has_emph_history = true;
    }
    auto maybe_add = [&](const std::string& label, double p_new) {
      const bool standing =
          std::find(standing_opportunistic.begin(),
                    standing_opportunistic.end(),
                    label) != standing_opportunistic.end();
      if (standing) {
        ImagingFinding f;
        f.kind = FindingKind::kOpportunistic;
        f.abnormality = label;
        f.change = ChangeVsPrior::kStable;
        exam.findings.push_back(f);
      } else if (rng.bernoulli(p_new)) {
        ImagingFinding f;
        f.kind = FindingKind::kOpportunistic;
        f.abnormality = label;
        f.change = k == 0 ? ChangeVsPrior::kUnknown : ChangeVsPrior::kNew;
        exam.findings.push_back(f);
        standing_opportunistic.push_back(label);
      }
    };
    maybe_add("emphysema", has_emph_history ? 0.55 : 0.04);
    maybe_add("atelectasis", 0.04);
    maybe_add("pleural thickening or effusion", 0.05);
    maybe_add("non-calcified hilar or mediastinal adenopathy or mass",
              0.02 + 0.02 * aggr);
    maybe_add("consolidation", 0.03);
    maybe_add("reticular opacities, fibrosis or scar", 0.05);
    maybe_add("cardiovascular abnormality",
              0.10 + 0.004 * (p.record.demographics.age - 55));
    maybe_add("chest wall abnormality", 0.015);

    for (const auto& f : exam.findings) {
      if (f.kind == FindingKind::kOpportunistic && f.abnormality == "emphysema") {
        emphysema_imaging = true;
      }
    }

    p.exams.push_back(exam);
    p.partial_terms.push_back(compute_partial_terms(
        config.coefficients, p.record, exam, emphysema_imaging));
  }

  p.u_event = rng.next_double();
  p.admin_followup = snap_to_day(rng.bernoulli(0.85) ? rng.uniform(6.5, 8.5)
                                                     : rng.uniform(0.5, 8.0));
  p.death_if_cancer = rng.bernoulli(0.35);
  p.death_delay = snap_to_day(0.15 - 1.2 * std::log(1.0 - rng.next_double()));
  p.occult_death = rng.bernoulli(0.008);
  p.occult_time_frac = rng.next_double();
  return p;
}

}  // namespace

Cohort synth_cohort(const CohortConfig& config, Rng& rng) {
  config.validate();

  std::vector<PatientDraws> draws;
  draws.reserve(static_cast<size_t>(config.size));
  for (int i = 0; i < config.size; ++i) {
    Rng patient_rng = rng.fork(static_cast<std::uint64_t>(i));
    draws.push_back(draw_patient(config, patient_rng, i));
  }

  // Calibrate the intercept so pooled 1-year prevalence matches the target.
  // All randomness is frozen in `draws`, so prevalence is a monotone step
  // function of b0 and bisection lands within one sample of the target.
  double lo = -14.0, hi = 2.0;
  for (int iter = 0; iter < 64; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (pooled_one_year_prevalence(draws, mid) < config.positive_prevalence) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double b0 = 0.5 * (lo + hi);

  Cohort cohort;
  cohort.reserve(draws.size());
  for (const auto& p : draws) {
    const MaterializedPatient m = materialize(p, b0);
    CohortEntry entry;
    entry.patient = p.record;
    entry.patient.validate();
    for (size_t i = 0; i < m.exam_years.size(); ++i) {
      const int k = m.exam_years[i];
      SynthExam se;
      se.exam = p.exams[static_cast<size_t>(k)];
      se.exam.validate();
      se.outcome = m.outcomes[i];
      se.outcome.validate();
      se.latent = p.partial_terms[static_cast<size_t>(k)];
      se.latent.baseline = b0;
      entry.exams.push_back(std::move(se));
    }
    cohort.push_back(std::move(entry));
  }
  return cohort;
}

std::vector<LabeledSample> build_samples(const Cohort& cohort,
                                         const std::set<int>& horizons) {
  for (int n : horizons) {
    if (n < 1 || n > 6) throw_data("horizon outside [1, 6]");
  }
  std::vector<LabeledSample> samples;
  for (const auto& entry : cohort) {
    std::vector<ScreeningExam> prefix;
    for (const auto& se : entry.exams) {
      prefix.push_back(se.exam);
      for (int n : horizons) {
        const Label label = derive_label(se.outcome, n);
        if (label == Label::kExcluded) continue;
        LabeledSample s;
        s.patient = entry.patient;
        s.exams = prefix;
        s.reference_year = se.exam.exam_year_index;
        s.horizon_n = n;
        s.label = label;
        s.latent = se.latent;
        samples.push_back(std::move(s));
      }
    }
  }
  return samples;
}

namespace {

nlohmann::json finding_to_json(const ImagingFinding& f) {
  nlohmann::json j;
  if (f.kind == FindingKind::kNodule) {
    j["kind"] = "nodule";
    j["location"] = f.location;
    j["size_mm"] = f.size_mm;
    j["margin"] = to_string(f.margin);
    j["attenuation"] = to_string(f.attenuation);
  } else {
    j["kind"] = "opportunistic";
    j["abnormality"] = f.abnormality;
  }
  j["change"] = to_string(f.change);
  return j;
}

ImagingFinding finding_from_json(const nlohmann::json& j) {
  ImagingFinding f;
  const std::string kind = j.at("kind").get<std::string>();
  auto parse_change = [](const std::string& s) {
    if (s == "new") return ChangeVsPrior::kNew;
    if (s == "stable") return ChangeVsPrior::kStable;
    if (s == "grown") return ChangeVsPrior::kGrown;
    if (s == "shrunk") return ChangeVsPrior::kShrunk;
    return ChangeVsPrior::kUnknown;
  };
  f.change = parse_change(j.at("change").get<std::string>());
  if (kind == "nodule") {
    f.kind = FindingKind::kNodule;
    f.location = j.at("location").get<std::string>();
    f.size_mm = j.at("size_mm").get<int>();
    const std::string m = j.at("margin").get<std::string>();
    f.margin = m == "spiculated"  ? NoduleMargin::kSpiculated
               : m == "lobulated" ? NoduleMargin::kLobulated
                                  : NoduleMargin::kSmooth;
    const std::string a = j.at("attenuation").get<std::string>();
    f.attenuation = a == "part-solid"   ? NoduleAttenuation::kPartSolid
                    : a == "ground-glass" ? NoduleAttenuation::kGroundGlass
                                          : NoduleAttenuation::kSolid;
  } else {
    f.kind = FindingKind::kOpportunistic;
    f.abnormality = j.at("abnormality").get<std::string>();
  }
  return f;
}

nlohmann::json latent_to_json(const LatentTerms& t) {
  return {{"baseline", t.baseline},
          {"smoking", t.smoking},
          {"age", t.age},
          {"nodule_size", t.nodule_size},
          {"nodule_margin", t.nodule_margin},
          {"nodule_growth", t.nodule_growth},
          {"emphysema", t.emphysema},
          {"family_history", t.family_history}};
}

LatentTerms latent_from_json(const nlohmann::json& j) {
  LatentTerms t;
  t.baseline = j.at("baseline").get<double>();
  t.smoking = j.at("smoking").get<double>();
  t.age = j.at("age").get<double>();
  t.nodule_size = j.at("nodule_size").get<double>();
  t.nodule_margin = j.at("nodule_margin").get<double>();
  t.nodule_growth = j.at("nodule_growth").get<double>();
  t.emphysema = j.at("emphysema").get<double>();
  t.family_history = j.at("family_history").get<double>();
  return t;
}

}  // namespace

nlohmann::json to_json(const CohortEntry& entry) {
  const PatientRecord& r = entry.patient;
  nlohmann::json j;
  j["patient_id"] = r.patient_id;
  j["demographics"] = {{"age", r.demographics.age},
                       {"sex", to_string(r.demographics.sex)},
                       {"race", r.demographics.race},
                       {"ethnicity", r.demographics.ethnicity},
                       {"height_cm", r.demographics.height_cm},
                       {"weight_kg", r.demographics.weight_kg},
                       {"education", r.demographics.education}};
  j["smoking"] = {
      {"status",
       r.smoking.status == SmokingStatus::kCurrent ? "current" : "former"},
      {"cigarettes_per_day", r.smoking.cigarettes_per_day},
      {"years_smoked", r.smoking.years_smoked},
      {"years_since_quit", r.smoking.years_since_quit},
      {"pack_years", r.smoking.pack_years}};
  j["disease_history"] = r.disease_history;
  j["personal_cancer_history"] = r.personal_cancer_history;
  j["family_lung_cancer_history"] = r.family_lung_cancer_history;
  j["work_history"] = r.work_history;
  j["alcohol_drinks_per_week"] = r.alcohol_drinks_per_week;

  nlohmann::json exams = nlohmann::json::array();
  for (const auto& se : entry.exams) {
    nlohmann::json e;
    e["exam_year_index"] = se.exam.exam_year_index;
    nlohmann::json findings = nlohmann::json::array();
    for (const auto& f : se.exam.findings) findings.push_back(finding_to_json(f));
    e["findings"] = findings;
    nlohmann::json o;
    if (se.outcome.cancer_confirmed_years) {
      o["cancer_confirmed_years"] = *se.outcome.cancer_confirmed_years;
    }
    o["followup_years"] = se.outcome.followup_years;
    o["died_of_lung_cancer"] = se.outcome.died_of_lung_cancer;
    e["outcome"] = o;
    e["latent"] = latent_to_json(se.latent);
    exams.push_back(e);
  }
  j["exams"] = exams;
  return j;
}

CohortEntry cohort_entry_from_json(const nlohmann::json& j) {
  CohortEntry entry;
  PatientRecord& r = entry.patient;
  r.patient_id = j.at("patient_id").get<std::string>();
  const auto& d = j.at("demographics");
  r.demographics.age = d.at("age").get<int>();
  r.demographics.sex =
      d.at("sex").get<std::string>() == "female" ? Sex::kFemale : Sex::kMale;
  r.demographics.race = d.at("race").get<std::string>();
  r.demographics.ethnicity = d.at("ethnicity").get<std::string>();
  r.demographics.height_cm = d.at("height_cm").get<int>();
  r.demographics.weight_kg = d.at("weight_kg").get<int>();
  r.demographics.education = d.at("education").get<std::string>();
  const auto& s = j.at("smoking");
  r.smoking.status = s.at("status").get<std::string>() == "current"
                         ? SmokingStatus::kCurrent
                         : SmokingStatus::kFormer;
  r.smoking.cigarettes_per_day = s.at("cigarettes_per_day").get<double>();
  r.smoking.years_smoked = s.at("years_smoked").get<double>();
  r.smoking.years_since_quit = s.at("years_since_quit").get<double>();
  r.smoking.pack_years = s.at("pack_years").get<double>();
  r.disease_history = j.at("disease_history").get<std::vector<std::string>>();
  r.personal_cancer_history =
      j.at("personal_cancer_history").get<std::vector<std::string>>();
  r.family_lung_cancer_history = j.at("family_lung_cancer_history").get<int>();
  r.work_history = j.at("work_history").get<std::vector<std::string>>();
  r.alcohol_drinks_per_week = j.at("alcohol_drinks_per_week").get<int>();

  for (const auto& e : j.at("exams")) {
    SynthExam se;
    se.exam.exam_year_index = e.at("exam_year_index").get<int>();
    for (const auto& fj : e.at("findings")) {
      se.exam.findings.push_back(finding_from_json(fj));
    }
    const auto& o = e.at("outcome");
    if (o.contains("cancer_confirmed_years")) {
      se.outcome.cancer_confirmed_years =
          o.at("cancer_confirmed_years").get<double>();
    }
    se.outcome.followup_years = o.at("followup_years").get<double>();
    se.outcome.died_of_lung_cancer = o.at("died_of_lung_cancer").get<bool>();
    se.latent = latent_from_json(e.at("latent"));
    entry.exams.push_back(std::move(se));
  }
  return entry;
}

}  // namespace lcr::cohort
