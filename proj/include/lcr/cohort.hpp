#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "lcr/rng.hpp"

namespace lcr::cohort {

// Years are stored as real values snapped to a 1/365 day grid so horizon
// comparisons never hinge on sub-day float noise.
inline constexpr double kDayResolution = 1.0 / 365.0;

inline double snap_to_day(double years) {
  double d = years * 365.0;
  double r = static_cast<double>(static_cast<long long>(d + (d >= 0 ? 0.5 : -0.5)));
  return r / 365.0;
}

enum class Sex { kMale, kFemale };
enum class SmokingStatus { kCurrent, kFormer };

struct Demographics {
  int age = 0;  // years at enrollment
  Sex sex = Sex::kMale;
  std::string race;
  std::string ethnicity;
  int height_cm = 0;
  int weight_kg = 0;
  std::string education;
};

struct SmokingHistory {
  SmokingStatus status = SmokingStatus::kFormer;
  double cigarettes_per_day = 0;
  double years_smoked = 0;
  double years_since_quit = 0;  // 0 iff current
  double pack_years = 0;        // cigarettes_per_day * years_smoked / 20
};

struct PatientRecord {
  std::string patient_id;
  Demographics demographics;
  SmokingHistory smoking;
  std::vector<std::string> disease_history;
  std::vector<std::string> personal_cancer_history;
  int family_lung_cancer_history = 0;  // affected first-degree relatives
  std::vector<std::string> work_history;
  int alcohol_drinks_per_week = 0;

  // Throws ErrorCode::kData when a type invariant is violated.
  void validate() const;
};

enum class FindingKind { kNodule, kOpportunistic };
enum class NoduleMargin { kSmooth, kLobulated, kSpiculated };
enum class NoduleAttenuation { kSolid, kPartSolid, kGroundGlass };
enum class ChangeVsPrior { kNew, kStable, kGrown, kShrunk, kUnknown };

// Fixed NLST-style list of non-nodule abnormalities.
const std::vector<std::string>& opportunistic_labels();

struct ImagingFinding {
  FindingKind kind = FindingKind::kNodule;
  // Nodule fields, populated iff kind == kNodule.
  std::string location;
  int size_mm = 0;
  NoduleMargin margin = NoduleMargin::kSmooth;
  NoduleAttenuation attenuation = NoduleAttenuation::kSolid;
  // Opportunistic label, populated iff kind == kOpportunistic.
  std::string abnormality;
  ChangeVsPrior change = ChangeVsPrior::kUnknown;

  void validate() const;
};

struct ScreeningExam {
  int exam_year_index = 0;  // 0, 1 or 2
  std::vector<ImagingFinding> findings;

  void validate() const;
};

struct Outcome {
  std::optional<double> cancer_confirmed_years;  // from the reference exam
  double followup_years = 0;                     // from the reference exam
  bool died_of_lung_cancer = false;

  void validate() const;
};

enum class Label { kNegative = 0, kPositive = 1, kExcluded = 2 };

// Per-factor terms of the generator's logistic risk model for one exam.
// Oracle-side data: consumed by the scripted teacher and by tests, never
// rendered into model inputs.
struct LatentTerms {
  double baseline = 0;
  double smoking = 0;
  double age = 0;
  double nodule_size = 0;
  double nodule_margin = 0;
  double nodule_growth = 0;
  double emphysema = 0;
  double family_history = 0;

  double logit() const {
    return baseline + smoking + age + nodule_size + nodule_margin +
           nodule_growth + emphysema + family_history;
  }
  // One-year cumulative incidence implied by the terms.
  double probability() const { return 1.0 / (1.0 + std::exp(-logit())); }
};

struct LabeledSample {
  PatientRecord patient;
  std::vector<ScreeningExam> exams;  // current and previous years, in order
  int reference_year = 0;
  int horizon_n = 1;
  Label label = Label::kNegative;
  // Oracle-only companion data; absent once a sample leaves the generator.
  std::optional<LatentTerms> latent;

  void validate() const;
};

struct SynthExam {
  ScreeningExam exam;
  Outcome outcome;  // measured from this exam
  LatentTerms latent;
};

struct CohortEntry {
  PatientRecord patient;
  std::vector<SynthExam> exams;
};

using Cohort = std::vector<CohortEntry>;

// Logistic latent-risk coefficients. Risk is monotone increasing in every
// factor; the values are exposed so tests can assert learnability.
struct RiskCoefficients {
  double pack_years = 5.8;      // applied to min(pack_years, 90) / 90
  double age = 2.8;             // applied to (age_at_exam - 55) / 20
  double nodule_size = 4.7;     // applied to min(size_mm, 25) / 25
  double nodule_margin = 1.9;   // spiculated 1.0, lobulated 0.4, smooth 0.0
  double nodule_growth = 2.3;   // grown 1.0, new 0.5, otherwise 0.0
  double emphysema = 2.8;       // history or imaging evidence
  double family_history = 2.2;  // applied to min(count, 3) / 3
};

struct CohortConfig {
  int size = 5000;
  double positive_prevalence = 0.045;  // 1-year pooled target, in [0.03, 0.07]
  RiskCoefficients coefficients;

  void validate() const;
};

// Applies the three ground-truth label rules for one exam and horizon.
// Negative: no confirmed cancer within n years, follow-up >= n, did not die
// of lung cancer. Positive: confirmed cancer within n years and follow-up
// >= n. Excluded otherwise. "Within n years" compares with <= n.
Label derive_label(const Outcome& outcome, int horizon_n);

// Synthesizes an NLST-like cohort. Deterministic given the seed; the
// intercept of the latent model is calibrated so the pooled 1-year positive
// prevalence matches the configured target.
Cohort synth_cohort(const CohortConfig& config, Rng& rng);

// Expands a cohort into one LabeledSample per (patient, exam, horizon),
// dropping Excluded samples. Horizons outside [1, 6] are rejected.
std::vector<LabeledSample> build_samples(const Cohort& cohort,
                                         const std::set<int>& horizons);

// Record (de)serialization for line-delimited cohort files.
nlohmann::json to_json(const CohortEntry& entry);
CohortEntry cohort_entry_from_json(const nlohmann::json& j);

const char* to_string(NoduleMargin m);
const char* to_string(NoduleAttenuation a);
const char* to_string(ChangeVsPrior c);
const char* to_string(Sex s);

}  // namespace lcr::cohort
