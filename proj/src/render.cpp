#include "lcr/render.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "lcr/error.hpp"
#include "lcr/policy.hpp"

namespace lcr::render {

using cohort::ChangeVsPrior;
using cohort::FindingKind;
using cohort::ImagingFinding;
using cohort::LabeledSample;
using cohort::NoduleMargin;
using cohort::PatientRecord;
using cohort::ScreeningExam;
using cohort::SmokingStatus;

const char* to_string(RenderStyle s) {
  switch (s) {
    case RenderStyle::kTemplate: return "template";
    case RenderStyle::kTable: return "table";
    case RenderStyle::kFreeText: return "freetext";
    case RenderStyle::kNarrative: return "narrative";
  }
  return "template";
}

RenderStyle style_from_string(const std::string& s) {
  if (s == "template") return RenderStyle::kTemplate;
  if (s == "table") return RenderStyle::kTable;
  if (s == "freetext") return RenderStyle::kFreeText;
  if (s == "narrative") return RenderStyle::kNarrative;
  throw_config("unknown render style: " + s);
}

namespace {

const char* const kYearName[] = {"baseline scan", "first-year scan",
                                 "second-year scan"};
// Equal-width year names keep question lengths constant per horizon.
const char* const kYearWord[] = {"baseline", "year-one", "year-two"};
const char* const kHorizonWord[] = {"", "one", "two", "three",
                                    "four", "five", "six"};

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string join(const std::vector<std::string>& items, const char* sep) {
  std::string out;
  for (size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

std::string list_or_none(const std::vector<std::string>& items) {
  return items.empty() ? "none" : join(items, ", ");
}

std::string finding_phrase(const ImagingFinding& f) {
  std::ostringstream os;
  if (f.kind == FindingKind::kNodule) {
    os << "nodule, " << f.location << ", " << f.size_mm << " mm, "
       << cohort::to_string(f.margin) << " margin, "
       << cohort::to_string(f.attenuation) << " attenuation, "
       << (f.change == ChangeVsPrior::kUnknown
               ? "change unknown"
               : std::string(cohort::to_string(f.change)) + " vs prior");
  } else {
    os << f.abnormality << ", "
       << (f.change == ChangeVsPrior::kUnknown
               ? "change unknown"
               : std::string(cohort::to_string(f.change)) + " vs prior");
  }
  return os.str();
}

std::string findings_sentence(const ScreeningExam& exam) {
  if (exam.findings.empty()) {
    return "no abnormal findings reported.";
  }
  std::vector<std::string> parts;
  for (const auto& f : exam.findings) parts.push_back(finding_phrase(f));
  return join(parts, "; ") + ".";
}

// Observable state recap used by every style. All values are deterministic
// functions of the record and findings; nothing outcome-derived appears.
std::string profile_line(const LabeledSample& s) {
  const PatientRecord& r = s.patient;
  const ScreeningExam& current = s.exams.back();
  int largest = 0;
  bool spic = false, growth = false, newly = false;
  for (const auto& f : current.findings) {
    if (f.kind != FindingKind::kNodule) continue;
    largest = std::max(largest, f.size_mm);
    spic = spic || f.margin == NoduleMargin::kSpiculated;
    growth = growth || f.change == ChangeVsPrior::kGrown;
    newly = newly || f.change == ChangeVsPrior::kNew;
  }
  bool emphysema = false;
  for (const auto& d : r.disease_history) {
    if (d == "emphysema") emphysema = true;
  }
  for (const auto& e : s.exams) {
    for (const auto& f : e.findings) {
      if (f.kind == FindingKind::kOpportunistic && f.abnormality == "emphysema") {
        emphysema = true;
      }
    }
  }
  // Banded qualifiers lead, then yes/no flags, then fixed-width numerals, so
  // the values closest to the question sit at stable columns.
  const char* burden = largest == 0   ? "none"
                       : largest < 4  ? "tiny"
                       : largest < 6  ? "small"
                       : largest < 8  ? "moderate"
                       : largest < 15 ? "large"
                                      : "very large";
  const double py = r.smoking.pack_years;
  const char* smoke_level = py < 35   ? "light"
                            : py < 50 ? "moderate"
                            : py < 70 ? "heavy"
                                      : "very heavy";
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "nodule burden %s; smoking level %s; current smoker %s; "
                "emphysema %s; spiculated %s; growth %s; new nodule %s; "
                "family history %d; age %2d; pack-years %3d; "
                "largest nodule %2d mm.",
                burden, smoke_level,
                r.smoking.status == SmokingStatus::kCurrent ? "yes" : "no",
                emphysema ? "yes" : "no", spic ? "yes" : "no",
                growth ? "yes" : "no", newly ? "yes" : "no",
                r.family_lung_cancer_history,
                r.demographics.age + s.reference_year,
                static_cast<int>(py + 0.5), largest);
  return buf;
}

std::string smoking_sentence(const PatientRecord& r) {
  std::ostringstream os;
  const bool current = r.smoking.status == SmokingStatus::kCurrent;
  os << (current ? "current smoker" : "former smoker") << "; "
     << format_number(r.smoking.cigarettes_per_day)
     << " cigarettes per day for " << format_number(r.smoking.years_smoked)
     << " years; ";
  if (current) {
    os << "still smoking; ";
  } else {
    os << "quit " << format_number(r.smoking.years_since_quit)
       << " years ago; ";
  }
  os << format_number(r.smoking.pack_years) << " pack-years";
  return os.str();
}

std::string render_template(const LabeledSample& s) {
  const PatientRecord& r = s.patient;
  std::ostringstream os;
  os << "Patient record for screening exam T" << s.reference_year << " ("
     << kYearName[s.reference_year] << ").\n";
  os << "Demographics: age " << r.demographics.age << " years; sex "
     << cohort::to_string(r.demographics.sex) << "; race "
     << r.demographics.race << "; ethnicity " << r.demographics.ethnicity
     << "; height " << r.demographics.height_cm << " cm; weight "
     << r.demographics.weight_kg << " kg; education "
     << r.demographics.education << ".\n";
  os << "Smoking history: " << smoking_sentence(r) << ".\n";
  os << "Disease history: " << list_or_none(r.disease_history) << ".\n";
  os << "Personal cancer history: " << list_or_none(r.personal_cancer_history)
     << ".\n";
  os << "Family lung cancer history: " << r.family_lung_cancer_history
     << " first-degree relative(s).\n";
  os << "Work history: " << list_or_none(r.work_history) << ".\n";
  os << "Alcohol history: " << r.alcohol_drinks_per_week
     << " drinks per week.\n";
  for (const auto& exam : s.exams) {
    os << "Findings at exam T" << exam.exam_year_index << " ("
       << kYearName[exam.exam_year_index] << "): " << findings_sentence(exam)
       << "\n";
  }
  os << "Current profile: " << profile_line(s) << "\n";
  return os.str();
}

std::string render_table(const LabeledSample& s) {
  const PatientRecord& r = s.patient;
  std::ostringstream os;
  os << "patient_id: " << r.patient_id << "\n";
  os << "exam: T" << s.reference_year << " (" << kYearName[s.reference_year]
     << ")\n";
  os << "age: " << r.demographics.age << "\n";
  os << "sex: " << cohort::to_string(r.demographics.sex) << "\n";
  os << "race: " << r.demographics.race << "\n";
  os << "ethnicity: " << r.demographics.ethnicity << "\n";
  os << "height_cm: " << r.demographics.height_cm << "\n";
  os << "weight_kg: " << r.demographics.weight_kg << "\n";
  os << "education: " << r.demographics.education << "\n";
  os << "smoking_status: "
     << (r.smoking.status == SmokingStatus::kCurrent ? "current" : "former")
     << "\n";
  os << "cigarettes_per_day: " << format_number(r.smoking.cigarettes_per_day)
     << "\n";
  os << "years_smoked: " << format_number(r.smoking.years_smoked) << "\n";
  os << "years_since_quit: " << format_number(r.smoking.years_since_quit)
     << "\n";
  os << "pack_years: " << format_number(r.smoking.pack_years) << "\n";
  os << "disease_history: " << list_or_none(r.disease_history) << "\n";
  os << "personal_cancer_history: "
     << list_or_none(r.personal_cancer_history) << "\n";
  os << "family_lung_cancer_history: " << r.family_lung_cancer_history << "\n";
  os << "work_history: " << list_or_none(r.work_history) << "\n";
  os << "alcohol_drinks_per_week: " << r.alcohol_drinks_per_week << "\n";
  for (const auto& exam : s.exams) {
    os << "findings_T" << exam.exam_year_index << ": "
       << findings_sentence(exam) << "\n";
  }
  os << "profile: " << profile_line(s) << "\n";
  return os.str();
}

std::string render_freetext(const LabeledSample& s) {
  const PatientRecord& r = s.patient;
  std::ostringstream os;
  os << "This patient is " << r.demographics.age << " years old, "
     << cohort::to_string(r.demographics.sex) << ", " << r.demographics.race
     << ", " << r.demographics.ethnicity << ", " << r.demographics.height_cm
     << " cm tall and " << r.demographics.weight_kg
     << " kg, education level " << r.demographics.education << ". ";
  os << "Smoking: " << smoking_sentence(r) << ". ";
  os << "Known conditions: " << list_or_none(r.disease_history) << ". ";
  os << "Prior cancers: " << list_or_none(r.personal_cancer_history) << ". ";
  os << "Family lung cancer history: " << r.family_lung_cancer_history
     << " first-degree relative(s). ";
  os << "Occupational exposures: " << list_or_none(r.work_history) << ". ";
  os << "Alcohol: " << r.alcohol_drinks_per_week << " drinks per week. ";
  for (const auto& exam : s.exams) {
    os << "On the " << kYearName[exam.exam_year_index] << " (T"
       << exam.exam_year_index << "), imaging showed: "
       << findings_sentence(exam) << " ";
  }
  os << "In summary: " << profile_line(s) << "\n";
  return os.str();
}

std::string render_narrative(const LabeledSample& s) {
  const PatientRecord& r = s.patient;
  const bool current = r.smoking.status == SmokingStatus::kCurrent;
  std::ostringstream os;
  os << "A " << r.demographics.age << "-year-old "
     << cohort::to_string(r.demographics.sex) << " "
     << (current ? "current" : "former")
     << " smoker presents for the " << kYearName[s.reference_year]
     << " (exam T" << s.reference_year << "). ";
  os << "The smoking history is notable for "
     << format_number(r.smoking.cigarettes_per_day)
     << " cigarettes daily over " << format_number(r.smoking.years_smoked)
     << " years, " << format_number(r.smoking.pack_years)
     << " pack-years in total"
     << (current ? ", ongoing. "
                 : ", quit " + format_number(r.smoking.years_since_quit) +
                       " years ago. ");
  os << "Past medical history includes "
     << list_or_none(r.disease_history) << "; prior malignancies: "
     << list_or_none(r.personal_cancer_history) << ". ";
  os << "There are " << r.family_lung_cancer_history
     << " first-degree relative(s) with lung cancer. Occupational history: "
     << list_or_none(r.work_history) << ". Reported alcohol intake is "
     << r.alcohol_drinks_per_week << " drinks per week. ";
  os << "Body habitus: " << r.demographics.height_cm << " cm, "
     << r.demographics.weight_kg << " kg. Reported race "
     << r.demographics.race << ", ethnicity " << r.demographics.ethnicity
     << ", education " << r.demographics.education << ". ";
  for (const auto& exam : s.exams) {
    if (exam.exam_year_index == s.reference_year) {
      os << "The current study (T" << exam.exam_year_index
         << ") demonstrates: ";
    } else {
      os << "The " << kYearName[exam.exam_year_index] << " (T"
         << exam.exam_year_index << ") demonstrated: ";
    }
    os << findings_sentence(exam) << " ";
  }
  os << "Overall profile: " << profile_line(s) << "\n";
  return os.str();
}

}  // namespace

std::vector<std::string> question_bank(int reference_year, int horizon_n) {
  if (horizon_n < 1 || horizon_n > 6) throw_data("horizon outside [1, 6]");
  if (reference_year < 0 || reference_year > 2) {
    throw_data("reference year outside {0,1,2}");
  }
  const std::string hy = std::string(kHorizonWord[horizon_n]) +
                         (horizon_n == 1 ? " year" : " years");
  const std::string y = kYearWord[reference_year];
  // Every phrasing has the same character count for a given (year, horizon).
  return {
      "What are the chances of the patient developing lung cancer within " +
          hy + " post-" + y + " CT scan?",
      "Estimate the complete lung cancer occurrence risk score over " + hy +
          " after the " + y + " CT scan.",
      "What is the risk that any lung cancer gets confirmed within " + hy +
          " after this " + y + " CT scan?",
      "How likely is it that a patient develops lung cancer within " + hy +
          " after this " + y + " CT scan?",
      "Assess the probability of a lung cancer diagnosis within " + hy +
          " right after a " + y + " CT scan.",
      "Provide a risk score for any lung cancer occurrences within " + hy +
          " after this " + y + " CT scan.",
      "Within " + hy + " of the " + y +
          " CT scan, how large might the overall chance of a lung cancer get?",
      "Give the probability of one patient having a lung cancer within " + hy +
          " after " + y + " CT scans.",
  };
}

std::string render_question(int reference_year, int horizon_n, Rng& rng) {
  const std::vector<std::string> bank = question_bank(reference_year, horizon_n);
  return bank[rng.below(bank.size())];
}

RenderedInput render_record(const cohort::LabeledSample& sample,
                            RenderStyle style, Rng& rng) {
  sample.validate();
  std::string body;
  switch (style) {
    case RenderStyle::kTemplate: body = render_template(sample); break;
    case RenderStyle::kTable: body = render_table(sample); break;
    case RenderStyle::kFreeText: body = render_freetext(sample); break;
    case RenderStyle::kNarrative: body = render_narrative(sample); break;
  }
  RenderedInput out;
  out.style = style;
  out.question =
      "Question: " +
      render_question(sample.reference_year, sample.horizon_n, rng);
  out.text = body + out.question;
  out.token_count = static_cast<int>(
      policy::Vocabulary::standard().encode(out.text).size());
  return out;
}

}  // namespace lcr::render
