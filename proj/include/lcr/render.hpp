#pragma once

#include <string>
#include <vector>

#include "lcr/cohort.hpp"
#include "lcr/rng.hpp"

namespace lcr::render {

enum class RenderStyle { kTemplate, kTable, kFreeText, kNarrative };

const char* to_string(RenderStyle s);
RenderStyle style_from_string(const std::string& s);

struct RenderedInput {
  std::string text;
  int token_count = 0;  // under the pipeline vocabulary
  RenderStyle style = RenderStyle::kTemplate;
  std::string question;  // always a suffix of text
};

// Renders one sample into free text: patient description, longitudinal
// findings in year order, an observable risk-factor recap, and the question.
// Every populated field value appears in the output; labels, outcomes and
// latent risk never do. Deterministic given (sample, style, rng seed).
RenderedInput render_record(const cohort::LabeledSample& sample,
                            RenderStyle style, Rng& rng);

// Draws a question uniformly from the phrasing bank. Every phrasing states
// the horizon and the reference exam year.
std::string render_question(int reference_year, int horizon_n, Rng& rng);

// The fixed phrasing bank, fully expanded for a given year and horizon.
std::vector<std::string> question_bank(int reference_year, int horizon_n);

// Per-sample record of a rendered dataset line.
struct DatasetRecord {
  std::string input_text;
  int label = 0;  // 0 or 1; excluded samples never reach datasets
  int horizon = 1;
  int reference_year = 0;
  std::string style;
  std::string patient_id;
  std::string teacher_text;  // empty unless distillation traces were attached
};

}  // namespace lcr::render
