#include "lcr/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lcr/error.hpp"
#include "lcr/parse.hpp"
#include "lcr/records.hpp"

namespace lcr::pipeline {

using render::DatasetRecord;

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

render::RenderStyle pick_style(const std::vector<double>& weights, Rng& rng) {
  double total = 0;
  for (double w : weights) total += w;
  double u = rng.next_double() * total;
  for (size_t i = 0; i < weights.size(); ++i) {
    u -= weights[i];
    if (u < 0) return static_cast<render::RenderStyle>(i);
  }
  return render::RenderStyle::kTemplate;
}

}  // namespace

void run_synth(const config::PipelineConfig& cfg, const std::string& out_path) {
  cfg.validate();
  Rng rng(cfg.seed());
  const cohort::Cohort cohort = cohort::synth_cohort(cfg.cohort_config(), rng);
  RecordWriter writer(out_path);
  for (const auto& entry : cohort) writer.write(cohort::to_json(entry));
}

cohort::Cohort load_cohort(const std::string& path) {
  cohort::Cohort cohort;
  for_each_record(path, [&](const nlohmann::json& j) {
    cohort.push_back(cohort::cohort_entry_from_json(j));
  });
  return cohort;
}

bool in_test_split(const std::string& patient_id, std::uint64_t seed,
                   double test_fraction) {
  Rng rng(seed ^ fnv1a(patient_id));
  return rng.next_double() < test_fraction;
}

std::vector<cohort::LabeledSample> split_samples(
    const cohort::Cohort& cohort, const std::vector<int>& horizons,
    std::uint64_t seed, double test_fraction, const std::string& which) {
  const std::set<int> hs(horizons.begin(), horizons.end());
  std::vector<cohort::LabeledSample> all = cohort::build_samples(cohort, hs);
  if (which == "all") return all;
  std::vector<cohort::LabeledSample> out;
  for (auto& s : all) {
    const bool test = in_test_split(s.patient.patient_id, seed, test_fraction);
    if ((which == "test") == test) out.push_back(std::move(s));
  }
  return out;
}

std::vector<policy::TokenId> prompt_tokens(const std::string& input_text) {
  return policy::Vocabulary::standard().encode(input_text + "\n");
}

train::TokenizedPair to_sft_pair(const std::string& input_text,
                                 const std::string& teacher_text) {
  train::TokenizedPair pair;
  pair.prompt = prompt_tokens(input_text);
  pair.target = policy::Vocabulary::standard().encode(teacher_text);
  pair.target.push_back(policy::Vocabulary::standard().eos());
  return pair;
}

namespace {

nlohmann::json dataset_record_to_json(const DatasetRecord& r) {
  nlohmann::json j;
  j["input_text"] = r.input_text;
  j["label"] = r.label;
  j["horizon"] = r.horizon;
  j["reference_year"] = r.reference_year;
  j["style"] = r.style;
  j["patient_id"] = r.patient_id;
  if (!r.teacher_text.empty()) j["teacher_text"] = r.teacher_text;
  return j;
}

void write_dataset(const config::PipelineConfig& cfg,
                   const std::vector<cohort::LabeledSample>& samples,
                   std::uint64_t seed_offset, const std::string& out_path) {
  const std::vector<double> weights = cfg.style_weights();
  const std::string teacher_mode = cfg.teacher_mode();
  const Rng base(cfg.seed() + seed_offset);

  RecordWriter writer(out_path);
  for (size_t i = 0; i < samples.size(); ++i) {
    const auto& sample = samples[i];
    Rng style_rng = base.fork(2 * i);
    Rng render_rng = base.fork(2 * i + 1);
    const render::RenderStyle style = pick_style(weights, style_rng);
    const render::RenderedInput rendered =
        render::render_record(sample, style, render_rng);

    DatasetRecord rec;
    rec.input_text = rendered.text;
    rec.label = sample.label == cohort::Label::kPositive ? 1 : 0;
    rec.horizon = sample.horizon_n;
    rec.reference_year = sample.reference_year;
    rec.style = render::to_string(style);
    rec.patient_id = sample.patient.patient_id;

    if (teacher_mode != "none") {
      Rng teacher_rng = base.fork(0x7EAC'0000ULL + i);
      const train::OracleTeacherTrace trace = train::make_teacher_trace(
          sample, train::teacher_mode_from_string(teacher_mode), teacher_rng);
      const std::vector<train::TraceExample> kept = train::rejection_filter(
          {{trace.text, rec.label}});
      if (kept.empty()) continue;  // wrong prediction: filtered out
      rec.teacher_text = kept.front().text;
    }
    writer.write(dataset_record_to_json(rec));
  }
}

}  // namespace

void run_render(const config::PipelineConfig& cfg,
                const std::string& cohort_path, const std::string& train_out,
                const std::string& test_out) {
  cfg.validate();
  const cohort::Cohort cohort = load_cohort(cohort_path);
  const std::vector<int> horizons = cfg.horizons();
  const double tf = cfg.test_fraction();

  const auto train_samples =
      split_samples(cohort, horizons, cfg.seed(), tf, "train");
  write_dataset(cfg, train_samples, 0x11, train_out);
  if (!test_out.empty()) {
    const auto test_samples =
        split_samples(cohort, horizons, cfg.seed(), tf, "test");
    write_dataset(cfg, test_samples, 0x22, test_out);
  }
}

std::vector<DatasetRecord> load_dataset(const std::string& path) {
  std::vector<DatasetRecord> out;
  for_each_record(path, [&](const nlohmann::json& j) {
    DatasetRecord r;
    r.input_text = j.at("input_text").get<std::string>();
    r.label = j.at("label").get<int>();
    r.horizon = j.at("horizon").get<int>();
    r.reference_year = j.at("reference_year").get<int>();
    r.style = j.at("style").get<std::string>();
    r.patient_id = j.at("patient_id").get<std::string>();
    if (j.contains("teacher_text")) {
      r.teacher_text = j.at("teacher_text").get<std::string>();
    }
    out.push_back(std::move(r));
  });
  return out;
}

std::string run_label_check(const config::PipelineConfig& cfg,
                            const std::string& cohort_path) {
  cfg.validate();
  const cohort::Cohort cohort = load_cohort(cohort_path);
  std::ostringstream os;
  os << "patients: " << cohort.size() << "\n";
  os << "horizon positives negatives excluded prevalence\n";
  for (int n = 1; n <= 6; ++n) {
    long pos = 0, neg = 0, exc = 0;
    for (const auto& entry : cohort) {
      for (const auto& se : entry.exams) {
        switch (cohort::derive_label(se.outcome, n)) {
          case cohort::Label::kPositive: ++pos; break;
          case cohort::Label::kNegative: ++neg; break;
          case cohort::Label::kExcluded: ++exc; break;
        }
      }
    }
    const long kept = pos + neg;
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d %ld %ld %ld %.4f\n", n, pos, neg, exc,
                  kept ? static_cast<double>(pos) / kept : 0.0);
    os << buf;
  }
  return os.str();
}

void run_reward_eval(const config::PipelineConfig& cfg,
                     const std::string& in_path, const std::string& out_path) {
  cfg.validate();
  const reward::RewardConfig rc = cfg.reward_config();
  const policy::Vocabulary& vocab = policy::Vocabulary::standard();
  RecordWriter writer(out_path);
  for_each_record(in_path, [&](const nlohmann::json& j) {
    const std::string text = j.at("raw_text").get<std::string>();
    const int label = j.at("label").get<int>();
    const int token_length = j.contains("token_length")
                                 ? j.at("token_length").get<int>()
                                 : static_cast<int>(vocab.encode(text).size());
    const parse::ModelOutput output =
        parse::ModelOutput::from_raw(text, token_length);
    const reward::RewardBreakdown b = reward::total_reward(output, label, rc);
    writer.write({{"score", b.score},
                  {"format", b.format},
                  {"length", b.length},
                  {"total", b.total},
                  {"label", label}});
  });
}

void run_parse_check(const config::PipelineConfig& cfg,
                     const std::string& in_path, const std::string& out_path) {
  cfg.validate();
  RecordWriter writer(out_path);
  for_each_record(in_path, [&](const nlohmann::json& j) {
    const std::string text = j.at("raw_text").get<std::string>();
    const parse::SectionSplit split = parse::split_sections(text);
    const auto parsed = parse::extract_score(split.answer);
    nlohmann::json out;
    out["think_present"] = split.think.has_value();
    out["parse_ok"] = parsed.has_value();
    if (parsed) out["score"] = parsed->value;
    writer.write(out);
  });
}

namespace {

void write_grpo_metrics(const std::vector<train::StepMetrics>& metrics,
                        const std::string& path) {
  RecordWriter writer(path);
  for (const auto& m : metrics) {
    writer.write({{"step", m.step},
                  {"mean_reward", m.mean_reward},
                  {"mean_score_reward", m.mean_score_reward},
                  {"mean_format_reward", m.mean_format_reward},
                  {"mean_length_penalty", m.mean_length_penalty},
                  {"parse_failure_rate", m.parse_failure_rate},
                  {"mean_output_length", m.mean_output_length}});
  }
}

}  // namespace

void run_train_sft(const config::PipelineConfig& cfg,
                   const std::string& dataset_path,
                   const std::string& checkpoint_out,
                   const std::string& metrics_out) {
  cfg.validate();
  const std::vector<DatasetRecord> records = load_dataset(dataset_path);
  std::vector<train::TokenizedPair> pairs;
  for (const auto& r : records) {
    if (r.teacher_text.empty()) continue;
    pairs.push_back(to_sft_pair(r.input_text, r.teacher_text));
  }
  if (pairs.empty()) {
    throw_config("sft dataset has no teacher traces; render with "
                 "render.teacher_mode = plain or think");
  }
  const train::SftResult result =
      train::sft_train(pairs, cfg.sft_config(), std::nullopt);
  result.params.save(checkpoint_out);
  if (!metrics_out.empty()) {
    RecordWriter writer(metrics_out);
    for (const auto& m : result.metrics) {
      writer.write({{"epoch", m.epoch}, {"step", m.step}, {"loss", m.loss}});
    }
  }
}

void run_train_grpo(const config::PipelineConfig& cfg,
                    const std::string& dataset_path,
                    const std::string& init_checkpoint,
                    const std::string& checkpoint_out,
                    const std::string& metrics_out) {
  cfg.validate();
  const std::vector<DatasetRecord> records = load_dataset(dataset_path);
  std::vector<train::PromptSample> prompts;
  for (const auto& r : records) {
    train::PromptSample p;
    p.prompt_tokens = prompt_tokens(r.input_text);
    p.label = r.label;
    p.horizon = r.horizon;
    prompts.push_back(std::move(p));
  }
  std::optional<policy::PolicyParams> init;
  if (!init_checkpoint.empty()) {
    init = policy::PolicyParams::load(init_checkpoint);
  }
  const train::GrpoResult result =
      train::grpo_train(prompts, cfg.grpo_config(), init);
  result.params.save(checkpoint_out);
  if (!metrics_out.empty()) write_grpo_metrics(result.metrics, metrics_out);
}

void run_evaluate(const config::PipelineConfig& cfg,
                  const std::string& checkpoint_path,
                  const std::string& cohort_path,
                  const std::string& report_out,
                  const std::string& roc_prefix) {
  cfg.validate();
  const policy::PolicyParams params = policy::PolicyParams::load(checkpoint_path);
  const cohort::Cohort cohort = load_cohort(cohort_path);
  const std::vector<cohort::LabeledSample> samples =
      split_samples(cohort, cfg.horizons(), cfg.seed(), cfg.test_fraction(),
                    cfg.eval_split());
  if (samples.empty()) throw_data("evaluation split is empty");
  const eval::EvalReport report =
      eval::evaluate_policy(params, samples, cfg.eval_config());

  std::ofstream out(report_out, std::ios::binary);
  if (!out) throw_data("cannot open " + report_out + " for writing");
  nlohmann::json j = report.to_json();
  j["schema_version"] = kSchemaVersion;
  out << j.dump(2) << "\n";

  if (!roc_prefix.empty()) {
    for (const auto& [n, h] : report.horizons) {
      if (h.roc.empty()) continue;
      const std::string path = roc_prefix + "_h" + std::to_string(n) + ".tsv";
      std::ofstream roc(path, std::ios::binary);
      if (!roc) throw_data("cannot open " + path + " for writing");
      roc << "fpr\ttpr\tthreshold\n";
      char buf[96];
      for (const auto& p : h.roc) {
        std::snprintf(buf, sizeof buf, "%.6f\t%.6f\t%.6f\n", p.fpr, p.tpr,
                      std::isfinite(p.threshold) ? p.threshold : 2.0);
        roc << buf;
      }
    }
  }
}

std::string run_report(const std::string& report_path) {
  std::ifstream in(report_path);
  if (!in) throw_data("cannot open " + report_path);
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw_data("malformed report file");
  const eval::EvalReport report = eval::EvalReport::from_json(j);

  std::ostringstream os;
  os << "samples: " << report.total_samples << "\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "parse_failure_rate: %.4f\n",
                report.parse_failure_rate);
  os << buf;
  os << "horizon samples positives auc baseline_auc\n";
  for (const auto& [n, h] : report.horizons) {
    if (h.single_class) {
      std::snprintf(buf, sizeof buf, "%d %d %d single-class single-class\n", n,
                    h.samples, h.positives);
    } else {
      std::snprintf(buf, sizeof buf, "%d %d %d %.4f %.4f\n", n, h.samples,
                    h.positives, h.auc.value_or(0.0),
                    h.baseline_auc.value_or(0.0));
    }
    os << buf;
  }
  return os.str();
}

}  // namespace lcr::pipeline
