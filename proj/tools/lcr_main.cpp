// Command-line entry point for the lung cancer risk pipeline. All work goes
// through the C API in lcr.h; this file only parses arguments, forwards them
// and reports errors.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lcr.h"

namespace {

struct ConfigGuard {
  lcr_config* cfg = nullptr;
  ~ConfigGuard() { lcr_config_destroy(cfg); }
};

int fail(lcr_status status) {
  std::fprintf(stderr, "error: %s\n", lcr_last_error());
  return static_cast<int>(status);
}

// Applies --config and --set overrides, then logs the resolved config.
lcr_status resolve_config(lcr_config* cfg, const std::string& config_file,
                          const std::vector<std::string>& sets, bool quiet) {
  if (!config_file.empty()) {
    if (lcr_status s = lcr_config_load_file(cfg, config_file.c_str())) return s;
  }
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n",
                   kv.c_str());
      return LCR_E_USAGE;
    }
    std::string key = kv.substr(0, eq);
    std::string value = kv.substr(eq + 1);
    while (!key.empty() && key.back() == ' ') key.pop_back();
    while (!value.empty() && value.front() == ' ') value.erase(value.begin());
    if (lcr_status s = lcr_config_set(cfg, key.c_str(), value.c_str()))
      return s;
  }
  if (!quiet) {
    size_t needed = 0;
    lcr_config_dump(cfg, nullptr, 0, &needed);
    std::string dump(needed + 1, '\0');
    lcr_config_dump(cfg, dump.data(), dump.size(), &needed);
    dump.resize(needed);
    std::fprintf(stderr, "resolved config:\n%s", dump.c_str());
  }
  return LCR_OK;
}

std::string fetch_text(lcr_status (*fn)(const lcr_config*, const char*, char*,
                                        size_t, size_t*),
                       const lcr_config* cfg, const char* arg,
                       lcr_status* status) {
  size_t needed = 0;
  *status = fn(cfg, arg, nullptr, 0, &needed);
  if (*status != LCR_OK) return {};
  std::string text(needed + 1, '\0');
  *status = fn(cfg, arg, text.data(), text.size(), &needed);
  text.resize(needed);
  return text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lcr: reasoning-based lung cancer risk pipeline"};
  app.require_subcommand(1);

  std::string config_file;
  std::vector<std::string> sets;
  bool quiet = false;
  app.add_option("--config", config_file, "configuration file")
      ->expected(1);
  app.add_option("--set", sets, "override a config key: --set key=value");
  app.add_flag("--quiet", quiet, "suppress the resolved-config log");

  std::string out, cohort_path, train_out, test_out, in_path, dataset_path;
  std::string init_ckpt, ckpt_out, metrics_out, ckpt, report_out, roc_prefix;
  std::string report_path;

  auto* synth = app.add_subcommand("synth", "synthesize a cohort file");
  synth->add_option("--out", out, "cohort output path")->required();

  auto* render = app.add_subcommand(
      "render", "build and render labeled datasets from a cohort");
  render->add_option("--cohort", cohort_path, "cohort file")->required();
  render->add_option("--train-out", train_out, "training dataset output")
      ->required();
  render->add_option("--test-out", test_out, "test dataset output");

  auto* label_check = app.add_subcommand(
      "label-check", "derive per-horizon label counts from a cohort");
  label_check->add_option("--cohort", cohort_path, "cohort file")->required();

  auto* reward_eval = app.add_subcommand(
      "reward-eval", "score {raw_text, label} records with the reward system");
  reward_eval->add_option("--in", in_path, "input records")->required();
  reward_eval->add_option("--out", out, "breakdown output")->required();

  auto* parse_check = app.add_subcommand(
      "parse-check", "run the output grammar over raw outputs");
  parse_check->add_option("--in", in_path, "input records")->required();
  parse_check->add_option("--out", out, "parse results output")->required();

  auto* train_sft =
      app.add_subcommand("train-sft", "supervised distillation training");
  train_sft->add_option("--data", dataset_path, "rendered dataset with traces")
      ->required();
  train_sft->add_option("--ckpt-out", ckpt_out, "checkpoint output")
      ->required();
  train_sft->add_option("--metrics-out", metrics_out, "loss curve output");

  auto* train_grpo =
      app.add_subcommand("train-grpo", "group-relative policy optimization");
  train_grpo->add_option("--data", dataset_path, "rendered dataset")
      ->required();
  train_grpo->add_option("--init-ckpt", init_ckpt, "optional starting checkpoint");
  train_grpo->add_option("--ckpt-out", ckpt_out, "checkpoint output")
      ->required();
  train_grpo->add_option("--metrics-out", metrics_out, "metrics trace output");

  auto* evaluate = app.add_subcommand(
      "evaluate", "multi-horizon ROC/AUC evaluation of a checkpoint");
  evaluate->add_option("--ckpt", ckpt, "policy checkpoint")->required();
  evaluate->add_option("--cohort", cohort_path, "cohort file")->required();
  evaluate->add_option("--report-out", report_out, "report output")->required();
  evaluate->add_option("--roc-prefix", roc_prefix,
                       "prefix for per-horizon ROC point files");

  auto* report = app.add_subcommand("report", "summarize an evaluation report");
  report->add_option("--in", report_path, "report file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(LCR_E_USAGE);
  }

  ConfigGuard guard;
  if (lcr_status s = lcr_config_create(&guard.cfg)) return fail(s);
  if (lcr_status s = resolve_config(guard.cfg, config_file, sets, quiet)) {
    return fail(s);
  }
  const lcr_config* cfg = guard.cfg;

  lcr_status status = LCR_OK;
  if (synth->parsed()) {
    status = lcr_run_synth(cfg, out.c_str());
  } else if (render->parsed()) {
    status = lcr_run_render(cfg, cohort_path.c_str(), train_out.c_str(),
                            test_out.empty() ? nullptr : test_out.c_str());
  } else if (label_check->parsed()) {
    const std::string text =
        fetch_text(lcr_run_label_check, cfg, cohort_path.c_str(), &status);
    if (status == LCR_OK) std::fputs(text.c_str(), stdout);
  } else if (reward_eval->parsed()) {
    status = lcr_run_reward_eval(cfg, in_path.c_str(), out.c_str());
  } else if (parse_check->parsed()) {
    status = lcr_run_parse_check(cfg, in_path.c_str(), out.c_str());
  } else if (train_sft->parsed()) {
    status = lcr_run_train_sft(cfg, dataset_path.c_str(), ckpt_out.c_str(),
                               metrics_out.empty() ? nullptr
                                                   : metrics_out.c_str());
  } else if (train_grpo->parsed()) {
    status = lcr_run_train_grpo(
        cfg, dataset_path.c_str(),
        init_ckpt.empty() ? nullptr : init_ckpt.c_str(), ckpt_out.c_str(),
        metrics_out.empty() ? nullptr : metrics_out.c_str());
  } else if (evaluate->parsed()) {
    status = lcr_run_evaluate(cfg, ckpt.c_str(), cohort_path.c_str(),
                              report_out.c_str(),
                              roc_prefix.empty() ? nullptr : roc_prefix.c_str());
  } else if (report->parsed()) {
    const std::string text =
        fetch_text(lcr_run_report, cfg, report_path.c_str(), &status);
    if (status == LCR_OK) std::fputs(text.c_str(), stdout);
  }

  if (status != LCR_OK) return fail(status);
  return 0;
}
