#include "lcr/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lcr/error.hpp"
#include "lcr/policy.hpp"

namespace lcr::config {

namespace {

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> kDefaults = {
      {"seed", "7"},
      {"cohort.size", "5000"},
      {"cohort.prevalence", "0.045"},
      {"cohort.coef.pack_years", "5.8"},
      {"cohort.coef.age", "2.8"},
      {"cohort.coef.nodule_size", "4.7"},
      {"cohort.coef.nodule_margin", "1.9"},
      {"cohort.coef.nodule_growth", "2.3"},
      {"cohort.coef.emphysema", "2.8"},
      {"cohort.coef.family_history", "2.2"},
      {"render.style_mix", "template:1"},
      {"render.horizons", "1,2,3,4,5,6"},
      {"render.teacher_mode", "none"},
      {"render.test_fraction", "0.2"},
      {"reward.t1", "0.45"},
      {"reward.t2", "0.55"},
      {"reward.l_max", "9000"},
      {"reward.l_completion", "10000"},
      {"reward.alpha", "1"},
      {"reward.beta", "1"},
      {"reward.length_mode", "literal"},
      {"clip.eps_low", "0.2"},
      {"clip.eps_high", "0.28"},
      {"policy.embed_dim", "16"},
      {"policy.context_window", "32"},
      {"grpo.steps", "2000"},
      {"grpo.prompts_per_step", "8"},
      {"grpo.group_size", "8"},
      {"grpo.max_completion_len", "160"},
      {"grpo.inner_epochs", "1"},
      {"grpo.lr", "0.01"},
      {"grpo.momentum", "0"},
      {"grpo.clip_norm", "0"},
      {"grpo.optimizer", "sgd"},
      {"grpo.init_scale", "0.02"},
      {"sft.epochs", "4"},
      {"sft.batch_size", "16"},
      {"sft.lr", "0.05"},
      {"sft.lr_decay", "1"},
      {"sft.momentum", "0.9"},
      {"sft.clip_norm", "5"},
      {"sft.optimizer", "sgd"},
      {"sft.init_scale", "0.02"},
      {"eval.style", "template"},
      {"eval.max_completion_len", "768"},
      {"eval.render_seed", "17"},
      {"eval.split", "test"},
  };
  return kDefaults;
}

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace

PipelineConfig::PipelineConfig() : values_(defaults()) {}

void PipelineConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_config("cannot open config file " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw_config(path + ":" + std::to_string(line_no) +
                   ": expected key = value");
    }
    set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
  if (defaults().find(key) == defaults().end()) {
    throw_config("unknown config key: " + key);
  }
  values_[key] = value;
}

std::string PipelineConfig::get_string(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw_config("missing config key: " + key);
  return it->second;
}

double PipelineConfig::get_double(const std::string& key) const {
  const std::string s = get_string(key);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw_config("config key " + key + " is not a number: " + s);
  }
  return v;
}

int PipelineConfig::get_int(const std::string& key) const {
  const double v = get_double(key);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) {
    throw_config("config key " + key + " is not an integer");
  }
  return i;
}

std::uint64_t PipelineConfig::get_u64(const std::string& key) const {
  const std::string s = get_string(key);
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') {
    throw_config("config key " + key + " is not an unsigned integer");
  }
  return v;
}

cohort::CohortConfig PipelineConfig::cohort_config() const {
  cohort::CohortConfig c;
  c.size = get_int("cohort.size");
  c.positive_prevalence = get_double("cohort.prevalence");
  c.coefficients.pack_years = get_double("cohort.coef.pack_years");
  c.coefficients.age = get_double("cohort.coef.age");
  c.coefficients.nodule_size = get_double("cohort.coef.nodule_size");
  c.coefficients.nodule_margin = get_double("cohort.coef.nodule_margin");
  c.coefficients.nodule_growth = get_double("cohort.coef.nodule_growth");
  c.coefficients.emphysema = get_double("cohort.coef.emphysema");
  c.coefficients.family_history = get_double("cohort.coef.family_history");
  return c;
}

reward::RewardConfig PipelineConfig::reward_config() const {
  reward::RewardConfig r;
  r.t1 = get_double("reward.t1");
  r.t2 = get_double("reward.t2");
  r.l_max = get_int("reward.l_max");
  r.l_completion = get_int("reward.l_completion");
  r.alpha = get_double("reward.alpha");
  r.beta = get_double("reward.beta");
  const std::string mode = get_string("reward.length_mode");
  if (mode == "literal") {
    r.length_mode = reward::LengthMode::kLiteral;
  } else if (mode == "monotone") {
    r.length_mode = reward::LengthMode::kMonotone;
  } else {
    throw_config("reward.length_mode must be literal or monotone");
  }
  return r;
}

train::ClipConfig PipelineConfig::clip_config() const {
  train::ClipConfig c;
  c.eps_low = get_double("clip.eps_low");
  c.eps_high = get_double("clip.eps_high");
  return c;
}

policy::ModelShape PipelineConfig::model_shape() const {
  policy::ModelShape s;
  s.vocab_size = policy::Vocabulary::standard().size();
  s.embed_dim = get_int("policy.embed_dim");
  s.context_window = get_int("policy.context_window");
  return s;
}

train::GrpoConfig PipelineConfig::grpo_config() const {
  train::GrpoConfig g;
  g.seed = seed();
  g.steps = get_int("grpo.steps");
  g.prompts_per_step = get_int("grpo.prompts_per_step");
  g.group_size = get_int("grpo.group_size");
  g.max_completion_len = get_int("grpo.max_completion_len");
  g.inner_epochs = get_int("grpo.inner_epochs");
  g.lr = get_double("grpo.lr");
  g.momentum = get_double("grpo.momentum");
  g.grad_clip_norm = get_double("grpo.clip_norm");
  g.optimizer = get_string("grpo.optimizer");
  g.init_scale = get_double("grpo.init_scale");
  g.reward = reward_config();
  g.clip = clip_config();
  g.shape = model_shape();
  return g;
}

train::SftConfig PipelineConfig::sft_config() const {
  train::SftConfig s;
  s.seed = seed();
  s.epochs = get_int("sft.epochs");
  s.batch_size = get_int("sft.batch_size");
  s.lr = get_double("sft.lr");
  s.lr_decay = get_double("sft.lr_decay");
  s.momentum = get_double("sft.momentum");
  s.grad_clip_norm = get_double("sft.clip_norm");
  s.optimizer = get_string("sft.optimizer");
  s.init_scale = get_double("sft.init_scale");
  s.shape = model_shape();
  return s;
}

eval::EvalConfig PipelineConfig::eval_config() const {
  eval::EvalConfig e;
  e.style = render::style_from_string(get_string("eval.style"));
  e.max_completion_len = get_int("eval.max_completion_len");
  e.render_seed = get_u64("eval.render_seed");
  return e;
}

std::vector<int> PipelineConfig::horizons() const {
  const std::string s = get_string("render.horizons");
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    char* end = nullptr;
    const long v = std::strtol(item.c_str(), &end, 10);
    if (end == item.c_str() || *end != '\0' || v < 1 || v > 6) {
      throw_config("render.horizons entries must be integers in [1, 6]");
    }
    out.push_back(static_cast<int>(v));
  }
  if (out.empty()) throw_config("render.horizons is empty");
  return out;
}

std::vector<double> PipelineConfig::style_weights() const {
  const std::string s = get_string("render.style_mix");
  std::vector<double> weights(4, 0.0);
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw_config("render.style_mix entries must be style:weight");
    }
    const std::string name = trim(item.substr(0, colon));
    const double w = std::strtod(item.substr(colon + 1).c_str(), nullptr);
    if (w < 0) throw_config("style weights must be >= 0");
    const render::RenderStyle style = render::style_from_string(name);
    weights[static_cast<size_t>(style)] = w;
  }
  double total = 0;
  for (double w : weights) total += w;
  if (total <= 0) throw_config("render.style_mix has no positive weight");
  return weights;
}

std::string PipelineConfig::dump() const {
  std::ostringstream os;
  for (const auto& [k, v] : values_) os << k << " = " << v << "\n";
  return os.str();
}

void PipelineConfig::validate() const {
  cohort_config().validate();
  reward_config().validate();
  clip_config().validate();
  grpo_config().validate();
  sft_config().validate();
  eval_config();
  horizons();
  style_weights();
  const std::string tm = teacher_mode();
  if (tm != "none" && tm != "plain" && tm != "think") {
    throw_config("render.teacher_mode must be none, plain or think");
  }
  const double tf = test_fraction();
  if (tf < 0.0 || tf >= 1.0) {
    throw_config("render.test_fraction must be in [0, 1)");
  }
  const std::string split = eval_split();
  if (split != "train" && split != "test" && split != "all") {
    throw_config("eval.split must be train, test or all");
  }
  const policy::ModelShape shape = model_shape();
  if (shape.embed_dim <= 0 || shape.embed_dim > 256) {
    throw_config("policy.embed_dim must be in [1, 256]");
  }
  if (shape.context_window <= 0 || shape.context_window > 2048) {
    throw_config("policy.context_window must be in [1, 2048]");
  }
}

}  // namespace lcr::config
