#include "taskimp/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "taskimp/errors.hpp"
#include "taskimp/rng.hpp"
#include "taskimp/textio.hpp"

namespace taskimp {

namespace {

double as_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  if (!textio::parse_double(v, out)) throw UsageError("config '" + key + "': expected a number, got '" + v + "'");
  return out;
}

long long as_int(const std::string& key, const std::string& v, long long min) {
  long long out = 0;
  if (!textio::parse_int(v, out) || out < min)
    throw UsageError("config '" + key + "': expected an integer >= " + std::to_string(min) + ", got '" + v + "'");
  return out;
}

std::size_t as_size(const std::string& key, const std::string& v) {
  return static_cast<std::size_t>(as_int(key, v, 0));
}

bool as_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("config '" + key + "': expected true/false, got '" + v + "'");
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + std::to_string(v[k]);
  return out;
}

MlpArch& mlp(ExperimentConfig& c) {
  if (!std::holds_alternative<MlpArch>(c.arch)) throw UsageError("mlp.* keys need model=mlp (set model first)");
  return std::get<MlpArch>(c.arch);
}

DLinearArch& dlinear(ExperimentConfig& c) {
  if (!std::holds_alternative<DLinearArch>(c.arch))
    throw UsageError("dlinear.* keys need model=dlinear (set model first)");
  return std::get<DLinearArch>(c.arch);
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
  const std::string value(textio::trim(raw));
  if (key == "dataset") dataset = value;
  else if (key == "synthetic.length") synthetic_length = as_size(key, value);
  else if (key == "synthetic.features") synthetic_features = as_size(key, value);
  else if (key == "target_column") target_column = value;
  else if (key == "split.train_end") train_end = value;
  else if (key == "split.val_end") val_end = value;
  else if (key == "split.train_fraction") train_fraction = as_double(key, value);
  else if (key == "split.val_fraction") val_fraction = as_double(key, value);
  else if (key == "input_len") input_len = as_size(key, value);
  else if (key == "output_len") output_len = as_size(key, value);
  else if (key == "stride") stride = as_size(key, value);
  else if (key == "period") period = as_size(key, value);
  else if (key == "normalize") normalize = as_bool(key, value);
  else if (key == "mask.rate") mask.missing_rate = as_double(key, value);
  else if (key == "mask.runs") {
    mask.run_lengths.clear();
    for (const auto& part : textio::split(value, ',')) mask.run_lengths.push_back(as_size(key, std::string(textio::trim(part))));
  } else if (key == "model") {
    if (value == "mlp") arch = MlpArch{};
    else if (value == "dlinear") arch = DLinearArch{};
    else throw UsageError("config 'model': expected mlp or dlinear, got '" + value + "'");
  } else if (key == "mlp.layers") mlp(*this).layers = as_size(key, value);
  else if (key == "mlp.hidden") mlp(*this).hidden = as_size(key, value);
  else if (key == "dlinear.kernel") dlinear(*this).kernel = as_size(key, value);
  else if (key == "dlinear.projection") dlinear(*this).output_projection = as_bool(key, value);
  else if (key == "train.lr") train.learning_rate = as_double(key, value);
  else if (key == "train.max_epochs") train.max_epochs = as_size(key, value);
  else if (key == "train.patience") train.patience = as_size(key, value);
  else if (key == "train.batch_size") train.batch_size = as_size(key, value);
  else if (key == "estimator") estimator = value;
  else if (key == "segments") segments = as_size(key, value);
  else if (key == "influence.damping") influence.damping = as_double(key, value);
  else if (key == "influence.cg_max_iters") influence.cg_max_iters = as_size(key, value);
  else if (key == "influence.cg_tolerance") influence.cg_tolerance = as_double(key, value);
  else if (key == "ensemble.replace_percent") replace_percent = as_double(key, value);
  else if (key == "discard.percent") discard_percent = as_double(key, value);
  else if (key == "pair.first") first = value;
  else if (key == "pair.second") second = value;
  else if (key == "oracle.count") oracle_count = as_size(key, value);
  else if (key == "eval_split") eval_split = value;
  else if (key == "toy.noise_mean") toy_noise_mean = as_double(key, value);
  else if (key == "toy.noise_std") toy_noise_std = as_double(key, value);
  else if (key == "toy.keep_one") toy_keep_one = as_size(key, value);
  else if (key == "toy.keep_two") toy_keep_two = as_size(key, value);
  else if (key == "output_dir") output_dir = value;
  else if (key == "seed") seed = static_cast<std::uint64_t>(as_int(key, value, 0));
  else if (key == "threads") threads = static_cast<int>(as_int(key, value, 1));
  else throw UsageError("unknown config key '" + key + "'");
}

void ExperimentConfig::finalize() {
  mask.seed = derive_seed(seed, "mask");
  train.seed = seed;
  influence.threads = threads;
  mask.validate();
  train.validate();
  influence.validate();
  if (input_len == 0 || output_len == 0 || stride == 0 || period == 0)
    throw UsageError("input_len, output_len, stride and period must be positive");
  if (!(train_fraction > 0.0) || !(val_fraction > 0.0) || train_fraction + val_fraction >= 1.0)
    throw UsageError("split fractions must be positive and leave room for a test split");
  if (estimator != "seq-sim" && estimator != "seg" && estimator != "trajectory" && estimator != "influence")
    throw UsageError("estimator must be seq-sim, seg, trajectory or influence");
  if (segments == 0 || segments > output_len) throw UsageError("segments must lie in [1, output_len]");
  if (!(replace_percent > 0.0 && replace_percent <= 100.0)) throw UsageError("ensemble.replace_percent must lie in (0, 100]");
  if (!(discard_percent > 0.0 && discard_percent < 100.0)) throw UsageError("discard.percent must lie in (0, 100)");
  if (eval_split != "validation" && eval_split != "test") throw UsageError("eval_split must be validation or test");
  if (toy_keep_one < 2 || toy_keep_two < 2) throw UsageError("toy keep intervals must be at least 2");
}

std::filesystem::path ExperimentConfig::output_root() const {
  if (!output_dir.empty()) return output_dir;
  if (const char* env = std::getenv("TASKIMP_OUT"); env && *env) return env;
  return "taskimp_out";
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = textio::trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw UsageError("config line " + std::to_string(lineno) + ": expected key=value");
    cfg.set(std::string(textio::trim(body.substr(0, eq))), std::string(body.substr(eq + 1)));
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream o;
  auto put = [&](const char* key, const std::string& v) { o << key << '=' << v << '\n'; };
  auto num = [](double v) { return textio::format_double(v); };
  put("dataset", c.dataset);
  put("synthetic.length", std::to_string(c.synthetic_length));
  put("synthetic.features", std::to_string(c.synthetic_features));
  put("target_column", c.target_column);
  put("split.train_end", c.train_end);
  put("split.val_end", c.val_end);
  put("split.train_fraction", num(c.train_fraction));
  put("split.val_fraction", num(c.val_fraction));
  put("input_len", std::to_string(c.input_len));
  put("output_len", std::to_string(c.output_len));
  put("stride", std::to_string(c.stride));
  put("period", std::to_string(c.period));
  put("normalize", c.normalize ? "true" : "false");
  put("mask.rate", num(c.mask.missing_rate));
  put("mask.runs", join_sizes(c.mask.run_lengths));
  if (const auto* m = std::get_if<MlpArch>(&c.arch)) {
    put("model", "mlp");
    put("mlp.layers", std::to_string(m->layers));
    put("mlp.hidden", std::to_string(m->hidden));
  } else {
    const auto& d = std::get<DLinearArch>(c.arch);
    put("model", "dlinear");
    put("dlinear.kernel", std::to_string(d.kernel));
    put("dlinear.projection", d.output_projection ? "true" : "false");
  }
  put("train.lr", num(c.train.learning_rate));
  put("train.max_epochs", std::to_string(c.train.max_epochs));
  put("train.patience", std::to_string(c.train.patience));
  put("train.batch_size", std::to_string(c.train.batch_size));
  put("estimator", c.estimator);
  put("segments", std::to_string(c.segments));
  put("influence.damping", num(c.influence.damping));
  put("influence.cg_max_iters", std::to_string(c.influence.cg_max_iters));
  put("influence.cg_tolerance", num(c.influence.cg_tolerance));
  put("ensemble.replace_percent", num(c.replace_percent));
  put("discard.percent", num(c.discard_percent));
  put("pair.first", c.first);
  put("pair.second", c.second);
  put("oracle.count", std::to_string(c.oracle_count));
  put("eval_split", c.eval_split);
  put("toy.noise_mean", num(c.toy_noise_mean));
  put("toy.noise_std", num(c.toy_noise_std));
  put("toy.keep_one", std::to_string(c.toy_keep_one));
  put("toy.keep_two", std::to_string(c.toy_keep_two));
  put("output_dir", c.output_dir);
  put("seed", std::to_string(c.seed));
  put("threads", std::to_string(c.threads));
  return o.str();
}

}  // namespace taskimp
