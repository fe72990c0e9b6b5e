#include "taskimp/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "taskimp/ensemble.hpp"
#include "taskimp/errors.hpp"
#include "taskimp/gain.hpp"
#include "taskimp/influence.hpp"
#include "taskimp/metrics.hpp"
#include "taskimp/oracle.hpp"
#include "taskimp/rng.hpp"
#include "taskimp/textio.hpp"
#include "taskimp/train.hpp"

namespace taskimp {

namespace fs = std::filesystem;

namespace {

std::size_t resolve_target(const TimeSeriesDataset& ds, const std::string& column) {
  for (std::size_t c = 0; c < ds.feature_names.size(); ++c)
    if (ds.feature_names[c] == column) return c;
  long long index = 0;
  if (textio::parse_int(column, index) && index >= 0 && static_cast<std::size_t>(index) < ds.features())
    return static_cast<std::size_t>(index);
  throw UsageError("target column '" + column + "' not found in the dataset");
}

std::size_t boundary(const TimeSeriesDataset& ds, const std::string& stamp, double fraction) {
  if (!stamp.empty()) return lower_bound_row(ds, parse_time_key(stamp));
  return static_cast<std::size_t>(fraction * static_cast<double>(ds.length()));
}

fs::path require(const fs::path& path, const char* producer) {
  if (!fs::exists(path))
    throw DataError("missing '" + path.string() + "'; run `taskimp " + producer + "` first");
  return path;
}

// Imputation files hold values in the units of the source file.
void save_imputation_units(const fs::path& path, const PreparedData& data, const MaskedTraining& mt,
                           const ImputationSet& imp) {
  const std::size_t c = data.normalized.target_index;
  ImputationSet raw = imp;
  for (auto& v : raw.series) v = v * data.normalizer.scale[c] + data.normalizer.mean[c];
  save_imputation(path, data.train_truth, mt.mask, raw);
}

ImputationSet load_imputation_units(const fs::path& path, const PreparedData& data, const MaskedTraining& mt,
                                    std::string name) {
  const std::size_t c = data.normalized.target_index;
  SampleSet raw = data.train_truth;
  for (auto& v : raw.series) v = v * data.normalizer.scale[c] + data.normalizer.mean[c];
  auto loaded = load_external_imputation(path, raw, mt.mask, name);
  std::vector<double> series = data.train_truth.series;
  for (std::size_t t = 0; t < series.size(); ++t)
    if (mt.mask.series_mask[t]) series[t] = (loaded.series[t] - data.normalizer.mean[c]) / data.normalizer.scale[c];
  return imputation_from_series(data.train_truth, std::move(series), loaded.source_name);
}

struct Loaded {
  PreparedData data;
  MaskedTraining mt;
};

Loaded load_masked(const ExperimentConfig& cfg) {
  auto data = prepare_data(cfg);
  auto mask = load_mask(require(cfg.output_root() / artifact::mask, "mask"), data.train_truth);
  auto mt = attach_mask(data, std::move(mask), cfg.period);
  return {std::move(data), std::move(mt)};
}

const SampleSet& eval_set(const ExperimentConfig& cfg, const PreparedData& data) {
  return cfg.eval_split == "test" ? data.test : data.val;
}

void write_text(const fs::path& path, const std::string& text) {
  auto out = textio::open_output(path);
  out << text;
}

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  std::map<std::string, std::string> kv;
  if (!fs::exists(path)) return kv;
  const auto file = textio::read_delimited(path);
  for (const auto& row : file.rows)
    if (row.size() >= 2) kv[row[0]] = row[1];
  return kv;
}

void write_key_values(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& kv) {
  auto out = textio::open_output(path);
  out << "key,value\n";
  for (const auto& [k, v] : kv) out << k << ',' << v << '\n';
}

std::string fmt(double v) { return textio::format_double(v); }

// DLinear needs its output projection to mix several input channels.
Architecture arch_for(const ExperimentConfig& cfg, const Dims& dims) {
  Architecture arch = cfg.arch;
  if (auto* d = std::get_if<DLinearArch>(&arch); d && dims.features > 1) d->output_projection = true;
  return arch;
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& cfg) {
  TimeSeriesDataset raw;
  if (cfg.dataset.empty()) {
    raw = synthetic_load(cfg.synthetic_length, cfg.seed, cfg.synthetic_features);
  } else {
    raw = load_series(cfg.dataset, 0);
  }
  raw.target_index = resolve_target(raw, cfg.target_column);
  raw.validate();

  PreparedData data;
  data.train_end = boundary(raw, cfg.train_end, cfg.train_fraction);
  data.val_end = boundary(raw, cfg.val_end, cfg.train_fraction + cfg.val_fraction);
  const std::size_t need = cfg.input_len + cfg.output_len;
  if (data.train_end < need || data.val_end < data.train_end + need || raw.length() < data.val_end + need)
    throw DataError("split boundaries leave a split shorter than input_len + output_len = " + std::to_string(need));

  data.normalizer = Normalizer::fit(raw, data.train_end);
  if (!cfg.normalize) {
    std::fill(data.normalizer.mean.begin(), data.normalizer.mean.end(), 0.0);
    std::fill(data.normalizer.scale.begin(), data.normalizer.scale.end(), 1.0);
  }
  data.normalized = data.normalizer.apply(raw);
  auto cut = [&](std::size_t b, std::size_t e, Split s) {
    return window(slice_rows(data.normalized, b, e), cfg.input_len, cfg.output_len, cfg.stride, s);
  };
  data.train_truth = cut(0, data.train_end, Split::train);
  data.val = cut(data.train_end, data.val_end, Split::validation);
  data.test = cut(data.val_end, data.normalized.length(), Split::test);
  return data;
}

MaskedTraining attach_mask(const PreparedData& data, MaskSet mask, std::size_t period) {
  MaskedTraining mt;
  mt.mask = std::move(mask);
  mt.mean = impute(data.train_truth, mt.mask, ImputeMethod::mean, period);
  mt.train = with_target_inputs(data.train_truth, mt.mean.series);
  return mt;
}

ImputationSet resolve_source(const std::string& name, const PreparedData& data, const MaskedTraining& mt,
                             const fs::path& out_dir, std::size_t period) {
  if (name == "truth") return imputation_from_series(data.train_truth, data.train_truth.series, "truth");
  if (name.rfind("external:", 0) == 0) {
    const fs::path path = name.substr(9);
    return load_imputation_units(path, data, mt, "external:" + path.stem().string());
  }
  if (name == "mean" || name == "linear") {
    const fs::path file = out_dir / (name == "mean" ? artifact::impute_mean : artifact::impute_linear);
    if (fs::exists(file)) return load_imputation_units(file, data, mt, name);
    return impute(data.train_truth, mt.mask, name == "mean" ? ImputeMethod::mean : ImputeMethod::linear, period);
  }
  throw UsageError("unknown imputation source '" + name + "' (mean, linear, truth or external:<path>)");
}

void cmd_mask(const ExperimentConfig& cfg, std::ostream& log) {
  const auto data = prepare_data(cfg);
  const auto mask = generate_mask(data.train_truth, cfg.mask);
  const auto root = cfg.output_root();
  save_mask(root / artifact::mask, data.train_truth, mask);
  write_text(root / artifact::config, serialize_config(cfg));
  log << "mask: " << mask.series_mask.size() << " training rows, realized rate " << fmt(mask.realized_rate)
      << " -> " << (root / artifact::mask).string() << '\n';
}

void cmd_impute(const ExperimentConfig& cfg, std::ostream& log) {
  const auto [data, mt] = load_masked(cfg);
  const auto root = cfg.output_root();
  const auto linear = impute(data.train_truth, mt.mask, ImputeMethod::linear, cfg.period);
  save_imputation_units(root / artifact::impute_mean, data, mt, mt.mean);
  save_imputation_units(root / artifact::impute_linear, data, mt, linear);
  const double mse_mean = imputation_mse(mt.mean, data.train_truth, mt.mask);
  const double mse_linear = imputation_mse(linear, data.train_truth, mt.mask);
  write_key_values(root / artifact::impute_summary,
                   {{"mean", fmt(mse_mean)}, {"linear", fmt(mse_linear)}});
  log << "impute: imputation MSE mean=" << fmt(mse_mean) << " linear=" << fmt(mse_linear) << '\n';
}

void cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
  const auto [data, mt] = load_masked(cfg);
  const auto root = cfg.output_root();
  if (cfg.first == "mean" || cfg.first == "linear") require(root / artifact::impute_mean, "impute");
  const auto labels = resolve_source(cfg.first, data, mt, root, cfg.period);
  const auto result = train(arch_for(cfg, mt.train.dims), mt.train, labels.labels, data.val, cfg.train);
  save_params(root / artifact::model, result.params);
  save_trajectory(root / artifact::trajectory, result.trajectory);
  const double val = evaluate(result.params, data.val);
  const double test = evaluate(result.params, data.test);
  write_key_values(root / artifact::train_summary, {{"labels", labels.source_name},
                                                    {"arch", describe(arch_for(cfg, mt.train.dims))},
                                                    {"epochs", std::to_string(result.trajectory.epochs())},
                                                    {"best_epoch", std::to_string(result.trajectory.best_epoch)},
                                                    {"val_mse", fmt(val)},
                                                    {"test_mse", fmt(test)}});
  log << "train: " << describe(arch_for(cfg, mt.train.dims)) << " on " << labels.source_name << ", best epoch "
      << result.trajectory.best_epoch << "/" << result.trajectory.epochs() << ", val MSE " << fmt(val)
      << ", test MSE " << fmt(test) << '\n';
}

void cmd_estimate(const ExperimentConfig& cfg, std::ostream& log) {
  const auto root = cfg.output_root();
  require(root / artifact::model, "train");
  const auto [data, mt] = load_masked(cfg);
  const auto params = load_params(root / artifact::model);
  const auto first = resolve_source(cfg.first, data, mt, root, cfg.period);
  const auto second = resolve_source(cfg.second, data, mt, root, cfg.period);
  const auto& eval = eval_set(cfg, data);
  GainOptions opts;
  opts.threads = cfg.threads;
  opts.mask = &mt.mask;

  const auto start = std::chrono::steady_clock::now();
  GainMatrix g;
  std::string label = cfg.estimator;
  std::string cg_message;
  if (cfg.estimator == "seq-sim") {
    g = estimate_seq_sim(params, mt.train, first, second, eval, opts);
  } else if (cfg.estimator == "seg") {
    g = estimate_seg(params, mt.train, first, second, eval, cfg.segments, opts);
    label = g.estimator;
  } else if (cfg.estimator == "trajectory") {
    const auto traj = load_trajectory(require(root / artifact::trajectory, "train"));
    g = estimate_trajectory(traj, mt.train, first, second, eval, opts);
  } else {
    const auto res = estimate_influence(params, mt.train, first, second, eval, cfg.influence, &mt.mask);
    g = res.gain;
    cg_message = res.cg.message;
    log << "estimate: conjugate gradients " << res.cg.message << " after " << res.cg.iterations
        << " iterations, residual " << fmt(res.cg.residual_norm) << '\n';
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  save_gain_matrix(root / artifact::gain, g);
  {
    const bool fresh = !fs::exists(root / artifact::gain_timing);
    std::ofstream timing(root / artifact::gain_timing, std::ios::app);
    if (fresh) timing << "method,seconds\n";
    timing << label << ',' << fmt(seconds) << '\n';
  }
  std::size_t positive = 0;
  for (double v : g.values) positive += v > 0.0;
  log << "estimate: " << label << " over " << g.samples << "x" << g.horizon << " entries, " << positive
      << " positive, " << fmt(seconds) << " s -> " << (root / artifact::gain).string() << '\n';
  if (!g.converged) throw NumericalError("influence solve did not converge (" + cg_message + "); the gain matrix is flagged");
}

void cmd_oracle(const ExperimentConfig& cfg, std::ostream& log) {
  const auto root = cfg.output_root();
  const auto [data, mt] = load_masked(cfg);
  const auto first = resolve_source(cfg.first, data, mt, root, cfg.period);
  const auto second = resolve_source(cfg.second, data, mt, root, cfg.period);
  OracleProblem problem{&mt.train, &first, &second, &data.val, &eval_set(cfg, data), arch_for(cfg, mt.train.dims), cfg.train};
  const std::size_t n = mt.train.size();
  const std::size_t count = cfg.oracle_count == 0 ? n : std::min(n, cfg.oracle_count);
  std::vector<std::size_t> indices(count);
  for (std::size_t k = 0; k < count; ++k) indices[k] = k * n / count;
  SweepOptions opts;
  opts.threads = cfg.threads;
  opts.resume_file = root / artifact::oracle;
  opts.progress = [&log, step = std::max<std::size_t>(1, count / 10)](std::size_t done, std::size_t total) {
    if (done % step == 0 || done == total) log << "oracle: " << done << "/" << total << " retrains\n";
  };
  const auto result = oracle_sweep(problem, indices, opts);
  save_oracle(root / artifact::oracle, result);
  std::ofstream timing(root / artifact::oracle_timing);
  timing << "retrains,seconds,per_retrain_seconds,projected_8760_seconds\n"
         << count << ',' << fmt(result.seconds) << ',' << fmt(result.per_retrain_seconds) << ','
         << fmt(result.projected_seconds(8760)) << '\n';
  log << "oracle: " << count << " retrains in " << fmt(result.seconds) << " s; projected for 8760 samples "
      << fmt(result.projected_seconds(8760) / 3600.0) << " h\n";
}

void cmd_ensemble(const ExperimentConfig& cfg, std::ostream& log) {
  const auto root = cfg.output_root();
  const auto g = load_gain_matrix(require(root / artifact::gain, "estimate"));
  require(root / artifact::model, "train");
  const auto [data, mt] = load_masked(cfg);
  if (g.eval_split == Split::test) throw UsageError("ensemble gains must come from the validation split");
  const auto first = resolve_source(cfg.first, data, mt, root, cfg.period);
  const auto second = resolve_source(cfg.second, data, mt, root, cfg.period);
  EnsembleSpec spec{cfg.replace_percent, &g, &first, &second};
  const auto baseline = load_params(root / artifact::model);
  const auto out = run_ensemble(spec, arch_for(cfg, mt.train.dims), cfg.train, mt.train, data.val, data.test, baseline);
  save_spliced(root / artifact::spliced, mt.train, out.spliced, spec);
  const auto& r = out.report;
  write_key_values(root / artifact::ensemble, {{"pair", first.source_name + "+" + second.source_name},
                                               {"estimator", g.estimator},
                                               {"replace_percent", fmt(cfg.replace_percent)},
                                               {"threshold", fmt(r.threshold)},
                                               {"positive_gains", std::to_string(r.positive_count)},
                                               {"replaced", std::to_string(r.replaced_count)},
                                               {"baseline_test_mse", fmt(r.baseline_test_mse)},
                                               {"ensemble_test_mse", fmt(r.ensemble_test_mse)}});
  log << "ensemble: replaced " << r.replaced_count << " of " << r.positive_count << " positive-gain entries; test MSE "
      << fmt(r.baseline_test_mse) << " (" << first.source_name << ") -> " << fmt(r.ensemble_test_mse) << '\n';
}

void cmd_discard(const ExperimentConfig& cfg, std::ostream& log) {
  const auto root = cfg.output_root();
  require(root / artifact::model, "train");
  const auto [data, mt] = load_masked(cfg);
  const auto params = load_params(root / artifact::model);
  // The model is trained on pair.first; the influence of moving each label
  // back to the calendar mean marks harmful imputed samples.
  const auto first = resolve_source(cfg.first, data, mt, root, cfg.period);
  const auto res = estimate_influence(params, mt.train, first, mt.mean, data.val, cfg.influence, &mt.mask);
  if (!res.cg.converged) log << "discard: warning, conjugate gradients " << res.cg.message << '\n';
  const auto drop = rank_discard(res.gain, cfg.discard_percent);

  SampleSet kept = mt.train;
  std::vector<double> labels;
  kept.inputs.clear();
  kept.targets.clear();
  for (std::size_t i = 0, d = 0; i < mt.train.size(); ++i) {
    if (d < drop.size() && drop[d] == i) {
      ++d;
      continue;
    }
    const auto x = mt.train.input(i);
    kept.inputs.insert(kept.inputs.end(), x.begin(), x.end());
    const auto y = mt.train.target(i);
    kept.targets.insert(kept.targets.end(), y.begin(), y.end());
    const auto lab = first.label(i);
    labels.insert(labels.end(), lab.begin(), lab.end());
  }
  TrainConfig quiet = cfg.train;
  quiet.record_trajectory = false;
  const auto retrained = train(arch_for(cfg, kept.dims), kept, labels, data.val, quiet);
  const double base = evaluate(params, data.test);
  const double after = evaluate(retrained.params, data.test);
  std::vector<std::pair<std::string, std::string>> kv = {{"labels", first.source_name},
                                                         {"discard_percent", fmt(cfg.discard_percent)},
                                                         {"discarded", std::to_string(drop.size())},
                                                         {"cg_converged", res.cg.converged ? "1" : "0"},
                                                         {"baseline_test_mse", fmt(base)},
                                                         {"discard_test_mse", fmt(after)}};
  write_key_values(root / artifact::discard, kv);
  log << "discard: removed " << drop.size() << " samples; test MSE " << fmt(base) << " -> " << fmt(after) << '\n';
}

ToyTable run_toy(const ExperimentConfig& cfg) {
  const auto data = prepare_data(cfg);
  const auto train_rows = slice_rows(data.normalized, 0, data.train_end);
  ToyOptions opts{cfg.toy_keep_one, cfg.toy_keep_two, cfg.toy_noise_mean, cfg.toy_noise_std, derive_seed(cfg.seed, "toy")};
  const auto variants = simulate_toy(train_rows, opts);
  TrainConfig tc = cfg.train;
  tc.record_trajectory = false;
  auto run = [&](const TimeSeriesDataset& degraded, const char* name) {
    const auto ss = window(degraded, cfg.input_len, cfg.output_len, cfg.stride, Split::train);
    const auto fit = train(arch_for(cfg, ss.dims), ss, ss.targets, data.val, tc);
    return ToyRow{name, series_mse(ss.series, data.train_truth.series), evaluate(fit.params, data.test)};
  };
  return {run(variants.case_one, "case I"), run(variants.case_two, "case II")};
}

void cmd_toy(const ExperimentConfig& cfg, std::ostream& log) {
  const auto table = run_toy(cfg);
  std::ostringstream text;
  text << "case,imputation_mse,forecast_mse\n";
  for (const auto* row : {&table.case_one, &table.case_two})
    text << row->name << ',' << fmt(row->imputation_mse) << ',' << fmt(row->forecast_mse) << '\n';
  write_text(cfg.output_root() / artifact::toy, text.str());
  log << text.str();
}

void cmd_report(const ExperimentConfig& cfg, std::ostream& log, bool with_timing) {
  const auto root = cfg.output_root();
  const auto dir = root / artifact::report_dir;
  std::ostringstream md;
  md << "# Experiment report\n\n";
  md << "Configuration: `" << (root / artifact::config).filename().string() << "` (seed " << cfg.seed << ", "
     << describe(cfg.arch) << ", L1=" << cfg.input_len << ", L2=" << cfg.output_len << ").\n\n";
  std::size_t sections = 0;

  const auto imp = read_key_values(root / artifact::impute_summary);
  if (!imp.empty()) {
    ++sections;
    md << "## Imputation MSE (masked training rows)\n\n| source | MSE |\n|---|---|\n";
    for (const auto& [k, v] : imp) md << "| " << k << " | " << v << " |\n";
    md << '\n';
  }

  std::vector<std::pair<std::string, double>> bars;
  std::ostringstream table;
  table << "model,test_mse\n";
  const auto tr = read_key_values(root / artifact::train_summary);
  if (!tr.empty()) {
    double v = 0.0;
    textio::parse_double(tr.at("test_mse"), v);
    bars.emplace_back(tr.at("labels"), v);
    table << tr.at("labels") << ',' << tr.at("test_mse") << '\n';
  }
  const auto en = read_key_values(root / artifact::ensemble);
  if (!en.empty()) {
    double v = 0.0;
    textio::parse_double(en.at("ensemble_test_mse"), v);
    bars.emplace_back(en.at("pair"), v);
    table << en.at("pair") << ',' << en.at("ensemble_test_mse") << '\n';
  }
  const auto di = read_key_values(root / artifact::discard);
  if (!di.empty()) {
    double v = 0.0;
    textio::parse_double(di.at("discard_test_mse"), v);
    bars.emplace_back(di.at("labels") + "-discard", v);
    table << di.at("labels") << "-discard," << di.at("discard_test_mse") << '\n';
  }
  if (!bars.empty()) {
    ++sections;
    write_text(dir / "mse_table.csv", table.str());
    write_bar_chart(dir / "mse.svg", "Forecast test MSE", bars);
    md << "## Forecast test MSE\n\n| training labels | test MSE |\n|---|---|\n";
    for (const auto& [k, v] : bars) md << "| " << k << " | " << fmt(v) << " |\n";
    if (!en.empty())
      md << "\nEnsemble replaced " << en.at("replaced") << " of " << en.at("positive_gains")
         << " positive-gain entries (threshold " << en.at("threshold") << ").\n";
    md << "\n![mse](mse.svg)\n\n";
  }

  if (fs::exists(root / artifact::gain) && fs::exists(root / artifact::oracle)) {
    const auto g = load_gain_matrix(root / artifact::gain);
    const auto o = load_oracle(root / artifact::oracle);
    const auto totals = g.sample_totals();
    std::vector<double> est;
    for (auto i : o.indices) {
      if (i >= totals.size()) throw DataError("oracle and gain matrix disagree on the sample count");
      est.push_back(totals[i]);
    }
    const auto curve = agreement(est, o.true_gains);
    ++sections;
    write_text(dir / "agreement.csv", format_agreement(curve));
    Series corr{"correlation", {}, {}}, sign{"sign accuracy", {}, {}};
    for (const auto& p : curve.points) {
      corr.x.push_back(p.percent);
      corr.y.push_back(p.corr);
      sign.x.push_back(p.percent);
      sign.y.push_back(p.sign_acc);
    }
    write_line_chart(dir / "agreement.svg", g.estimator + " vs retraining oracle", "top x% by |estimate|", "value",
                     {corr, sign});
    md << "## Estimate vs retraining oracle (" << g.estimator << ", " << o.indices.size() << " samples)\n\n"
       << "| top x% | n | correlation | sign accuracy |\n|---|---|---|---|\n";
    for (const auto& p : curve.points)
      md << "| " << fmt(p.percent) << " | " << p.selected << " | " << (p.corr ? fmt(*p.corr) : "NA") << " | "
         << (p.sign_acc ? fmt(*p.sign_acc) : "NA") << " |\n";
    md << "\n![agreement](agreement.svg)\n\n";
  }

  if (fs::exists(root / artifact::toy)) {
    ++sections;
    md << "## Toy example\n\n";
    const auto file = textio::read_delimited(root / artifact::toy);
    md << "| case | imputation MSE | forecast MSE |\n|---|---|---|\n";
    for (const auto& row : file.rows)
      if (row.size() == 3) md << "| " << row[0] << " | " << row[1] << " | " << row[2] << " |\n";
    md << '\n';
  }

  if (with_timing) {
    std::vector<TimedRun> runs;
    if (fs::exists(root / artifact::gain_timing)) {
      for (const auto& row : textio::read_delimited(root / artifact::gain_timing).rows) {
        double s = 0.0;
        if (row.size() == 2 && textio::parse_double(row[1], s)) runs.push_back({row[0], s});
      }
    }
    std::optional<double> per_retrain;
    if (fs::exists(root / artifact::oracle_timing)) {
      const auto rows = textio::read_delimited(root / artifact::oracle_timing).rows;
      double s = 0.0;
      if (!rows.empty() && rows[0].size() == 4 && textio::parse_double(rows[0][2], s)) per_retrain = s;
    }
    if (!runs.empty()) {
      ++sections;
      const auto t = timing_report(runs, per_retrain);
      write_text(dir / "timing.csv", format_timing(t));
      md << "## Timing (wall seconds, this machine)\n\n```\n" << format_timing(t) << "```\n\n";
    }
  }

  if (sections == 0) throw DataError("nothing to report in '" + root.string() + "'; run `taskimp train` first");
  write_text(dir / "report.md", md.str());
  log << "report: " << sections << " sections -> " << (dir / "report.md").string() << '\n';
}

}  // namespace taskimp
