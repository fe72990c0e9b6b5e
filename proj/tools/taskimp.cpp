// Command-line front end: one subcommand per pipeline stage.
#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "taskimp/config.hpp"
#include "taskimp/dataset.hpp"
#include "taskimp/errors.hpp"
#include "taskimp/pipeline.hpp"

namespace {

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string out_dir;
  long long seed = -1;
  int threads = 0;
};

taskimp::ExperimentConfig build_config(const CommonOptions& o) {
  auto cfg = o.config_file.empty() ? taskimp::ExperimentConfig{} : taskimp::load_config(o.config_file);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw taskimp::UsageError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
  if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
  if (o.threads > 0) cfg.threads = o.threads;
  cfg.finalize();
  return cfg;
}

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("-c,--config", o.config_file, "key=value configuration file");
  cmd->add_option("-s,--set", o.overrides, "override a configuration key (key=value), repeatable");
  cmd->add_option("-o,--out", o.out_dir, "output directory (default $TASKIMP_OUT or ./taskimp_out)");
  cmd->add_option("--seed", o.seed, "global seed");
  cmd->add_option("-j,--threads", o.threads, "worker threads");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Task-oriented evaluation and ensembling of time-series imputations"};
  app.require_subcommand(1);
  CommonOptions common;
  bool with_timing = false;
  std::string synth_path;
  std::size_t synth_length = 2400, synth_features = 1;
  std::uint64_t synth_seed = 0;

  auto* synth = app.add_subcommand("synth", "write the synthetic load series to a CSV file");
  synth->add_option("path", synth_path, "output CSV")->required();
  synth->add_option("--length", synth_length, "rows");
  synth->add_option("--features", synth_features, "1 (load) or 2 (load, temperature)");
  synth->add_option("--seed", synth_seed, "generator seed");

  struct Stage {
    const char* name;
    const char* help;
    void (*run)(const taskimp::ExperimentConfig&, std::ostream&);
  };
  const std::vector<Stage> stages = {
      {"mask", "simulate missing runs on the training split", taskimp::cmd_mask},
      {"impute", "fill the mask with calendar-mean and linear imputations", taskimp::cmd_impute},
      {"train", "train the forecaster on pair.first labels", taskimp::cmd_train},
      {"estimate", "estimate per-timestep gains of swapping pair.first for pair.second", taskimp::cmd_estimate},
      {"oracle", "brute-force retraining ground truth for per-sample gains", taskimp::cmd_oracle},
      {"ensemble", "splice the pair by thresholded gains and retrain", taskimp::cmd_ensemble},
      {"discard", "drop the most harmful samples by influence and retrain", taskimp::cmd_discard},
      {"toy", "imputation accuracy vs forecasting accuracy toy example", taskimp::cmd_toy},
  };
  std::vector<CLI::App*> stage_cmds;
  for (const auto& s : stages) {
    auto* cmd = app.add_subcommand(s.name, s.help);
    add_common(cmd, common);
    stage_cmds.push_back(cmd);
  }
  auto* report = app.add_subcommand("report", "assemble tables and charts from earlier outputs");
  add_common(report, common);
  report->add_flag("--with-timing", with_timing, "include wall-clock timings (not reproducible)");
  auto* run = app.add_subcommand("run", "mask, impute, train, estimate, ensemble and report in one go");
  add_common(run, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (synth->parsed()) {
      taskimp::save_series(synth_path, taskimp::synthetic_load(synth_length, synth_seed, synth_features));
      std::cerr << "synth: " << synth_length << " rows -> " << synth_path << '\n';
      return 0;
    }
    const auto cfg = build_config(common);
    for (std::size_t k = 0; k < stages.size(); ++k)
      if (stage_cmds[k]->parsed()) stages[k].run(cfg, std::cerr);
    if (report->parsed()) taskimp::cmd_report(cfg, std::cerr, with_timing);
    if (run->parsed()) {
      for (auto* step : {taskimp::cmd_mask, taskimp::cmd_impute, taskimp::cmd_train, taskimp::cmd_estimate,
                         taskimp::cmd_ensemble})
        step(cfg, std::cerr);
      taskimp::cmd_report(cfg, std::cerr, false);
    }
  } catch (const taskimp::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const taskimp::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const taskimp::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
