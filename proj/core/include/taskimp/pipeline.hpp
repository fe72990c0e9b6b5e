#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "taskimp/config.hpp"
#include "taskimp/dataset.hpp"
#include "taskimp/imputation.hpp"
#include "taskimp/masking.hpp"
#include "taskimp/samples.hpp"

namespace taskimp {

// Normalized, split and windowed data. Training windows carry clean inputs
// and targets here; attach_mask swaps in the baseline-imputed inputs.
struct PreparedData {
  TimeSeriesDataset normalized;
  Normalizer normalizer;
  std::size_t train_end = 0;  // row boundaries into `normalized`
  std::size_t val_end = 0;
  SampleSet train_truth;
  SampleSet val;
  SampleSet test;
};

PreparedData prepare_data(const ExperimentConfig& cfg);

struct MaskedTraining {
  MaskSet mask;
  ImputationSet mean;  // the calendar-mean baseline
  SampleSet train;     // inputs from `mean`, targets clean
};

MaskedTraining attach_mask(const PreparedData& data, MaskSet mask, std::size_t period);

// Resolves "mean", "linear", "truth" or "external:<path>" for the training
// split. mean/linear come from the files cmd impute wrote when present.
ImputationSet resolve_source(const std::string& name, const PreparedData& data, const MaskedTraining& mt,
                             const std::filesystem::path& out_dir, std::size_t period);

// Artifact file names inside the output directory.
namespace artifact {
inline constexpr const char* config = "config.txt";
inline constexpr const char* mask = "mask.csv";
inline constexpr const char* impute_mean = "imputation_mean.csv";
inline constexpr const char* impute_linear = "imputation_linear.csv";
inline constexpr const char* impute_summary = "imputation_summary.csv";
inline constexpr const char* model = "model.params";
inline constexpr const char* trajectory = "trajectory";
inline constexpr const char* train_summary = "train_summary.csv";
inline constexpr const char* gain = "gain.csv";
inline constexpr const char* gain_timing = "timing_estimate.csv";
inline constexpr const char* oracle = "oracle.csv";
inline constexpr const char* oracle_timing = "timing_oracle.csv";
inline constexpr const char* spliced = "spliced.csv";
inline constexpr const char* ensemble = "ensemble.csv";
inline constexpr const char* discard = "discard.csv";
inline constexpr const char* toy = "toy_table.csv";
inline constexpr const char* report_dir = "report";
}  // namespace artifact

// One function per CLI subcommand. Each reads its upstream artifacts from
// cfg.output_root(), overwrites its own outputs and logs progress to `log`.
void cmd_mask(const ExperimentConfig& cfg, std::ostream& log);
void cmd_impute(const ExperimentConfig& cfg, std::ostream& log);
void cmd_train(const ExperimentConfig& cfg, std::ostream& log);
void cmd_estimate(const ExperimentConfig& cfg, std::ostream& log);
void cmd_oracle(const ExperimentConfig& cfg, std::ostream& log);
void cmd_ensemble(const ExperimentConfig& cfg, std::ostream& log);
void cmd_discard(const ExperimentConfig& cfg, std::ostream& log);
void cmd_report(const ExperimentConfig& cfg, std::ostream& log, bool with_timing = false);

struct ToyRow {
  std::string name;
  double imputation_mse = 0.0;
  double forecast_mse = 0.0;
};
struct ToyTable {
  ToyRow case_one;
  ToyRow case_two;
};
ToyTable run_toy(const ExperimentConfig& cfg);
void cmd_toy(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace taskimp
