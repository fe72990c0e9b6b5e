#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "taskimp/gain.hpp"
#include "taskimp/imputation.hpp"
#include "taskimp/masking.hpp"
#include "taskimp/model.hpp"
#include "taskimp/train.hpp"

namespace taskimp {

// Nearest-rank q-th percentile (0 < q <= 100) of the values:
// the element at rank ceil(q/100 * N) of the sorted sequence, rank >= 1.
double nearest_rank_percentile(std::vector<double> values, double q);

struct EnsembleSpec {
  double replace_percent = 10.0;
  const GainMatrix* gain = nullptr;
  const ImputationSet* first = nullptr;
  const ImputationSet* second = nullptr;

  void validate() const;
};

struct SplicedLabels {
  ImputationSet labels;          // source_name "spliced"
  std::vector<std::uint8_t> replaced;  // n x L2, 1 where the second source was taken
  double threshold = 0.0;
  std::size_t positive_count = 0;
  std::size_t replaced_count = 0;
  bool has_threshold = false;    // false when no gain was positive
};

// Keep y1 except where the gain exceeds the (100 - c)-th nearest-rank
// percentile of the strictly positive gains; ties at the threshold keep y1.
SplicedLabels combine(const EnsembleSpec& spec);

struct EnsembleReport {
  double baseline_test_mse = 0.0;
  double ensemble_test_mse = 0.0;
  double threshold = 0.0;
  std::size_t positive_count = 0;
  std::size_t replaced_count = 0;
  std::size_t baseline_epochs = 0;
  std::size_t ensemble_epochs = 0;
  double improvement() const { return baseline_test_mse - ensemble_test_mse; }
};

struct EnsembleOutcome {
  ModelParams params;
  SplicedLabels spliced;
  EnsembleReport report;
};

// Retrains on the spliced labels and reports test MSE next to the y1-trained
// baseline. A baseline already trained with the same cfg may be passed in.
EnsembleOutcome run_ensemble(const EnsembleSpec& spec, const Architecture& arch, const TrainConfig& cfg,
                             const SampleSet& train, const SampleSet& val, const SampleSet& test,
                             const std::optional<ModelParams>& baseline = std::nullopt);

// Spliced labels per (sample, step) with a provenance header:
// sample_index,timestep,timestamp,value,source.
void save_spliced(const std::filesystem::path& path, const SampleSet& ss, const SplicedLabels& s,
                  const EnsembleSpec& spec);

}  // namespace taskimp
