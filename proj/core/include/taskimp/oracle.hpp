#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "taskimp/imputation.hpp"
#include "taskimp/model.hpp"
#include "taskimp/samples.hpp"
#include "taskimp/train.hpp"

namespace taskimp {

// Everything a counterfactual retrain needs. The referenced sets must outlive
// the problem.
struct OracleProblem {
  const SampleSet* train = nullptr;
  const ImputationSet* first = nullptr;   // labels used for theta_1
  const ImputationSet* second = nullptr;  // swap source
  const SampleSet* val = nullptr;         // early stopping
  const SampleSet* eval = nullptr;        // where the loss difference is measured
  Architecture arch = MlpArch{};
  TrainConfig cfg;
  // Counterfactual runs train for exactly the epoch count theta_1 selected
  // instead of re-running early stopping.
  bool pin_epochs = true;

  void validate() const;
};

struct OracleBaseline {
  ModelParams params;
  double loss_sum = 0.0;  // summed per-sample eval MSE of theta_1
  std::size_t epochs = 0; // epoch theta_1 was taken from
};

OracleBaseline oracle_baseline(const OracleProblem& problem);

// Sum over eval samples of L(theta_1) - L(theta_2), where theta_2 is trained
// from the same initialization and shuffle stream with sample i's labels
// taken from `second`. Positive means the swap helped.
double true_gain(const OracleProblem& problem, const OracleBaseline& base, std::size_t i);

// Same, swapping a single label entry (i, l). Intended for tiny instances.
double true_gain_timestep(const OracleProblem& problem, const OracleBaseline& base, std::size_t i,
                          std::size_t l);

struct OracleResult {
  std::vector<std::size_t> indices;
  std::vector<double> true_gains;
  std::vector<double> run_loss_sums;
  double base_loss_sum = 0.0;
  double base_mse = 0.0;
  std::size_t eval_count = 0;
  double seconds = 0.0;
  double per_retrain_seconds = 0.0;

  // Retraining cost extrapolated to `count` samples.
  double projected_seconds(std::size_t count) const { return per_retrain_seconds * static_cast<double>(count); }
};

struct SweepOptions {
  int threads = 1;
  std::function<void(std::size_t done, std::size_t total)> progress;
  // Results already on disk are read back and skipped when set.
  std::optional<std::filesystem::path> resume_file;
};

// One retrain per index; each retrain is sequential, independent retrains
// run on `threads` workers. Results come back in the order of `indices`.
OracleResult oracle_sweep(const OracleProblem& problem, const std::vector<std::size_t>& indices,
                          const SweepOptions& opts = {});

// sample_index,true_gain,run_loss with '#' metadata, plus a sibling
// "<file>.done" manifest listing completed indices.
void save_oracle(const std::filesystem::path& path, const OracleResult& r);
OracleResult load_oracle(const std::filesystem::path& path);

}  // namespace taskimp
