#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "taskimp/model.hpp"
#include "taskimp/samples.hpp"

namespace taskimp {

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t max_epochs = 300;
  std::size_t patience = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;  // init and shuffle streams are derived from it
  bool record_trajectory = true;
  // When false, run exactly max_epochs and return the last parameters.
  bool early_stopping = true;

  void validate() const;
};

// Everything the trajectory estimator needs: parameters before the first
// epoch and after every epoch, the step size, and the batch partition of
// every epoch.
struct TrainTrajectory {
  std::optional<ModelParams> initial;
  std::vector<ModelParams> checkpoints;                    // theta after epoch t (t = 1..T)
  std::vector<double> step_lrs;                            // per epoch
  std::vector<std::vector<std::vector<std::size_t>>> batch_members;  // epoch -> batch -> indices
  std::vector<double> train_losses;                        // mean training MSE per epoch
  std::vector<double> val_losses;                          // validation MSE per epoch
  std::size_t best_epoch = 0;                              // 1-based

  std::size_t epochs() const { return val_losses.size(); }
  // theta^(t) with t = 0 meaning the initial parameters.
  const ModelParams& params_at(std::size_t t) const;
};

struct TrainResult {
  ModelParams params;  // best validation epoch
  TrainTrajectory trajectory;
};

// Plain mini-batch SGD on the MSE loss of (train inputs, labels) with early
// stopping on validation MSE. Deterministic given cfg.seed.
TrainResult train(const Architecture& arch, const SampleSet& train_set, std::span<const double> labels,
                  const SampleSet& val_set, const TrainConfig& cfg);

// Variant starting from given parameters instead of a seeded initialization.
TrainResult train_from(const ModelParams& init, const SampleSet& train_set,
                       std::span<const double> labels, const SampleSet& val_set,
                       const TrainConfig& cfg);

// Mean per-sample MSE of the model on a split (labels default to its targets).
double evaluate(const ModelParams& p, const SampleSet& ds);
double evaluate(const ModelParams& p, const SampleSet& ds, std::span<const double> labels);

// Sum of per-sample MSE losses.
double total_loss(const ModelParams& p, const SampleSet& ds);

// Trajectory directory: manifest.csv (epoch, lr, train_mse, val_mse, best),
// epoch_<t>.params checkpoints (t = 0 is the initialization) and
// batches_<t>.csv (batch, sample_index).
void save_trajectory(const std::filesystem::path& dir, const TrainTrajectory& traj);
TrainTrajectory load_trajectory(const std::filesystem::path& dir);

}  // namespace taskimp
