#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "taskimp/imputation.hpp"
#include "taskimp/loss.hpp"
#include "taskimp/masking.hpp"
#include "taskimp/model.hpp"
#include "taskimp/samples.hpp"
#include "taskimp/train.hpp"

namespace taskimp {

// Estimated I(i,l) for every training sample i and horizon step l.
// I(i,l) > 0 means swapping y1[i,l] for y2[i,l] is expected to lower the
// summed evaluation loss. Entries where the two label sets agree are 0.
struct GainMatrix {
  std::size_t samples = 0;
  std::size_t horizon = 0;
  std::vector<double> values;         // n x L2
  std::vector<std::uint8_t> masked;   // n x L2
  std::vector<double> sensitivity;    // n x L2, dI/d(y1-y2); empty unless requested
  std::string estimator;              // seq-sim | seg-<r> | trajectory | influence
  std::size_t segments = 0;
  Split eval_split = Split::validation;
  std::string first_source;
  std::string second_source;
  bool converged = true;              // false when an iterative solve gave up

  double at(std::size_t i, std::size_t l) const { return values[i * horizon + l]; }
  // Sum over l of I(i,l): the estimated effect of swapping the whole sample.
  std::vector<double> sample_totals() const;
};

struct GainOptions {
  int threads = 1;
  const MaskSet* mask = nullptr;  // when set, entries outside the mask are forced to 0
  bool keep_sensitivity = false;
  LossKind loss = LossKind::mse;
};

// Sum over the evaluation split of the loss gradient with respect to theta,
// reduced in a fixed order.
std::vector<double> eval_loss_gradient(const ModelParams& p, const SampleSet& eval, int threads = 1);

// Converged-parameter estimator with the full NTK:
//   I(i,l) = sum_k -(1/n) a_il^T  J_i J_k^T  dL/df(X_k)  * (y1_il - y2_il)
// with a_il the mixed second derivative d^2L/(df dy_l) at (f(X_i), y1_i).
GainMatrix estimate_seq_sim(const ModelParams& p, const SampleSet& train, const ImputationSet& first,
                            const ImputationSet& second, const SampleSet& eval, const GainOptions& opts = {});

// Same with the training-side Jacobian compressed to `segments` block
// averages: J_i ~ A_dag (A J_i). segments == L2 reproduces estimate_seq_sim.
GainMatrix estimate_seg(const ModelParams& p, const SampleSet& train, const ImputationSet& first,
                        const ImputationSet& second, const SampleSet& eval, std::size_t segments,
                        const GainOptions& opts = {});

// Trajectory form: sums, over epochs t = 1..best_epoch in which sample i was
// in batch B, the term -(lr_t/|B|) a_il^T J_i G with the Jacobian and the
// evaluation gradient G both taken at theta^(t-1).
GainMatrix estimate_trajectory(const TrainTrajectory& traj, const SampleSet& train,
                               const ImputationSet& first, const ImputationSet& second,
                               const SampleSet& eval, const GainOptions& opts = {},
                               std::size_t segments = 0);

// Runtime-checkable attribution axioms on the per-pair kernel influence
// I(i, ., X_k) = -(1/n) C_i^T J_i J_k^T dL/df(X_k), taken with unit label
// change over a subset of training points.
struct AxiomOptions {
  std::size_t max_samples = 16;
  std::uint64_t seed = 0;
  double probe_epsilon = 1e-6;
  double fit_epsilon = 1e-3;
};

struct AxiomReport {
  // Symmetric zero: a zero kernel block must give zero influence both ways.
  std::size_t pairs_checked = 0;
  std::size_t zero_kernel_pairs = 0;
  std::size_t symmetric_zero_violations = 0;
  // Continuity in the evaluation input.
  double continuity_slope = 0.0;
  double continuity_probe_change = 0.0;
  bool continuity_ok = false;
  // Diagonal-dominance sufficient condition for irreducibility, per sample.
  std::vector<std::uint8_t> irreducible;
  double irreducibility_rate = 0.0;
  std::string efficiency = "not checked: requires retraining (see the oracle sweep)";
};

AxiomReport axiom_checks(const ModelParams& p, const SampleSet& train, std::span<const double> train_labels,
                         const SampleSet& eval, const AxiomOptions& opts = {});

// Pairwise influence vectors I(i, ., X_k) (length L2) for the given train
// indices against explicit points (inputs, labels). Exposed for the axiom
// tests.
std::vector<double> pairwise_influence(const ModelParams& p, std::size_t train_count,
                                       std::span<const double> x_i, std::span<const double> y_i,
                                       std::span<const double> x_k, std::span<const double> y_k);

// Export: '#' metadata lines then sample_index,timestep,gain,masked_flag.
void save_gain_matrix(const std::filesystem::path& path, const GainMatrix& g);
GainMatrix load_gain_matrix(const std::filesystem::path& path);

}  // namespace taskimp
