#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "taskimp/dataset.hpp"
#include "taskimp/masking.hpp"
#include "taskimp/samples.hpp"

namespace taskimp {

// One candidate label set y^(k): the imputed segment plus its windows.
struct ImputationSet {
  std::string source_name;            // mean | linear | external:<name> | spliced
  std::vector<double> series;         // imputed target column of the segment
  std::vector<double> labels;         // n x L2
  std::size_t output_len = 0;

  std::size_t size() const { return output_len == 0 ? 0 : labels.size() / output_len; }
  std::span<const double> label(std::size_t i) const {
    return {labels.data() + i * output_len, output_len};
  }
  double at(std::size_t i, std::size_t l) const { return labels[i * output_len + l]; }
};

enum class ImputeMethod { mean, linear };

// Builds an ImputationSet from a full segment series (masked rows already
// filled), cutting windows exactly like the SampleSet.
ImputationSet imputation_from_series(const SampleSet& ss, std::vector<double> series,
                                     std::string source_name);

// mean: masked row replaced by the average of observed rows sharing its
// position within the period (row index mod period, computed on the source
// file's row numbering). linear: straight line between nearest observed
// neighbours, constant beyond the ends.
ImputationSet impute(const SampleSet& ss, const MaskSet& mask, ImputeMethod method,
                     std::size_t period = 24);

// Linear interpolation of a series given observed flags (1 = missing).
std::vector<double> interpolate_linear(std::span<const double> series,
                                       std::span<const std::uint8_t> missing);

// Imputation file: (timestamp, value), one row per masked segment row.
void save_imputation(const std::filesystem::path& path, const SampleSet& ss, const MaskSet& mask,
                     const ImputationSet& imp);
ImputationSet load_external_imputation(const std::filesystem::path& path, const SampleSet& ss,
                                       const MaskSet& mask, std::string source_name = {});

// Checks the alignment invariant: labels equal targets wherever unmasked.
void check_alignment(const SampleSet& ss, const MaskSet& mask, const ImputationSet& imp);

// Degraded copies of a complete target column for the observation-density
// experiment: only rows k*keep (k>=0) and k*keep+1 (k>=1) are observed, gaps
// are linearly interpolated, then N(noise_mean, noise_std) is added to every
// row of the first variant. Other feature columns are left intact.
struct ToyOptions {
  std::size_t case_one_keep = 4;
  std::size_t case_two_keep = 6;
  double noise_mean = 0.05;
  double noise_std = 0.3;
  std::uint64_t seed = 0;
};
struct ToyVariants {
  TimeSeriesDataset case_one;
  TimeSeriesDataset case_two;
};
TimeSeriesDataset simulate_toy(const TimeSeriesDataset& base, std::size_t keep_every,
                               double noise_mean, double noise_std, std::uint64_t seed);
ToyVariants simulate_toy(const TimeSeriesDataset& base, const ToyOptions& options);

}  // namespace taskimp
