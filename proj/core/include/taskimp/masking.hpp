#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "taskimp/samples.hpp"

namespace taskimp {

struct MaskSpec {
  double missing_rate = 0.40;
  std::vector<std::size_t> run_lengths = {2, 4, 6, 12, 24, 48, 96, 120};
  std::uint64_t seed = 0;

  void validate() const;
};

// Missingness over a SampleSet's source segment (1 = missing/imputed).
// `masks` is the same pattern cut into the n target windows.
struct MaskSet {
  std::vector<std::uint8_t> series_mask;  // one flag per segment row
  std::vector<std::uint8_t> masks;        // n x L2
  std::size_t output_len = 0;
  double realized_rate = 0.0;

  std::size_t size() const { return output_len == 0 ? 0 : masks.size() / output_len; }
  bool masked(std::size_t i, std::size_t l) const { return masks[i * output_len + l] != 0; }
  std::size_t masked_count() const;
};

// Draws runs of admissible lengths at non-overlapping positions until the
// missing fraction reaches the requested rate. The final run is clipped so
// the realized rate is ceil(rate*T)/T exactly.
MaskSet generate_mask(const SampleSet& ss, const MaskSpec& spec);

// Cuts an existing segment-level mask into windows.
MaskSet mask_from_series(const SampleSet& ss, std::vector<std::uint8_t> series_mask);

// Mask file: columns (timestamp, missing) with one row per segment row.
void save_mask(const std::filesystem::path& path, const SampleSet& ss, const MaskSet& mask);
MaskSet load_mask(const std::filesystem::path& path, const SampleSet& ss);

}  // namespace taskimp
