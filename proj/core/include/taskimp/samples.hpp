#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "taskimp/dataset.hpp"
#include "taskimp/dims.hpp"

namespace taskimp {

enum class Split { train, validation, test };
std::string_view to_string(Split split);
Split parse_split(std::string_view text);

// Windowed supervised pairs cut from one contiguous segment of a dataset.
// Sample i reads inputs from segment rows [i*stride, i*stride+L1) and its
// target from rows [i*stride+L1, i*stride+L1+L2) of the target column.
struct SampleSet {
  Split split = Split::train;
  Dims dims;
  std::size_t stride = 1;
  std::size_t target_feature = 0;
  std::size_t first_row = 0;                 // segment offset in the source file
  std::vector<std::string> timestamps;       // segment rows
  std::vector<std::int64_t> time_keys;
  std::vector<double> series;                // target column of the segment (ground truth)
  std::vector<double> inputs;                // n x (D*L1); X_i row-major as (feature, lag)
  std::vector<double> targets;               // n x L2

  std::size_t size() const { return dims.output_len == 0 ? 0 : targets.size() / dims.output_len; }
  std::span<const double> input(std::size_t i) const {
    return {inputs.data() + i * dims.input_size(), dims.input_size()};
  }
  std::span<const double> target(std::size_t i) const {
    return {targets.data() + i * dims.output_len, dims.output_len};
  }
  // Segment row holding step `l` of sample i's target.
  std::size_t target_row(std::size_t i, std::size_t l) const {
    return i * stride + dims.input_len + l;
  }
};

std::size_t window_count(std::size_t length, std::size_t input_len, std::size_t output_len,
                         std::size_t stride);

SampleSet window(const TimeSeriesDataset& ds, std::size_t input_len, std::size_t output_len,
                 std::size_t stride, Split split = Split::train);

// Same samples, with the target feature's input rows re-cut from `series`
// (e.g. a baseline-imputed copy of the segment). Targets are untouched.
SampleSet with_target_inputs(const SampleSet& ss, std::span<const double> series);

// Same inputs, with targets re-cut from `series`.
SampleSet with_targets(const SampleSet& ss, std::span<const double> series);

}  // namespace taskimp
