#include "taskimp/samples.hpp"

#include "taskimp/errors.hpp"

namespace taskimp {

std::string_view to_string(Split split) {
  switch (split) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::train;
  if (text == "validation" || text == "val") return Split::validation;
  if (text == "test") return Split::test;
  throw UsageError("unknown split '" + std::string(text) + "'");
}

std::size_t window_count(std::size_t length, std::size_t input_len, std::size_t output_len,
                         std::size_t stride) {
  if (input_len == 0 || output_len == 0 || stride == 0)
    throw UsageError("window lengths and stride must be >= 1");
  if (length < input_len + output_len)
    throw DataError("series too short: " + std::to_string(length) + " rows < L1+L2 = " +
                    std::to_string(input_len + output_len));
  return (length - input_len - output_len) / stride + 1;
}

SampleSet window(const TimeSeriesDataset& ds, std::size_t input_len, std::size_t output_len,
                 std::size_t stride, Split split) {
  const std::size_t n = window_count(ds.length(), input_len, output_len, stride);
  SampleSet ss;
  ss.split = split;
  ss.dims = Dims{ds.features(), input_len, output_len};
  ss.stride = stride;
  ss.target_feature = ds.target_index;
  ss.first_row = ds.first_row;
  ss.timestamps = ds.timestamps;
  ss.time_keys = ds.time_keys;
  ss.series = ds.target();
  ss.inputs.resize(n * ss.dims.input_size());
  ss.targets.resize(n * output_len);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t start = i * stride;
    double* x = ss.inputs.data() + i * ss.dims.input_size();
    for (std::size_t f = 0; f < ds.features(); ++f)
      for (std::size_t t = 0; t < input_len; ++t) x[f * input_len + t] = ds.values(start + t, f);
    for (std::size_t l = 0; l < output_len; ++l)
      ss.targets[i * output_len + l] = ss.series[start + input_len + l];
  }
  return ss;
}

SampleSet with_target_inputs(const SampleSet& ss, std::span<const double> series) {
  if (series.size() != ss.series.size()) throw DataError("with_target_inputs: series length mismatch");
  SampleSet out = ss;
  const std::size_t L1 = ss.dims.input_len;
  for (std::size_t i = 0; i < ss.size(); ++i) {
    double* x = out.inputs.data() + i * ss.dims.input_size() + ss.target_feature * L1;
    for (std::size_t t = 0; t < L1; ++t) x[t] = series[i * ss.stride + t];
  }
  return out;
}

SampleSet with_targets(const SampleSet& ss, std::span<const double> series) {
  if (series.size() != ss.series.size()) throw DataError("with_targets: series length mismatch");
  SampleSet out = ss;
  const std::size_t L2 = ss.dims.output_len;
  for (std::size_t i = 0; i < ss.size(); ++i)
    for (std::size_t l = 0; l < L2; ++l) out.targets[i * L2 + l] = series[ss.target_row(i, l)];
  return out;
}

}  // namespace taskimp
