#include "taskimp/imputation.hpp"

#include <cmath>
#include <unordered_map>

#include "taskimp/errors.hpp"
#include "taskimp/rng.hpp"
#include "taskimp/textio.hpp"

namespace taskimp {

ImputationSet imputation_from_series(const SampleSet& ss, std::vector<double> series,
                                     std::string source_name) {
  if (series.size() != ss.series.size()) throw DataError("imputed series length mismatch");
  ImputationSet imp;
  imp.source_name = std::move(source_name);
  imp.output_len = ss.dims.output_len;
  imp.labels.resize(ss.size() * imp.output_len);
  for (std::size_t i = 0; i < ss.size(); ++i)
    for (std::size_t l = 0; l < imp.output_len; ++l)
      imp.labels[i * imp.output_len + l] = series[ss.target_row(i, l)];
  imp.series = std::move(series);
  return imp;
}

std::vector<double> interpolate_linear(std::span<const double> series,
                                       std::span<const std::uint8_t> missing) {
  std::vector<double> out(series.begin(), series.end());
  const std::size_t n = series.size();
  std::size_t prev = n;  // index of last observed row, n = none yet
  for (std::size_t t = 0; t <= n; ++t) {
    if (t < n && missing[t]) continue;
    // rows (prev, t) are missing
    const std::size_t gap_begin = prev == n ? 0 : prev + 1;
    for (std::size_t g = gap_begin; g < t; ++g) {
      if (prev == n && t == n) throw DataError("linear imputation: no observed values");
      if (prev == n) {
        out[g] = series[t];
      } else if (t == n) {
        out[g] = series[prev];
      } else {
        const double w = static_cast<double>(g - prev) / static_cast<double>(t - prev);
        out[g] = series[prev] + w * (series[t] - series[prev]);
      }
    }
    prev = t;
  }
  return out;
}

ImputationSet impute(const SampleSet& ss, const MaskSet& mask, ImputeMethod method,
                     std::size_t period) {
  if (mask.series_mask.size() != ss.series.size()) throw DataError("mask does not match samples");
  if (method == ImputeMethod::linear)
    return imputation_from_series(ss, interpolate_linear(ss.series, mask.series_mask), "linear");

  if (period == 0) throw UsageError("mean imputation: period must be positive");
  std::vector<double> sum(period, 0.0);
  std::vector<std::size_t> count(period, 0);
  for (std::size_t t = 0; t < ss.series.size(); ++t) {
    if (mask.series_mask[t]) continue;
    const std::size_t pos = (ss.first_row + t) % period;
    sum[pos] += ss.series[t];
    ++count[pos];
  }
  std::vector<double> out = ss.series;
  for (std::size_t t = 0; t < ss.series.size(); ++t) {
    if (!mask.series_mask[t]) continue;
    const std::size_t pos = (ss.first_row + t) % period;
    if (count[pos] == 0)
      throw DataError("mean imputation: calendar position " + std::to_string(pos) +
                      " has no observed values");
    out[t] = sum[pos] / static_cast<double>(count[pos]);
  }
  return imputation_from_series(ss, std::move(out), "mean");
}

void save_imputation(const std::filesystem::path& path, const SampleSet& ss, const MaskSet& mask,
                     const ImputationSet& imp) {
  auto out = textio::open_output(path);
  out << "timestamp,value\n";
  for (std::size_t t = 0; t < ss.series.size(); ++t)
    if (mask.series_mask[t]) out << ss.timestamps[t] << ',' << textio::format_double(imp.series[t]) << '\n';
}

ImputationSet load_external_imputation(const std::filesystem::path& path, const SampleSet& ss,
                                       const MaskSet& mask, std::string source_name) {
  if (!std::filesystem::exists(path)) throw DataError("missing imputation file '" + path.string() + "'");
  const auto file = textio::read_delimited(path);
  std::size_t masked_rows = 0;
  for (auto m : mask.series_mask) masked_rows += m;
  if (file.rows.size() != masked_rows)
    throw DataError("imputation file '" + path.string() + "' has " + std::to_string(file.rows.size()) +
                    " rows but the mask has " + std::to_string(masked_rows) +
                    " missing positions (alignment error)");
  std::unordered_map<std::int64_t, std::size_t> row_of;
  for (std::size_t t = 0; t < ss.time_keys.size(); ++t) row_of[ss.time_keys[t]] = t;

  std::vector<double> series = ss.series;  // observed rows keep ground truth
  std::vector<std::uint8_t> filled(series.size(), 0);
  for (std::size_t r = 0; r < file.rows.size(); ++r) {
    const auto& row = file.rows[r];
    if (row.size() < 2) throw DataError("imputation file row " + std::to_string(r) + ": expected 2 columns");
    const auto it = row_of.find(parse_time_key(row[0]));
    if (it == row_of.end() || !mask.series_mask[it->second])
      throw DataError("imputation file row " + std::to_string(r) + ": timestamp " + row[0] +
                      " is not a masked position (alignment error)");
    double v = 0.0;
    if (!textio::parse_double(row[1], v) || !std::isfinite(v))
      throw DataError("imputation file row " + std::to_string(r) + ": non-finite value");
    if (filled[it->second]) throw DataError("imputation file: duplicate timestamp " + row[0]);
    series[it->second] = v;
    filled[it->second] = 1;
  }
  if (source_name.empty()) source_name = "external:" + path.stem().string();
  return imputation_from_series(ss, std::move(series), std::move(source_name));
}

void check_alignment(const SampleSet& ss, const MaskSet& mask, const ImputationSet& imp) {
  if (imp.size() != ss.size() || mask.size() != ss.size() || imp.output_len != ss.dims.output_len)
    throw DataError("imputation set not aligned with samples");
  for (std::size_t k = 0; k < imp.labels.size(); ++k) {
    if (!std::isfinite(imp.labels[k])) throw DataError("imputation set contains non-finite labels");
    if (!mask.masks[k] && imp.labels[k] != ss.targets[k])
      throw DataError("imputation set alters an observed position");
  }
}

TimeSeriesDataset simulate_toy(const TimeSeriesDataset& base, std::size_t keep_every,
                               double noise_mean, double noise_std, std::uint64_t seed) {
  if (keep_every < 2) throw UsageError("simulate_toy: keep_every must be >= 2");
  base.validate();
  const auto truth = base.target();
  std::vector<std::uint8_t> missing(truth.size(), 1);
  for (std::size_t t = 0; t < truth.size(); ++t) {
    const std::size_t r = t % keep_every;
    if (r == 0 || (r == 1 && t > 1)) missing[t] = 0;
  }
  auto degraded = interpolate_linear(truth, missing);
  if (noise_std > 0.0 || noise_mean != 0.0) {
    Rng rng(derive_seed(seed, "toy-noise"));
    for (auto& v : degraded) v += noise_mean + noise_std * standard_normal(rng);
  }
  TimeSeriesDataset out = base;
  for (std::size_t t = 0; t < truth.size(); ++t) out.values(t, base.target_index) = degraded[t];
  return out;
}

ToyVariants simulate_toy(const TimeSeriesDataset& base, const ToyOptions& options) {
  return {simulate_toy(base, options.case_one_keep, options.noise_mean, options.noise_std, options.seed),
          simulate_toy(base, options.case_two_keep, 0.0, 0.0, options.seed)};
}

}  // namespace taskimp
