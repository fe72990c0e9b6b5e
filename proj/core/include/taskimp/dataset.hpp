#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "taskimp/matrix.hpp"

namespace taskimp {

// A complete multivariate series: T rows, D real-valued feature columns,
// one of which is the forecast target.
struct TimeSeriesDataset {
  std::string time_column = "timestamp";
  std::vector<std::string> timestamps;   // as written in the source file
  std::vector<std::int64_t> time_keys;   // ordering key: epoch seconds or integer index
  std::vector<std::string> feature_names;
  Matrix values;                         // T x D
  std::size_t target_index = 0;
  std::size_t first_row = 0;             // offset of row 0 within the originating file

  std::size_t length() const { return values.rows(); }
  std::size_t features() const { return values.cols(); }
  std::vector<double> column(std::size_t c) const;
  std::vector<double> target() const { return column(target_index); }

  // Throws DataError on any violated invariant.
  void validate() const;
};

// Parses "YYYY-MM-DD", "YYYY-MM-DD HH:MM[:SS]" (space or 'T') or a plain
// integer. Returns seconds since 1970-01-01 for calendar timestamps.
std::int64_t parse_time_key(std::string_view text);

TimeSeriesDataset load_series(const std::filesystem::path& path, std::size_t target_index);
void save_series(const std::filesystem::path& path, const TimeSeriesDataset& ds);

// Rows [begin, end) as a standalone dataset (first_row is carried along).
TimeSeriesDataset slice_rows(const TimeSeriesDataset& ds, std::size_t begin, std::size_t end);

// Index of the first row whose key is >= `key`.
std::size_t lower_bound_row(const TimeSeriesDataset& ds, std::int64_t key);

// Per-feature z-score fitted on a prefix of rows (the training split).
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Normalizer fit(const TimeSeriesDataset& ds, std::size_t rows);
  TimeSeriesDataset apply(const TimeSeriesDataset& ds) const;
};

// Hourly load-like series with daily and weekly cycles and AR(1) noise.
// With features == 2 a temperature-like covariate is appended; the load
// column is the target.
TimeSeriesDataset synthetic_load(std::size_t length, std::uint64_t seed, std::size_t features = 1);

}  // namespace taskimp
