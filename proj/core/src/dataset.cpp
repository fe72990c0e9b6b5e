#include "taskimp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "taskimp/errors.hpp"
#include "taskimp/rng.hpp"
#include "taskimp/textio.hpp"

namespace taskimp {

namespace {

// Howard Hinnant's days_from_civil.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool read_fixed(std::string_view s, std::size_t pos, std::size_t len, long long& out) {
  if (pos + len > s.size()) return false;
  return textio::parse_int(s.substr(pos, len), out);
}

}  // namespace

std::int64_t parse_time_key(std::string_view text) {
  text = textio::trim(text);
  long long integer = 0;
  if (textio::parse_int(text, integer)) return integer;

  long long y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  if (text.size() < 10 || text[4] != '-' || text[7] != '-' || !read_fixed(text, 0, 4, y) ||
      !read_fixed(text, 5, 2, mo) || !read_fixed(text, 8, 2, d) || mo < 1 || mo > 12 || d < 1 ||
      d > 31)
    throw DataError("unparseable timestamp '" + std::string(text) + "'");
  if (text.size() > 10) {
    if ((text[10] != ' ' && text[10] != 'T') || text.size() < 16 || text[13] != ':' ||
        !read_fixed(text, 11, 2, h) || !read_fixed(text, 14, 2, mi))
      throw DataError("unparseable timestamp '" + std::string(text) + "'");
    if (text.size() >= 19) {
      if (text[16] != ':' || !read_fixed(text, 17, 2, s))
        throw DataError("unparseable timestamp '" + std::string(text) + "'");
    }
  }
  return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
         h * 3600 + mi * 60 + s;
}

std::vector<double> TimeSeriesDataset::column(std::size_t c) const {
  std::vector<double> out(length());
  for (std::size_t r = 0; r < length(); ++r) out[r] = values(r, c);
  return out;
}

void TimeSeriesDataset::validate() const {
  if (length() == 0) throw DataError("empty table");
  if (features() == 0) throw DataError("dataset has no feature columns");
  if (timestamps.size() != length() || time_keys.size() != length())
    throw DataError("timestamp column length does not match row count");
  if (feature_names.size() != features()) throw DataError("feature name count mismatch");
  if (target_index >= features())
    throw DataError("target column " + std::to_string(target_index) + " out of range");
  for (std::size_t r = 1; r < length(); ++r)
    if (time_keys[r] <= time_keys[r - 1])
      throw DataError("timestamps not strictly increasing at row " + std::to_string(r));
  for (std::size_t r = 0; r < length(); ++r)
    for (std::size_t c = 0; c < features(); ++c)
      if (!std::isfinite(values(r, c)))
        throw DataError("non-finite value at (" + std::to_string(r) + "," + std::to_string(c) + ")");
}

TimeSeriesDataset load_series(const std::filesystem::path& path, std::size_t target_index) {
  if (!std::filesystem::exists(path)) throw DataError("missing file '" + path.string() + "'");
  const auto file = textio::read_delimited(path);
  if (file.header.size() < 2)
    throw DataError("'" + path.string() + "': need a timestamp column and at least one feature");
  if (file.rows.empty()) throw DataError("empty table in '" + path.string() + "'");

  TimeSeriesDataset ds;
  ds.time_column = file.header.front();
  ds.feature_names.assign(file.header.begin() + 1, file.header.end());
  ds.target_index = target_index;
  const std::size_t cols = ds.feature_names.size();
  ds.values = Matrix(file.rows.size(), cols);
  for (std::size_t r = 0; r < file.rows.size(); ++r) {
    const auto& row = file.rows[r];
    if (row.size() != cols + 1)
      throw DataError("row " + std::to_string(r) + " has " + std::to_string(row.size()) +
                      " cells, expected " + std::to_string(cols + 1));
    ds.timestamps.push_back(row[0]);
    ds.time_keys.push_back(parse_time_key(row[0]));
    for (std::size_t c = 0; c < cols; ++c) {
      double v = 0.0;
      if (!textio::parse_double(row[c + 1], v) || !std::isfinite(v))
        throw DataError("non-finite value at (" + std::to_string(r) + "," + std::to_string(c) + ")");
      ds.values(r, c) = v;
    }
  }
  ds.validate();
  return ds;
}

void save_series(const std::filesystem::path& path, const TimeSeriesDataset& ds) {
  auto out = textio::open_output(path);
  out << ds.time_column;
  for (const auto& name : ds.feature_names) out << ',' << name;
  out << '\n';
  for (std::size_t r = 0; r < ds.length(); ++r) {
    out << ds.timestamps[r];
    for (std::size_t c = 0; c < ds.features(); ++c) out << ',' << textio::format_double(ds.values(r, c));
    out << '\n';
  }
}

TimeSeriesDataset slice_rows(const TimeSeriesDataset& ds, std::size_t begin, std::size_t end) {
  if (begin > end || end > ds.length()) throw DataError("slice_rows: range out of bounds");
  TimeSeriesDataset out;
  out.time_column = ds.time_column;
  out.feature_names = ds.feature_names;
  out.target_index = ds.target_index;
  out.first_row = ds.first_row + begin;
  out.timestamps.assign(ds.timestamps.begin() + begin, ds.timestamps.begin() + end);
  out.time_keys.assign(ds.time_keys.begin() + begin, ds.time_keys.begin() + end);
  out.values = Matrix(end - begin, ds.features());
  for (std::size_t r = begin; r < end; ++r)
    for (std::size_t c = 0; c < ds.features(); ++c) out.values(r - begin, c) = ds.values(r, c);
  return out;
}

std::size_t lower_bound_row(const TimeSeriesDataset& ds, std::int64_t key) {
  return static_cast<std::size_t>(
      std::lower_bound(ds.time_keys.begin(), ds.time_keys.end(), key) - ds.time_keys.begin());
}

Normalizer Normalizer::fit(const TimeSeriesDataset& ds, std::size_t rows) {
  if (rows == 0 || rows > ds.length()) throw DataError("normalizer: invalid training row count");
  Normalizer n;
  n.mean.assign(ds.features(), 0.0);
  n.scale.assign(ds.features(), 1.0);
  for (std::size_t c = 0; c < ds.features(); ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < rows; ++r) sum += ds.values(r, c);
    const double mean = sum / static_cast<double>(rows);
    double ss = 0.0;
    for (std::size_t r = 0; r < rows; ++r) ss += (ds.values(r, c) - mean) * (ds.values(r, c) - mean);
    const double sd = std::sqrt(ss / static_cast<double>(rows));
    n.mean[c] = mean;
    n.scale[c] = sd > 0.0 ? sd : 1.0;
  }
  return n;
}

TimeSeriesDataset Normalizer::apply(const TimeSeriesDataset& ds) const {
  if (mean.size() != ds.features()) throw DataError("normalizer: feature count mismatch");
  TimeSeriesDataset out = ds;
  for (std::size_t r = 0; r < ds.length(); ++r)
    for (std::size_t c = 0; c < ds.features(); ++c)
      out.values(r, c) = (ds.values(r, c) - mean[c]) / scale[c];
  return out;
}

TimeSeriesDataset synthetic_load(std::size_t length, std::uint64_t seed, std::size_t features) {
  if (length == 0) throw UsageError("synthetic_load: length must be positive");
  if (features < 1 || features > 2) throw UsageError("synthetic_load: features must be 1 or 2");
  Rng rng(derive_seed(seed, "synthetic"));
  constexpr double two_pi = 2.0 * std::numbers::pi;

  TimeSeriesDataset ds;
  ds.feature_names = {"load"};
  if (features == 2) ds.feature_names.push_back("temperature");
  ds.values = Matrix(length, features);

  double ar = 0.0;
  double temp_ar = 0.0;
  double level = 0.0;
  for (std::size_t t = 0; t < length; ++t) {
    const double hour = static_cast<double>(t % 24);
    const double day = static_cast<double>(t) / 24.0;
    const double temp = 12.0 + 8.0 * std::sin(two_pi * (hour - 9.0) / 24.0) +
                        4.0 * std::sin(two_pi * day / 60.0) + temp_ar;
    temp_ar = 0.9 * temp_ar + 0.6 * standard_normal(rng);
    level = 0.995 * level + 0.05 * standard_normal(rng);
    ar = 0.8 * ar + 0.35 * standard_normal(rng);
    // Morning and evening peaks plus a weekly modulation.
    const double daily = 2.5 * std::sin(two_pi * (hour - 6.0) / 24.0) +
                         1.5 * std::sin(2.0 * two_pi * (hour - 4.0) / 24.0) +
                         0.8 * std::sin(3.0 * two_pi * hour / 24.0);
    const double weekly = 0.7 * std::sin(two_pi * day / 7.0);
    ds.values(t, 0) = 20.0 + daily + weekly + level + ar + 0.05 * (temp - 12.0);
    if (features == 2) ds.values(t, 1) = temp;
    ds.timestamps.push_back(std::to_string(t));
    ds.time_keys.push_back(static_cast<std::int64_t>(t));
  }
  return ds;
}

}  // namespace taskimp
