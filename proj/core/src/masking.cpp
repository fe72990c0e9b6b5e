#include "taskimp/masking.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "taskimp/errors.hpp"
#include "taskimp/rng.hpp"
#include "taskimp/textio.hpp"

namespace taskimp {

void MaskSpec::validate() const {
  if (!(missing_rate > 0.0 && missing_rate < 1.0))
    throw UsageError("missing_rate must lie in (0,1)");
  if (run_lengths.empty()) throw UsageError("run_lengths must be nonempty");
  for (auto len : run_lengths)
    if (len == 0) throw UsageError("run lengths must be positive");
}

std::size_t MaskSet::masked_count() const {
  return static_cast<std::size_t>(std::count(masks.begin(), masks.end(), std::uint8_t{1}));
}

namespace {

struct Gap {
  std::size_t start;
  std::size_t length;
};

std::vector<Gap> free_gaps(const std::vector<std::uint8_t>& mask) {
  std::vector<Gap> gaps;
  std::size_t t = 0;
  while (t < mask.size()) {
    if (mask[t]) {
      ++t;
      continue;
    }
    const std::size_t start = t;
    while (t < mask.size() && !mask[t]) ++t;
    gaps.push_back({start, t - start});
  }
  return gaps;
}

}  // namespace

MaskSet generate_mask(const SampleSet& ss, const MaskSpec& spec) {
  spec.validate();
  const std::size_t total = ss.series.size();
  const std::size_t shortest = *std::min_element(spec.run_lengths.begin(), spec.run_lengths.end());
  if (shortest > total)
    throw DataError("missing_rate unreachable: shortest run (" + std::to_string(shortest) +
                    ") exceeds series length (" + std::to_string(total) + ")");
  const auto need = static_cast<std::size_t>(
      std::ceil(spec.missing_rate * static_cast<double>(total) - 1e-9));

  Rng rng(spec.seed);
  std::vector<std::uint8_t> series_mask(total, 0);
  std::size_t masked = 0;
  while (masked < need) {
    std::size_t len = spec.run_lengths[uniform_index(rng, spec.run_lengths.size())];
    len = std::min(len, need - masked);
    auto gaps = free_gaps(series_mask);
    auto count_starts = [&](std::size_t l) {
      std::size_t c = 0;
      for (const auto& g : gaps)
        if (g.length >= l) c += g.length - l + 1;
      return c;
    };
    std::size_t starts = count_starts(len);
    if (starts == 0) {
      std::size_t widest = 0;
      for (const auto& g : gaps) widest = std::max(widest, g.length);
      len = widest;  // nonzero: masked < need <= total leaves free rows
      starts = count_starts(len);
    }
    std::size_t pick = uniform_index(rng, starts);
    for (const auto& g : gaps) {
      if (g.length < len) continue;
      const std::size_t here = g.length - len + 1;
      if (pick < here) {
        std::fill_n(series_mask.begin() + static_cast<std::ptrdiff_t>(g.start + pick), len, 1);
        break;
      }
      pick -= here;
    }
    masked += len;
  }
  return mask_from_series(ss, std::move(series_mask));
}

MaskSet mask_from_series(const SampleSet& ss, std::vector<std::uint8_t> series_mask) {
  if (series_mask.size() != ss.series.size()) throw DataError("mask length does not match segment");
  MaskSet mask;
  mask.output_len = ss.dims.output_len;
  mask.masks.resize(ss.size() * mask.output_len);
  for (std::size_t i = 0; i < ss.size(); ++i)
    for (std::size_t l = 0; l < mask.output_len; ++l)
      mask.masks[i * mask.output_len + l] = series_mask[ss.target_row(i, l)];
  const auto ones = std::count(series_mask.begin(), series_mask.end(), std::uint8_t{1});
  mask.realized_rate =
      series_mask.empty() ? 0.0 : static_cast<double>(ones) / static_cast<double>(series_mask.size());
  mask.series_mask = std::move(series_mask);
  return mask;
}

void save_mask(const std::filesystem::path& path, const SampleSet& ss, const MaskSet& mask) {
  auto out = textio::open_output(path);
  out << "timestamp,missing\n";
  for (std::size_t t = 0; t < ss.timestamps.size(); ++t)
    out << ss.timestamps[t] << ',' << static_cast<int>(mask.series_mask[t]) << '\n';
}

MaskSet load_mask(const std::filesystem::path& path, const SampleSet& ss) {
  const auto file = textio::read_delimited(path);
  std::unordered_map<std::int64_t, std::size_t> row_of;
  for (std::size_t t = 0; t < ss.time_keys.size(); ++t) row_of[ss.time_keys[t]] = t;
  std::vector<std::uint8_t> series_mask(ss.series.size(), 0);
  std::vector<std::uint8_t> seen(ss.series.size(), 0);
  for (const auto& row : file.rows) {
    if (row.size() < 2) throw DataError("mask file '" + path.string() + "': expected 2 columns");
    const auto it = row_of.find(parse_time_key(row[0]));
    if (it == row_of.end())
      throw DataError("mask file '" + path.string() + "': timestamp " + row[0] + " not in segment");
    long long flag = 0;
    if (!textio::parse_int(row[1], flag) || (flag != 0 && flag != 1))
      throw DataError("mask file '" + path.string() + "': flag must be 0 or 1");
    series_mask[it->second] = static_cast<std::uint8_t>(flag);
    seen[it->second] = 1;
  }
  if (std::count(seen.begin(), seen.end(), std::uint8_t{1}) !=
      static_cast<std::ptrdiff_t>(seen.size()))
    throw DataError("mask file '" + path.string() + "' does not cover every segment row");
  return mask_from_series(ss, std::move(series_mask));
}

}  // namespace taskimp
