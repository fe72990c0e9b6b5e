#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "taskimp/imputation.hpp"
#include "taskimp/masking.hpp"
#include "taskimp/samples.hpp"

namespace taskimp {

std::vector<double> default_percent_grid();  // 10, 20, ..., 100

struct AgreementPoint {
  double percent = 0.0;
  std::size_t selected = 0;
  std::optional<double> corr;      // empty when fewer than 2 points or zero variance
  std::optional<double> sign_acc;  // empty when fewer than 2 points
};

struct AgreementCurve {
  std::vector<AgreementPoint> points;
};

// Pearson correlation; empty when either side has zero variance.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

// For each x: keep the ceil(x% * N) entries with the largest |estimate|
// (ties by lower index), then compare against the true values. A zero sign
// only matches a zero.
AgreementCurve agreement(std::span<const double> estimate, std::span<const double> truth,
                         const std::vector<double>& percents = default_percent_grid());

// Mean squared difference between imputed and true target series over the
// masked rows.
double imputation_mse(const ImputationSet& imp, const SampleSet& truth, const MaskSet& mask);
double series_mse(std::span<const double> a, std::span<const double> b);

struct TimedRun {
  std::string method;
  double seconds = 0.0;
};

struct TimingRow {
  std::string method;
  double seconds = 0.0;
  std::optional<double> ratio_to_seq_sim;  // seconds / seq-sim seconds
};

struct TimingTable {
  std::vector<TimingRow> rows;
  std::optional<double> projected_retrain_seconds;
  std::size_t projected_count = 0;
};

// Ratios are taken against the run labelled "seq-sim", or the first run when
// none carries that label.
TimingTable timing_report(const std::vector<TimedRun>& runs, std::optional<double> per_retrain_seconds = {},
                          std::size_t projected_count = 8760);

std::string format_timing(const TimingTable& t);
std::string format_agreement(const AgreementCurve& c);

// Minimal static SVG charts for the report bundle.
struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<std::optional<double>> y;
};
void write_line_chart(const std::filesystem::path& path, const std::string& title, const std::string& x_label,
                      const std::string& y_label, const std::vector<Series>& series);
void write_bar_chart(const std::filesystem::path& path, const std::string& title,
                     const std::vector<std::pair<std::string, double>>& bars);

}  // namespace taskimp
