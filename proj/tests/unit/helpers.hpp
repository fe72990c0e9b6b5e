#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "taskimp/dataset.hpp"
#include "taskimp/model.hpp"
#include "taskimp/rng.hpp"
#include "taskimp/samples.hpp"

namespace testing_util {

inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::path(TASKIMP_TEST_TMP) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::vector<double> random_vector(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  taskimp::Rng rng(seed);
  std::vector<double> v(n);
  for (auto& x : v) x = scale * taskimp::standard_normal(rng);
  return v;
}

// Central difference of a scalar function of theta along each coordinate.
inline std::vector<double> numeric_gradient(const std::function<double(std::span<const double>)>& f,
                                            std::vector<double> theta, double h = 1e-5) {
  std::vector<double> g(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double keep = theta[k];
    theta[k] = keep + h;
    const double up = f(theta);
    theta[k] = keep - h;
    const double down = f(theta);
    theta[k] = keep;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

inline double max_rel_error(std::span<const double> a, std::span<const double> b, double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    worst = std::max(worst, std::abs(a[k] - b[k]) / std::max({std::abs(a[k]), std::abs(b[k]), floor}));
  return worst;
}

inline taskimp::TimeSeriesDataset series_dataset(const std::vector<double>& values) {
  taskimp::TimeSeriesDataset ds;
  ds.feature_names = {"y"};
  ds.values = taskimp::Matrix(values.size(), 1);
  for (std::size_t t = 0; t < values.size(); ++t) {
    ds.values(t, 0) = values[t];
    ds.timestamps.push_back(std::to_string(t));
    ds.time_keys.push_back(static_cast<std::int64_t>(t));
  }
  return ds;
}

inline taskimp::ModelParams with_theta(const taskimp::ModelParams& p, std::span<const double> theta) {
  return taskimp::ModelParams(p.arch(), p.dims(), std::vector<double>(theta.begin(), theta.end()));
}

}  // namespace testing_util

#include "taskimp/imputation.hpp"

namespace testing_util {

// SampleSet from explicit row-major inputs (n x D*L1) and targets (n x L2).
inline taskimp::SampleSet explicit_samples(taskimp::Dims dims, std::vector<double> inputs, std::vector<double> targets,
                                           taskimp::Split split = taskimp::Split::train) {
  taskimp::SampleSet ss;
  ss.split = split;
  ss.dims = dims;
  ss.inputs = std::move(inputs);
  ss.targets = std::move(targets);
  return ss;
}

inline taskimp::SampleSet random_samples(taskimp::Dims dims, std::size_t n, std::uint64_t seed,
                                         taskimp::Split split = taskimp::Split::train) {
  return explicit_samples(dims, random_vector(n * dims.input_size(), seed),
                          random_vector(n * dims.output_len, seed + 1000), split);
}

inline taskimp::ImputationSet labels_of(std::vector<double> labels, std::size_t output_len, std::string name) {
  taskimp::ImputationSet imp;
  imp.source_name = std::move(name);
  imp.labels = std::move(labels);
  imp.output_len = output_len;
  return imp;
}

}  // namespace testing_util
