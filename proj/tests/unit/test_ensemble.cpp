#include <gtest/gtest.h>

#include "helpers.hpp"
#include "taskimp/ensemble.hpp"
#include "taskimp/errors.hpp"
#include "taskimp/textio.hpp"

using namespace taskimp;
using namespace testing_util;

namespace {

GainMatrix gain_of(std::vector<double> values, std::size_t horizon) {
  GainMatrix g;
  g.horizon = horizon;
  g.samples = values.size() / horizon;
  g.masked.assign(values.size(), 1);
  g.values = std::move(values);
  return g;
}

}  // namespace

TEST(Percentile, NearestRankTextbookExample) {
  const std::vector<double> v{15, 20, 35, 40, 50};
  EXPECT_EQ(nearest_rank_percentile(v, 5), 15);
  EXPECT_EQ(nearest_rank_percentile(v, 30), 20);
  EXPECT_EQ(nearest_rank_percentile(v, 40), 20);
  EXPECT_EQ(nearest_rank_percentile(v, 50), 35);
  EXPECT_EQ(nearest_rank_percentile(v, 100), 50);
  EXPECT_EQ(nearest_rank_percentile({3, 1, 2}, 100.0 / 3.0), 1);
  EXPECT_THROW(nearest_rank_percentile({}, 50), DataError);
  EXPECT_THROW(nearest_rank_percentile(v, 0), UsageError);
}

TEST(Combine, ReplacesOnlyAboveThePositivePercentile) {
  // Ten positive gains 1..10 among negatives and zeros.
  std::vector<double> values{-5, 1, 2, 0, 3, 4, 5, -1, 6, 7, 8, 9, 10, 0, -2, 0};
  const auto g = gain_of(values, 4);
  auto first = labels_of(std::vector<double>(16, 0.0), 4, "first");
  auto second = labels_of(std::vector<double>(16, 1.0), 4, "second");
  EnsembleSpec spec{10.0, &g, &first, &second};
  auto s = combine(spec);
  EXPECT_EQ(s.positive_count, 10u);
  EXPECT_DOUBLE_EQ(s.threshold, 9.0);
  EXPECT_EQ(s.replaced_count, 1u);
  for (std::size_t k = 0; k < 16; ++k) EXPECT_EQ(s.labels.labels[k], values[k] == 10 ? 1.0 : 0.0);
  EXPECT_EQ(s.labels.source_name, "spliced");

  spec.replace_percent = 50.0;
  s = combine(spec);
  EXPECT_DOUBLE_EQ(s.threshold, 5.0);
  EXPECT_EQ(s.replaced_count, 5u);

  spec.replace_percent = 100.0;
  s = combine(spec);
  EXPECT_EQ(s.replaced_count, 10u);
  for (std::size_t k = 0; k < 16; ++k) EXPECT_EQ(s.replaced[k] != 0, values[k] > 0);
}

TEST(Combine, TiesAtThresholdKeepFirstSource) {
  const auto g = gain_of({2, 2, 2, 2}, 2);
  auto first = labels_of({0, 0, 0, 0}, 2, "first");
  auto second = labels_of({1, 1, 1, 1}, 2, "second");
  const auto s = combine({50.0, &g, &first, &second});
  EXPECT_EQ(s.replaced_count, 0u);
}

TEST(Combine, NoPositiveGainMeansNoThreshold) {
  const auto g = gain_of({-1, 0, -3, 0}, 2);
  auto first = labels_of({0, 0, 0, 0}, 2, "first");
  auto second = labels_of({1, 1, 1, 1}, 2, "second");
  const auto s = combine({10.0, &g, &first, &second});
  EXPECT_FALSE(s.has_threshold);
  EXPECT_EQ(s.replaced_count, 0u);
  EXPECT_EQ(s.labels.labels, first.labels);
  EXPECT_THROW(combine({0.0, &g, &first, &second}), UsageError);
  EXPECT_THROW(combine({10.0, &g, &first, nullptr}), UsageError);
}

TEST(Ensemble, IdenticalSourcesReproduceTheBaseline) {
  const Dims d{1, 3, 2};
  const auto train_set = random_samples(d, 20, 1);
  const auto val = random_samples(d, 8, 2, Split::validation);
  const auto test = random_samples(d, 8, 3, Split::test);
  const auto first = labels_of(train_set.targets, 2, "first");
  const auto g = gain_of(random_vector(40, 4), 2);
  TrainConfig cfg;
  cfg.max_epochs = 20;
  cfg.patience = 3;
  cfg.batch_size = 5;
  const auto out = run_ensemble({30.0, &g, &first, &first}, MlpArch{2, 5}, cfg, train_set, val, test);
  const auto base = train(MlpArch{2, 5}, train_set, first.labels, val, cfg);
  EXPECT_EQ(out.params, base.params);
  EXPECT_EQ(out.report.ensemble_test_mse, out.report.baseline_test_mse);
  EXPECT_EQ(out.report.improvement(), 0.0);
  EXPECT_DOUBLE_EQ(out.report.baseline_test_mse, evaluate(base.params, test));
}

TEST(Ensemble, SplicedExportListsEveryEntryWithItsSource) {
  const auto ss = window(series_dataset({0, 1, 2, 3, 4, 5}), 2, 2, 1);
  const auto g = gain_of({0, 3, -1, 2, 1, 0}, 2);
  auto first = labels_of(ss.targets, 2, "mean");
  auto second = first;
  second.source_name = "linear";
  for (auto& v : second.labels) v += 10.0;
  const EnsembleSpec spec{100.0, &g, &first, &second};
  const auto s = combine(spec);
  const auto dir = temp_dir("spliced");
  save_spliced(dir / "spliced.csv", ss, s, spec);
  const auto file = textio::read_delimited(dir / "spliced.csv");
  EXPECT_EQ(file.header, (std::vector<std::string>{"sample_index", "timestep", "timestamp", "value", "source"}));
  ASSERT_EQ(file.rows.size(), 6u);
  EXPECT_EQ(file.rows[1][4], "linear");
  EXPECT_EQ(file.rows[2][4], "mean");
  EXPECT_EQ(file.rows[1][2], "3");
  EXPECT_FALSE(file.comments.empty());
}
