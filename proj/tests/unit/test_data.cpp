#include <gtest/gtest.h>

#include <fstream>
#include <numeric>

#include "helpers.hpp"
#include "taskimp/dataset.hpp"
#include "taskimp/errors.hpp"
#include "taskimp/imputation.hpp"
#include "taskimp/masking.hpp"
#include "taskimp/projector.hpp"
#include "taskimp/rng.hpp"
#include "taskimp/samples.hpp"
#include "taskimp/textio.hpp"

using namespace taskimp;
using testing_util::series_dataset;

namespace {

std::vector<double> ramp(std::size_t n, double slope = 1.0) {
  std::vector<double> v(n);
  for (std::size_t t = 0; t < n; ++t) v[t] = slope * static_cast<double>(t);
  return v;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path) << text;
}

}  // namespace

TEST(Rng, DerivedStreamsAreStableAndDistinct) {
  EXPECT_EQ(derive_seed(7, "mask"), derive_seed(7, "mask"));
  EXPECT_NE(derive_seed(7, "mask"), derive_seed(7, "train"));
  EXPECT_NE(derive_seed(7, "mask"), derive_seed(8, "mask"));
  Rng a(3), b(3);
  for (int k = 0; k < 100; ++k) {
    const double u = uniform_real(a, -2.0, 5.0);
    EXPECT_EQ(u, uniform_real(b, -2.0, 5.0));
    EXPECT_GE(u, -2.0);
    EXPECT_LT(u, 5.0);
  }
}

TEST(TextIo, HexRoundTripIsExact) {
  for (double v : {0.1, -1e-300, 12345.678901234567, 3.0e200}) {
    double back = 0.0;
    ASSERT_TRUE(textio::parse_hex(textio::format_hex(v), back));
    EXPECT_EQ(back, v);
    ASSERT_TRUE(textio::parse_double(textio::format_double(v), back));
    EXPECT_EQ(back, v);
  }
  double x = 0.0;
  EXPECT_FALSE(textio::parse_double("1.5abc", x));
  EXPECT_EQ(textio::detect_delimiter("a;b;c"), ';');
  EXPECT_EQ(textio::detect_delimiter("a\tb"), '\t');
}

TEST(Dataset, LoadsTimestampedCsvAndRejectsBadInput) {
  const auto dir = testing_util::temp_dir("dataset");
  write_file(dir / "ok.csv", "time,load,temp\n2020-01-01 00:00:00,1.5,3\n2020-01-01 01:00:00,2.5,4\n");
  const auto ds = load_series(dir / "ok.csv", 0);
  ASSERT_EQ(ds.length(), 2u);
  EXPECT_EQ(ds.features(), 2u);
  EXPECT_EQ(ds.feature_names[1], "temp");
  EXPECT_EQ(ds.time_keys[1] - ds.time_keys[0], 3600);
  EXPECT_DOUBLE_EQ(ds.target()[1], 2.5);

  write_file(dir / "order.csv", "t,y\n2,1\n1,2\n");
  EXPECT_THROW(load_series(dir / "order.csv", 0), DataError);
  write_file(dir / "nan.csv", "t,y\n1,nan\n2,2\n");
  EXPECT_THROW(load_series(dir / "nan.csv", 0), DataError);
  write_file(dir / "ragged.csv", "t,y\n1,1\n2\n");
  EXPECT_THROW(load_series(dir / "ragged.csv", 0), DataError);
  EXPECT_THROW(load_series(dir / "absent.csv", 0), DataError);
  EXPECT_THROW(load_series(dir / "ok.csv", 2), DataError);
}

TEST(Dataset, SaveLoadRoundTrip) {
  const auto dir = testing_util::temp_dir("dataset_rt");
  const auto ds = synthetic_load(100, 4, 2);
  save_series(dir / "s.csv", ds);
  const auto back = load_series(dir / "s.csv", 0);
  EXPECT_EQ(back.values, ds.values);
  EXPECT_EQ(back.time_keys, ds.time_keys);
}

TEST(Dataset, NormalizerUsesTrainingRowsOnly) {
  auto ds = series_dataset({1.0, 3.0, 100.0, -50.0});
  const auto norm = Normalizer::fit(ds, 2);
  EXPECT_DOUBLE_EQ(norm.mean[0], 2.0);
  EXPECT_DOUBLE_EQ(norm.scale[0], 1.0);
  const auto z = norm.apply(ds);
  EXPECT_DOUBLE_EQ(z.values(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(z.values(2, 0), 98.0);
}

TEST(Dataset, SyntheticIsDeterministic) {
  EXPECT_EQ(synthetic_load(500, 1).values, synthetic_load(500, 1).values);
  EXPECT_FALSE(synthetic_load(500, 1).values == synthetic_load(500, 2).values);
  EXPECT_THROW(synthetic_load(0, 1), UsageError);
}

TEST(Samples, WindowCountsByHand) {
  EXPECT_EQ(window_count(48, 24, 24, 1), 1u);
  EXPECT_EQ(window_count(50, 24, 24, 1), 3u);
  EXPECT_EQ(window_count(50, 24, 24, 2), 2u);
  EXPECT_THROW(window_count(47, 24, 24, 1), DataError);
}

TEST(Samples, WindowsCutInputsAndTargetsInOrder) {
  const auto ds = series_dataset(ramp(10));
  const auto ss = window(ds, 3, 2, 1);
  ASSERT_EQ(ss.size(), 6u);
  const auto x = ss.input(2);
  EXPECT_EQ(std::vector<double>(x.begin(), x.end()), (std::vector<double>{2, 3, 4}));
  const auto y = ss.target(2);
  EXPECT_EQ(std::vector<double>(y.begin(), y.end()), (std::vector<double>{5, 6}));
  EXPECT_EQ(ss.target_row(2, 1), 6u);
}

TEST(Samples, MultivariateInputIsFeatureMajor) {
  TimeSeriesDataset ds = series_dataset(ramp(6));
  ds.feature_names = {"y", "z"};
  Matrix v(6, 2);
  for (std::size_t t = 0; t < 6; ++t) {
    v(t, 0) = static_cast<double>(t);
    v(t, 1) = 100.0 + static_cast<double>(t);
  }
  ds.values = v;
  const auto ss = window(ds, 2, 1, 1);
  const auto x = ss.input(1);
  EXPECT_EQ(std::vector<double>(x.begin(), x.end()), (std::vector<double>{1, 2, 101, 102}));
  EXPECT_DOUBLE_EQ(ss.target(1)[0], 3.0);
}

TEST(Projector, BlockLengthsAndIdentities) {
  const auto p = make_projector(5, 2);
  EXPECT_EQ(p.block_lengths, (std::vector<std::size_t>{2, 3}));
  const Matrix aad = multiply(p.a, p.a_dag);
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(aad(r, c), r == c ? 1.0 : 0.0, 1e-15);
  EXPECT_EQ(p.segment_of(1), 0u);
  EXPECT_EQ(p.segment_of(2), 1u);
  const auto id = make_projector(4, 4);
  EXPECT_TRUE(id.is_identity());
  EXPECT_EQ(id.a, Matrix::identity(4));
  EXPECT_THROW(make_projector(4, 0), UsageError);
  EXPECT_THROW(make_projector(4, 5), UsageError);
}

TEST(Masking, HitsRequestedRateWithAdmissibleRuns) {
  const auto ss = window(series_dataset(ramp(1000)), 24, 24, 1);
  MaskSpec spec;
  spec.missing_rate = 0.4;
  spec.seed = 9;
  const auto m = generate_mask(ss, spec);
  const auto masked = std::accumulate(m.series_mask.begin(), m.series_mask.end(), std::size_t{0});
  EXPECT_EQ(masked, 400u);
  EXPECT_DOUBLE_EQ(m.realized_rate, 0.4);
  ASSERT_EQ(m.size(), ss.size());
  for (std::size_t i = 0; i < ss.size(); ++i)
    for (std::size_t l = 0; l < 24; ++l) EXPECT_EQ(m.masked(i, l), m.series_mask[ss.target_row(i, l)] != 0);
  EXPECT_EQ(generate_mask(ss, spec).series_mask, m.series_mask);
  spec.seed = 10;
  EXPECT_NE(generate_mask(ss, spec).series_mask, m.series_mask);
}

TEST(Masking, RejectsBadSpecs) {
  const auto ss = window(series_dataset(ramp(60)), 24, 24, 1);
  MaskSpec spec;
  spec.missing_rate = 1.0;
  EXPECT_THROW(generate_mask(ss, spec), UsageError);
  spec.missing_rate = 0.5;
  spec.run_lengths = {};
  EXPECT_THROW(generate_mask(ss, spec), UsageError);
  spec.run_lengths = {100};
  EXPECT_THROW(generate_mask(ss, spec), DataError);
}

TEST(Masking, FileRoundTrip) {
  const auto dir = testing_util::temp_dir("mask_rt");
  const auto ss = window(series_dataset(ramp(200)), 24, 24, 1);
  MaskSpec spec;
  spec.seed = 1;
  const auto m = generate_mask(ss, spec);
  save_mask(dir / "mask.csv", ss, m);
  const auto back = load_mask(dir / "mask.csv", ss);
  EXPECT_EQ(back.series_mask, m.series_mask);
  EXPECT_EQ(back.masks, m.masks);
}

TEST(Imputation, LinearInterpolationByHand) {
  const std::vector<double> s{1.0, 0.0, 0.0, 4.0, 0.0};
  const std::vector<std::uint8_t> miss{0, 1, 1, 0, 1};
  EXPECT_EQ(interpolate_linear(s, miss), (std::vector<double>{1.0, 2.0, 3.0, 4.0, 4.0}));
  const std::vector<std::uint8_t> lead{1, 1, 0, 0, 0};
  EXPECT_EQ(interpolate_linear(s, lead), (std::vector<double>{0.0, 0.0, 0.0, 4.0, 0.0}));
  EXPECT_THROW(interpolate_linear(s, std::vector<std::uint8_t>(5, 1)), DataError);
}

TEST(Imputation, CalendarMeanByHand) {
  // period 2: even rows observed values 1 and 3, odd rows 10 and 30.
  const auto ss = window(series_dataset({1, 10, 3, 30, 99, 99}), 2, 1, 1);
  const auto m = mask_from_series(ss, {0, 0, 0, 0, 1, 1});
  const auto imp = impute(ss, m, ImputeMethod::mean, 2);
  EXPECT_DOUBLE_EQ(imp.series[4], 2.0);
  EXPECT_DOUBLE_EQ(imp.series[5], 20.0);
  EXPECT_DOUBLE_EQ(imp.series[0], 1.0);
  EXPECT_DOUBLE_EQ(imp.at(3, 0), 20.0);
  EXPECT_NO_THROW(check_alignment(ss, m, imp));
  const auto lin = impute(ss, m, ImputeMethod::linear);
  EXPECT_DOUBLE_EQ(lin.series[5], 30.0);
  const auto bad = mask_from_series(ss, {0, 1, 0, 1, 0, 1});
  EXPECT_THROW(impute(ss, bad, ImputeMethod::mean, 2), DataError);
}

TEST(Imputation, AlignmentCheckCatchesAlteredObservation) {
  const auto ss = window(series_dataset(ramp(8)), 2, 2, 1);
  const auto m = mask_from_series(ss, {0, 0, 0, 1, 1, 0, 0, 0});
  auto imp = impute(ss, m, ImputeMethod::linear);
  EXPECT_NO_THROW(check_alignment(ss, m, imp));
  imp.labels[0] += 1.0;
  EXPECT_THROW(check_alignment(ss, m, imp), DataError);
}

TEST(Imputation, ExternalFileLoadsAndValidates) {
  const auto dir = testing_util::temp_dir("external");
  const auto ss = window(series_dataset(ramp(8)), 2, 2, 1);
  const auto m = mask_from_series(ss, {0, 0, 0, 1, 1, 0, 0, 0});
  write_file(dir / "good.csv", "timestamp,value\n3,7.5\n4,-1\n");
  const auto imp = load_external_imputation(dir / "good.csv", ss, m);
  EXPECT_EQ(imp.source_name, "external:good");
  EXPECT_DOUBLE_EQ(imp.series[3], 7.5);
  EXPECT_DOUBLE_EQ(imp.series[4], -1.0);
  EXPECT_DOUBLE_EQ(imp.series[5], 5.0);

  write_file(dir / "short.csv", "timestamp,value\n3,7.5\n");
  EXPECT_THROW(load_external_imputation(dir / "short.csv", ss, m), DataError);
  write_file(dir / "wrongrow.csv", "timestamp,value\n3,7.5\n5,1\n");
  EXPECT_THROW(load_external_imputation(dir / "wrongrow.csv", ss, m), DataError);
  write_file(dir / "dup.csv", "timestamp,value\n3,7.5\n3,1\n");
  EXPECT_THROW(load_external_imputation(dir / "dup.csv", ss, m), DataError);
  write_file(dir / "inf.csv", "timestamp,value\n3,inf\n4,1\n");
  EXPECT_THROW(load_external_imputation(dir / "inf.csv", ss, m), DataError);
  EXPECT_THROW(load_external_imputation(dir / "none.csv", ss, m), DataError);

  save_imputation(dir / "saved.csv", ss, m, imp);
  const auto back = load_external_imputation(dir / "saved.csv", ss, m, "again");
  EXPECT_EQ(back.labels, imp.labels);
}

TEST(Imputation, ToyDegradationKeepsAnchorRows) {
  const auto base = series_dataset(ramp(30, 0.5));
  const auto clean = simulate_toy(base, 4, 0.0, 0.0, 0);
  // A linear signal survives linear interpolation between kept rows.
  for (std::size_t t = 0; t < 29; ++t) EXPECT_NEAR(clean.values(t, 0), base.values(t, 0), 1e-12);
  auto wave = series_dataset({0, 5, 0, 5, 0, 5, 0, 5, 0, 5});
  const auto deg = simulate_toy(wave, 4, 0.0, 0.0, 0);
  for (std::size_t t : {0, 4, 5, 8, 9}) EXPECT_DOUBLE_EQ(deg.values(t, 0), wave.values(t, 0));
  EXPECT_DOUBLE_EQ(deg.values(1, 0), 0.0);
  EXPECT_DOUBLE_EQ(deg.values(2, 0), 0.0);
  const auto noisy = simulate_toy(wave, 4, 0.05, 0.3, 1);
  EXPECT_NE(noisy.values(0, 0), 0.0);
  EXPECT_THROW(simulate_toy(wave, 1, 0.0, 0.0, 0), UsageError);
}
