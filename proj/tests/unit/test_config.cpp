#include <gtest/gtest.h>

#include <cstdlib>

#include "taskimp/config.hpp"
#include "taskimp/errors.hpp"
#include "taskimp/rng.hpp"

using namespace taskimp;

TEST(Config, EmptyTextGivesDefaults) {
  const auto cfg = parse_config("# nothing here\n\n");
  EXPECT_EQ(cfg.input_len, 24u);
  EXPECT_EQ(cfg.output_len, 24u);
  EXPECT_DOUBLE_EQ(cfg.mask.missing_rate, 0.40);
  EXPECT_EQ(cfg.mask.run_lengths, (std::vector<std::size_t>{2, 4, 6, 12, 24, 48, 96, 120}));
  EXPECT_EQ(std::get<MlpArch>(cfg.arch), (MlpArch{3, 128}));
  EXPECT_EQ(cfg.estimator, "seq-sim");
  EXPECT_DOUBLE_EQ(cfg.replace_percent, 10.0);
}

TEST(Config, SerializeRoundTrip) {
  auto cfg = parse_config(
      "dataset = data/x.csv\nmask.runs=3, 5\nmodel=dlinear\ndlinear.kernel=7\ntrain.lr=0.0123\n"
      "estimator=seg\nsegments=4\npair.second=external:/tmp/imp.csv\nseed=42\nthreads=3\ntoy.noise_std=0.25\n");
  EXPECT_EQ(cfg.dataset, "data/x.csv");
  const auto text = serialize_config(cfg);
  const auto back = parse_config(text);
  EXPECT_EQ(serialize_config(back), text);
  EXPECT_EQ(back.mask.run_lengths, (std::vector<std::size_t>{3, 5}));
  EXPECT_EQ(std::get<DLinearArch>(back.arch).kernel, 7u);
  EXPECT_DOUBLE_EQ(back.train.learning_rate, 0.0123);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.threads, 3);
  EXPECT_EQ(back.second, "external:/tmp/imp.csv");
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  ExperimentConfig cfg;
  EXPECT_THROW(cfg.set("no.such.key", "1"), UsageError);
  EXPECT_THROW(cfg.set("train.lr", "fast"), UsageError);
  EXPECT_THROW(cfg.set("normalize", "maybe"), UsageError);
  EXPECT_THROW(cfg.set("model", "transformer"), UsageError);
  EXPECT_THROW(cfg.set("dlinear.kernel", "5"), UsageError);
  EXPECT_THROW(parse_config("just words\n"), UsageError);
  EXPECT_THROW(load_config("/nonexistent/dir/file.cfg"), UsageError);
}

TEST(Config, FinalizePropagatesSeedsAndValidates) {
  ExperimentConfig cfg;
  cfg.set("seed", "7");
  cfg.finalize();
  EXPECT_EQ(cfg.train.seed, 7u);
  EXPECT_EQ(cfg.mask.seed, derive_seed(7, "mask"));

  ExperimentConfig bad;
  bad.segments = 30;
  EXPECT_THROW(bad.finalize(), UsageError);
  bad = ExperimentConfig{};
  bad.estimator = "magic";
  EXPECT_THROW(bad.finalize(), UsageError);
  bad = ExperimentConfig{};
  bad.train_fraction = 0.9;
  EXPECT_THROW(bad.finalize(), UsageError);
  bad = ExperimentConfig{};
  bad.replace_percent = 0.0;
  EXPECT_THROW(bad.finalize(), UsageError);
}

TEST(Config, OutputRootPrefersExplicitThenEnvironment) {
  ExperimentConfig cfg;
  ::setenv("TASKIMP_OUT", "/tmp/from_env", 1);
  EXPECT_EQ(cfg.output_root(), "/tmp/from_env");
  cfg.output_dir = "/tmp/explicit";
  EXPECT_EQ(cfg.output_root(), "/tmp/explicit");
  ::unsetenv("TASKIMP_OUT");
  cfg.output_dir.clear();
  EXPECT_EQ(cfg.output_root(), "taskimp_out");
}
