#include <gtest/gtest.h>

#include <sstream>

#include "helpers.hpp"
#include "taskimp/config.hpp"
#include "taskimp/errors.hpp"
#include "taskimp/gain.hpp"
#include "taskimp/masking.hpp"
#include "taskimp/pipeline.hpp"

using namespace taskimp;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config(const std::string& name) {
  auto cfg = parse_config(
      "synthetic.length=480\nmlp.hidden=8\ntrain.max_epochs=15\ntrain.patience=3\n"
      "oracle.count=3\ntoy.keep_one=4\n");
  cfg.output_dir = testing_util::temp_dir(name).string();
  cfg.finalize();
  return cfg;
}

}  // namespace

TEST(Pipeline, PreparedSplitsAreContiguousAndNormalized) {
  const auto cfg = tiny_config("prep");
  const auto data = prepare_data(cfg);
  EXPECT_EQ(data.train_end, 288u);
  EXPECT_EQ(data.val_end, 384u);
  EXPECT_EQ(data.train_truth.size(), 288u - 47u);
  EXPECT_EQ(data.val.size(), 96u - 47u);
  EXPECT_EQ(data.test.size(), 96u - 47u);
  double mean = 0.0;
  for (std::size_t t = 0; t < data.train_end; ++t) mean += data.normalized.values(t, 0);
  EXPECT_NEAR(mean / static_cast<double>(data.train_end), 0.0, 1e-12);
  EXPECT_EQ(data.val.first_row, data.train_end);
}

TEST(Pipeline, MaskedTrainingKeepsCleanTargets) {
  const auto cfg = tiny_config("attach");
  const auto data = prepare_data(cfg);
  const auto mt = attach_mask(data, generate_mask(data.train_truth, cfg.mask), cfg.period);
  EXPECT_EQ(mt.train.targets, data.train_truth.targets);
  std::size_t differing = 0;
  for (std::size_t i = 0; i < mt.train.size(); ++i)
    for (std::size_t t = 0; t < cfg.input_len; ++t) {
      const double v = mt.train.input(i)[t];
      const std::size_t row = i + t;
      EXPECT_EQ(v, mt.mask.series_mask[row] ? mt.mean.series[row] : data.train_truth.series[row]);
      differing += v != data.train_truth.input(i)[t];
    }
  EXPECT_GT(differing, 0u);
  EXPECT_THROW(resolve_source("magic", data, mt, cfg.output_root(), cfg.period), UsageError);
  const auto truth = resolve_source("truth", data, mt, cfg.output_root(), cfg.period);
  EXPECT_EQ(truth.labels, data.train_truth.targets);
}

TEST(Pipeline, MissingUpstreamArtifactNamesTheCommand) {
  const auto cfg = tiny_config("missing");
  std::ostringstream log;
  try {
    cmd_estimate(cfg, log);
    FAIL() << "expected a DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("taskimp"), std::string::npos) << e.what();
  }
}

TEST(Pipeline, CommandsProduceEveryArtifact) {
  auto cfg = tiny_config("commands");
  std::ostringstream log;
  cmd_mask(cfg, log);
  cmd_impute(cfg, log);
  cmd_train(cfg, log);
  const fs::path root = cfg.output_root();
  // An unconverged influence solve still writes its matrix, flagged, then fails.
  cfg.estimator = "influence";
  cfg.influence.cg_max_iters = 1;
  EXPECT_THROW(cmd_estimate(cfg, log), NumericalError);
  EXPECT_FALSE(load_gain_matrix(root / artifact::gain).converged);
  // The ReLU network's loss Hessian is indefinite here; enough damping makes
  // the shifted system positive definite.
  cfg.influence.cg_max_iters = 5000;
  cfg.influence.damping = 1.0;
  for (const char* est : {"seg", "trajectory", "influence", "seq-sim"}) {
    cfg.estimator = est;
    cfg.segments = 2;
    cmd_estimate(cfg, log);
    const auto g = load_gain_matrix(root / artifact::gain);
    EXPECT_EQ(g.estimator.substr(0, 3), std::string(est).substr(0, 3));
    EXPECT_EQ(g.first_source, "mean");
    EXPECT_EQ(g.second_source, "linear");
  }
  cmd_oracle(cfg, log);
  cmd_ensemble(cfg, log);
  cmd_discard(cfg, log);
  cmd_toy(cfg, log);
  cmd_report(cfg, log);
  for (const char* f : {artifact::config, artifact::mask, artifact::impute_mean, artifact::impute_linear,
                        artifact::model, artifact::train_summary, artifact::gain, artifact::oracle,
                        artifact::spliced, artifact::ensemble, artifact::discard, artifact::toy})
    EXPECT_TRUE(fs::exists(root / f)) << f;
  EXPECT_TRUE(fs::exists(root / artifact::report_dir / "report.md"));
  EXPECT_TRUE(fs::is_directory(root / artifact::trajectory));
}

TEST(Pipeline, ImputationFilesRoundTripThroughRawUnits) {
  auto cfg = tiny_config("units");
  std::ostringstream log;
  cmd_mask(cfg, log);
  cmd_impute(cfg, log);
  const auto data = prepare_data(cfg);
  const auto mask = load_mask(fs::path(cfg.output_root()) / artifact::mask, data.train_truth);
  const auto mt = attach_mask(data, mask, cfg.period);
  const auto from_file = resolve_source("external:" + (fs::path(cfg.output_root()) / artifact::impute_linear).string(),
                                        data, mt, cfg.output_root(), cfg.period);
  const auto direct = impute(data.train_truth, mask, ImputeMethod::linear, cfg.period);
  ASSERT_EQ(from_file.labels.size(), direct.labels.size());
  for (std::size_t k = 0; k < direct.labels.size(); ++k) EXPECT_NEAR(from_file.labels[k], direct.labels[k], 1e-12);
  EXPECT_NO_THROW(check_alignment(data.train_truth, mask, from_file));
}
