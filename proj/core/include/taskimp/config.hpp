#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "taskimp/influence.hpp"
#include "taskimp/masking.hpp"
#include "taskimp/model.hpp"
#include "taskimp/train.hpp"

namespace taskimp {

// Plain key=value experiment description. Every key has a default, so an
// empty file is a valid configuration (the bundled synthetic benchmark).
struct ExperimentConfig {
  std::string dataset;               // empty: generate the synthetic series
  std::size_t synthetic_length = 2400;
  std::size_t synthetic_features = 1;
  std::string target_column = "0";  // header name or 0-based feature index

  // Split boundaries. Timestamps win over fractions when given.
  std::string train_end;
  std::string val_end;
  double train_fraction = 0.6;
  double val_fraction = 0.2;

  std::size_t input_len = 24;
  std::size_t output_len = 24;
  std::size_t stride = 1;
  std::size_t period = 24;
  bool normalize = true;

  MaskSpec mask;
  Architecture arch = MlpArch{};
  TrainConfig train;

  std::string estimator = "seq-sim";  // seq-sim | seg | trajectory | influence
  std::size_t segments = 1;
  InfluenceConfig influence;
  double replace_percent = 10.0;
  double discard_percent = 10.0;
  std::string first = "mean";         // mean | linear | external:<path>
  std::string second = "linear";
  std::size_t oracle_count = 0;       // 0: every training sample
  std::string eval_split = "validation";

  double toy_noise_mean = 0.05;
  double toy_noise_std = 0.3;
  std::size_t toy_keep_one = 4;
  std::size_t toy_keep_two = 6;

  std::string output_dir;             // empty: $TASKIMP_OUT or ./taskimp_out
  std::uint64_t seed = 0;
  int threads = 1;

  // Applies one "key=value" assignment; unknown keys are usage errors.
  void set(const std::string& key, const std::string& value);
  // Propagates the global seed into the named sub-configs and validates.
  void finalize();
  std::filesystem::path output_root() const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace taskimp
