#include "taskimp/train.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "taskimp/errors.hpp"
#include "taskimp/rng.hpp"
#include "taskimp/textio.hpp"

namespace taskimp {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be positive");
  if (max_epochs == 0 || patience == 0 || batch_size == 0)
    throw UsageError("max_epochs, patience and batch_size must be positive");
  if (early_stopping && patience > max_epochs) throw UsageError("patience must not exceed max_epochs");
}

const ModelParams& TrainTrajectory::params_at(std::size_t t) const {
  if (t == 0) {
    if (!initial) throw DataError("trajectory has no initial checkpoint");
    return *initial;
  }
  if (t > checkpoints.size()) throw DataError("trajectory has no checkpoint for epoch " + std::to_string(t));
  return checkpoints[t - 1];
}

TrainResult train(const Architecture& arch, const SampleSet& train_set, std::span<const double> labels,
                  const SampleSet& val_set, const TrainConfig& cfg) {
  const Dims dims = train_set.dims;
  return train_from(init_params(arch, dims, derive_seed(cfg.seed, "init")), train_set, labels, val_set, cfg);
}

TrainResult train_from(const ModelParams& init, const SampleSet& train_set,
                       std::span<const double> labels, const SampleSet& val_set,
                       const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t n = train_set.size();
  const std::size_t L2 = train_set.dims.output_len;
  if (n == 0) throw DataError("training set is empty");
  if (labels.size() != n * L2) throw DataError("labels not aligned with training samples");
  if (val_set.size() == 0) throw DataError("validation set is empty");
  if (!(init.dims() == train_set.dims) || !(val_set.dims == train_set.dims))
    throw DataError("model and sample shapes differ");

  ModelParams params = init;
  TrainResult result{params, {}};
  auto& traj = result.trajectory;
  if (cfg.record_trajectory) traj.initial = params;

  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad(params.size());
  std::vector<double> batch_grad(params.size());

  double best_val = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_range(order.begin(), order.end(), shuffle_rng);
    std::vector<std::vector<std::size_t>> batches;
    double epoch_loss = 0.0;
    ModelEvaluator ev(params);
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        const auto f = ev.forward(train_set.input(i));
        const auto y = labels.subspan(i * L2, L2);
        double loss = 0.0;
        for (std::size_t j = 0; j < L2; ++j) loss += (f[j] - y[j]) * (f[j] - y[j]);
        epoch_loss += loss / static_cast<double>(L2);
        ev.loss_grad(y, grad);
        for (std::size_t k = 0; k < grad.size(); ++k) batch_grad[k] += grad[k];
      }
      const double step = cfg.learning_rate / static_cast<double>(end - start);
      auto theta = params.mutable_theta();
      for (std::size_t k = 0; k < theta.size(); ++k) theta[k] -= step * batch_grad[k];
      if (cfg.record_trajectory) batches.emplace_back(order.begin() + start, order.begin() + end);
    }
    epoch_loss /= static_cast<double>(n);
    if (!std::isfinite(epoch_loss))
      throw NumericalError("training diverged at epoch " + std::to_string(epoch) +
                           " (non-finite loss); lower the learning rate");
    for (double v : params.theta())
      if (!std::isfinite(v)) throw NumericalError("training diverged at epoch " + std::to_string(epoch));

    const double val = evaluate(params, val_set);
    traj.val_losses.push_back(val);
    traj.train_losses.push_back(epoch_loss);
    if (cfg.record_trajectory) {
      traj.checkpoints.push_back(params);
      traj.step_lrs.push_back(cfg.learning_rate);
      traj.batch_members.push_back(std::move(batches));
    }
    if (!cfg.early_stopping) {
      traj.best_epoch = epoch;
      result.params = params;
      continue;
    }
    if (val < best_val) {
      best_val = val;
      traj.best_epoch = epoch;
      result.params = params;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

namespace {

double loss_sum(const ModelParams& p, const SampleSet& ds, std::span<const double> labels) {
  const std::size_t L2 = ds.dims.output_len;
  if (labels.size() != ds.size() * L2) throw DataError("evaluate: labels not aligned with samples");
  ModelEvaluator ev(p);
  double total = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto f = ev.forward(ds.input(i));
    double s = 0.0;
    for (std::size_t j = 0; j < L2; ++j) {
      const double r = f[j] - labels[i * L2 + j];
      s += r * r;
    }
    total += s / static_cast<double>(L2);
  }
  return total;
}

}  // namespace

double evaluate(const ModelParams& p, const SampleSet& ds) { return evaluate(p, ds, ds.targets); }

double evaluate(const ModelParams& p, const SampleSet& ds, std::span<const double> labels) {
  if (ds.size() == 0) throw DataError("evaluate: empty split");
  return loss_sum(p, ds, labels) / static_cast<double>(ds.size());
}

double total_loss(const ModelParams& p, const SampleSet& ds) { return loss_sum(p, ds, ds.targets); }

void save_trajectory(const std::filesystem::path& dir, const TrainTrajectory& traj) {
  if (!traj.initial) throw DataError("trajectory was not recorded");
  std::filesystem::create_directories(dir);
  save_params(dir / "epoch_0.params", *traj.initial);
  auto manifest = textio::open_output(dir / "manifest.csv");
  manifest << "epoch,lr,train_mse,val_mse,best\n";
  for (std::size_t t = 1; t <= traj.epochs(); ++t) {
    manifest << t << ',' << textio::format_double(traj.step_lrs[t - 1]) << ','
             << textio::format_double(traj.train_losses[t - 1]) << ','
             << textio::format_double(traj.val_losses[t - 1]) << ',' << (t == traj.best_epoch ? 1 : 0)
             << '\n';
    save_params(dir / ("epoch_" + std::to_string(t) + ".params"), traj.checkpoints[t - 1]);
    auto batches = textio::open_output(dir / ("batches_" + std::to_string(t) + ".csv"));
    batches << "batch,sample_index\n";
    const auto& members = traj.batch_members[t - 1];
    for (std::size_t b = 0; b < members.size(); ++b)
      for (auto i : members[b]) batches << b << ',' << i << '\n';
  }
}

TrainTrajectory load_trajectory(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "manifest.csv"))
    throw DataError("no trajectory manifest in '" + dir.string() + "'");
  TrainTrajectory traj;
  traj.initial = load_params(dir / "epoch_0.params");
  const auto manifest = textio::read_delimited(dir / "manifest.csv");
  for (const auto& row : manifest.rows) {
    long long epoch = 0, best = 0;
    double lr = 0.0, train_mse = 0.0, val_mse = 0.0;
    if (row.size() != 5 || !textio::parse_int(row[0], epoch) || !textio::parse_double(row[1], lr) ||
        !textio::parse_double(row[2], train_mse) || !textio::parse_double(row[3], val_mse) ||
        !textio::parse_int(row[4], best) || epoch != static_cast<long long>(traj.epochs()) + 1)
      throw DataError("malformed trajectory manifest in '" + dir.string() + "'");
    traj.step_lrs.push_back(lr);
    traj.train_losses.push_back(train_mse);
    traj.val_losses.push_back(val_mse);
    if (best) traj.best_epoch = static_cast<std::size_t>(epoch);
    const std::string t = std::to_string(epoch);
    traj.checkpoints.push_back(load_params(dir / ("epoch_" + t + ".params")));
    const auto batches = textio::read_delimited(dir / ("batches_" + t + ".csv"));
    std::vector<std::vector<std::size_t>> members;
    for (const auto& b : batches.rows) {
      long long batch = 0, index = 0;
      if (b.size() != 2 || !textio::parse_int(b[0], batch) || !textio::parse_int(b[1], index) || batch < 0 ||
          index < 0)
        throw DataError("malformed batch file for epoch " + t);
      if (static_cast<std::size_t>(batch) >= members.size()) members.resize(static_cast<std::size_t>(batch) + 1);
      members[static_cast<std::size_t>(batch)].push_back(static_cast<std::size_t>(index));
    }
    traj.batch_members.push_back(std::move(members));
  }
  return traj;
}

}  // namespace taskimp
