#include "taskimp/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <mutex>

#include "taskimp/errors.hpp"
#include "taskimp/parallel.hpp"
#include "taskimp/rng.hpp"
#include "taskimp/textio.hpp"

namespace taskimp {

namespace {

double retrain_loss(const OracleProblem& pr, const OracleBaseline& base, std::span<const double> labels) {
  TrainConfig cfg = pr.cfg;
  cfg.record_trajectory = false;
  if (pr.pin_epochs) {
    cfg.max_epochs = base.epochs;
    cfg.early_stopping = false;
  }
  const auto result = train(pr.arch, *pr.train, labels, *pr.val, cfg);
  return total_loss(result.params, *pr.eval);
}

std::filesystem::path done_path(const std::filesystem::path& path) {
  auto p = path;
  p += ".done";
  return p;
}

}  // namespace

void OracleProblem::validate() const {
  if (!train || !first || !second || !val || !eval) throw UsageError("oracle problem is incomplete");
  if (first->size() != train->size() || second->size() != train->size())
    throw DataError("oracle: imputation sets not aligned with training samples");
  cfg.validate();
}

OracleBaseline oracle_baseline(const OracleProblem& problem) {
  problem.validate();
  TrainConfig cfg = problem.cfg;
  cfg.record_trajectory = false;
  auto result = train(problem.arch, *problem.train, problem.first->labels, *problem.val, cfg);
  const double loss = total_loss(result.params, *problem.eval);
  return {std::move(result.params), loss, result.trajectory.best_epoch};
}

double true_gain(const OracleProblem& problem, const OracleBaseline& base, std::size_t i) {
  problem.validate();
  if (i >= problem.train->size()) throw UsageError("oracle index " + std::to_string(i) + " out of range");
  const std::size_t L2 = problem.first->output_len;
  const auto a = problem.first->label(i);
  const auto b = problem.second->label(i);
  if (std::equal(a.begin(), a.end(), b.begin())) return 0.0;
  std::vector<double> labels = problem.first->labels;
  std::copy(b.begin(), b.end(), labels.begin() + static_cast<std::ptrdiff_t>(i * L2));
  return base.loss_sum - retrain_loss(problem, base, labels);
}

double true_gain_timestep(const OracleProblem& problem, const OracleBaseline& base, std::size_t i,
                          std::size_t l) {
  problem.validate();
  const std::size_t L2 = problem.first->output_len;
  if (i >= problem.train->size() || l >= L2) throw UsageError("oracle entry out of range");
  const std::size_t k = i * L2 + l;
  if (problem.first->labels[k] == problem.second->labels[k]) return 0.0;
  std::vector<double> labels = problem.first->labels;
  labels[k] = problem.second->labels[k];
  return base.loss_sum - retrain_loss(problem, base, labels);
}

OracleResult oracle_sweep(const OracleProblem& problem, const std::vector<std::size_t>& indices,
                          const SweepOptions& opts) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  problem.validate();
  for (auto i : indices)
    if (i >= problem.train->size()) throw UsageError("oracle index " + std::to_string(i) + " out of range");

  std::map<std::size_t, std::pair<double, double>> known;
  if (opts.resume_file && std::filesystem::exists(*opts.resume_file) &&
      std::filesystem::exists(done_path(*opts.resume_file))) {
    const auto previous = load_oracle(*opts.resume_file);
    for (std::size_t k = 0; k < previous.indices.size(); ++k)
      known[previous.indices[k]] = {previous.true_gains[k], previous.run_loss_sums[k]};
  }

  const auto base = oracle_baseline(problem);
  OracleResult out;
  out.indices = indices;
  out.base_loss_sum = base.loss_sum;
  out.eval_count = problem.eval->size();
  out.base_mse = base.loss_sum / static_cast<double>(out.eval_count);
  out.true_gains.assign(indices.size(), 0.0);
  out.run_loss_sums.assign(indices.size(), 0.0);

  std::vector<std::size_t> todo;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (auto it = known.find(indices[k]); it != known.end()) {
      out.true_gains[k] = it->second.first;
      out.run_loss_sums[k] = it->second.second;
    } else {
      todo.push_back(k);
    }
  }
  std::mutex progress_mutex;
  std::size_t done = indices.size() - todo.size();
  const auto retrain_start = clock::now();
  parallel_for(todo.size(), opts.threads, [&](std::size_t t) {
    const std::size_t k = todo[t];
    const double gain = true_gain(problem, base, indices[k]);
    out.true_gains[k] = gain;
    out.run_loss_sums[k] = base.loss_sum - gain;
    if (opts.progress) {
      std::lock_guard lock(progress_mutex);
      opts.progress(++done, indices.size());
    }
  });
  const double retrain_seconds = std::chrono::duration<double>(clock::now() - retrain_start).count();
  out.seconds = std::chrono::duration<double>(clock::now() - start).count();
  const double workers = static_cast<double>(std::max(1, std::min<int>(opts.threads, static_cast<int>(todo.size()))));
  out.per_retrain_seconds = todo.empty() ? 0.0 : retrain_seconds * workers / static_cast<double>(todo.size());
  return out;
}

void save_oracle(const std::filesystem::path& path, const OracleResult& r) {
  {
    auto out = textio::open_output(path);
    out << "# base_loss_sum=" << textio::format_double(r.base_loss_sum) << '\n'
        << "# eval_count=" << r.eval_count << '\n';
    out << "sample_index,true_gain,run_loss\n";
    for (std::size_t k = 0; k < r.indices.size(); ++k)
      out << r.indices[k] << ',' << textio::format_double(r.true_gains[k]) << ','
          << textio::format_double(r.run_loss_sums[k]) << '\n';
  }
  auto done = textio::open_output(done_path(path));
  for (auto i : r.indices) done << i << '\n';
}

OracleResult load_oracle(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("missing oracle result '" + path.string() + "'");
  const auto file = textio::read_delimited(path);
  OracleResult r;
  for (const auto& c : file.comments) {
    const auto body = std::string(textio::trim(std::string_view(c).substr(1)));
    const auto eq = body.find('=');
    if (eq == std::string::npos) continue;
    const auto key = body.substr(0, eq);
    const auto value = body.substr(eq + 1);
    long long count = 0;
    if (key == "base_loss_sum") textio::parse_double(value, r.base_loss_sum);
    if (key == "eval_count" && textio::parse_int(value, count) && count > 0) r.eval_count = static_cast<std::size_t>(count);
  }
  if (r.eval_count > 0) r.base_mse = r.base_loss_sum / static_cast<double>(r.eval_count);
  for (const auto& row : file.rows) {
    long long i = 0;
    double gain = 0.0, run = 0.0;
    if (row.size() != 3 || !textio::parse_int(row[0], i) || i < 0 || !textio::parse_double(row[1], gain) ||
        !textio::parse_double(row[2], run))
      throw DataError("oracle result '" + path.string() + "': malformed row");
    r.indices.push_back(static_cast<std::size_t>(i));
    r.true_gains.push_back(gain);
    r.run_loss_sums.push_back(run);
  }
  return r;
}

}  // namespace taskimp
