#include "taskimp/gain.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "taskimp/errors.hpp"
#include "taskimp/parallel.hpp"
#include "taskimp/rng.hpp"
#include "taskimp/textio.hpp"

namespace taskimp {

namespace {

constexpr std::size_t kReduceChunk = 16;

void check_inputs(const ModelParams& p, const SampleSet& train, const ImputationSet& first,
                  const ImputationSet& second, const SampleSet& eval, const GainOptions& opts) {
  if (train.size() == 0) throw DataError("gain: empty training set");
  if (eval.size() == 0) throw DataError("gain: empty evaluation set");
  if (!(p.dims() == train.dims) || !(eval.dims == train.dims))
    throw DataError("gain: model, training and evaluation shapes differ");
  if (first.size() != train.size() || second.size() != train.size() ||
      first.output_len != train.dims.output_len || second.output_len != train.dims.output_len)
    throw DataError("gain: imputation sets not aligned with training samples");
  if (opts.mask && (opts.mask->size() != train.size() || opts.mask->output_len != train.dims.output_len))
    throw DataError("gain: mask not aligned with training samples");
  parse_loss("mse");
}

GainMatrix empty_gain(const SampleSet& train, const ImputationSet& first, const ImputationSet& second,
                      const SampleSet& eval, std::string estimator, std::size_t segments) {
  GainMatrix g;
  g.samples = train.size();
  g.horizon = train.dims.output_len;
  g.values.assign(g.samples * g.horizon, 0.0);
  g.masked.assign(g.samples * g.horizon, 0);
  g.estimator = std::move(estimator);
  g.segments = segments;
  g.eval_split = eval.split;
  g.first_source = first.source_name;
  g.second_source = second.source_name;
  return g;
}

// Adds -scale * C_i^T s into sens_row, where s = A_dag A J_i direction and C_i
// is the loss cross-Hessian at (f(X_i), y1_i).
void accumulate_sample(const ModelParams& p, std::span<const double> x, std::span<const double> y1,
                       const SegmentProjector& proj, std::span<const double> direction, double scale,
                       LossKind loss, std::span<double> sens_row) {
  ModelEvaluator ev(p);
  const auto f_view = ev.forward(x);
  const std::vector<double> f(f_view.begin(), f_view.end());
  std::vector<double> row(p.size());
  std::vector<double> projected(proj.segments);
  for (std::size_t s = 0; s < proj.segments; ++s) {
    ev.vjp(proj.a.row(s), row);
    projected[s] = dot(row, direction);
  }
  const std::size_t L2 = f.size();
  std::vector<double> lifted(L2, 0.0);
  for (std::size_t l = 0; l < L2; ++l)
    for (std::size_t s = 0; s < proj.segments; ++s) lifted[l] += proj.a_dag(l, s) * projected[s];
  const Matrix cross = loss_cross_hessian(loss, f, y1);
  for (std::size_t l = 0; l < L2; ++l) {
    double a = 0.0;
    for (std::size_t j = 0; j < L2; ++j) a += cross(j, l) * lifted[j];
    sens_row[l] += -scale * a;
  }
}

void finalize(GainMatrix& g, std::vector<double> sens, const ImputationSet& first,
              const ImputationSet& second, const GainOptions& opts) {
  for (std::size_t k = 0; k < g.values.size(); ++k) {
    const double delta = first.labels[k] - second.labels[k];
    const bool masked = opts.mask ? opts.mask->masks[k] != 0 : delta != 0.0;
    g.masked[k] = masked ? 1 : 0;
    g.values[k] = (masked && delta != 0.0) ? sens[k] * delta : 0.0;
    if (!std::isfinite(g.values[k])) throw NumericalError("gain estimate is not finite");
  }
  if (opts.keep_sensitivity) g.sensitivity = std::move(sens);
}

GainMatrix kernel_gain(const ModelParams& p, const SampleSet& train, const ImputationSet& first,
                       const ImputationSet& second, const SampleSet& eval, const SegmentProjector& proj,
                       std::string estimator, const GainOptions& opts) {
  check_inputs(p, train, first, second, eval, opts);
  GainMatrix g = empty_gain(train, first, second, eval, std::move(estimator), proj.segments);
  const auto grad = eval_loss_gradient(p, eval, opts.threads);
  const std::size_t n = train.size();
  const std::size_t L2 = train.dims.output_len;
  const double scale = 1.0 / static_cast<double>(n);
  std::vector<double> sens(n * L2, 0.0);
  parallel_for(n, opts.threads, [&](std::size_t i) {
    accumulate_sample(p, train.input(i), first.label(i), proj, grad, scale, opts.loss,
                      std::span<double>(sens).subspan(i * L2, L2));
  });
  finalize(g, std::move(sens), first, second, opts);
  return g;
}

}  // namespace

std::vector<double> GainMatrix::sample_totals() const {
  std::vector<double> totals(samples, 0.0);
  for (std::size_t i = 0; i < samples; ++i)
    for (std::size_t l = 0; l < horizon; ++l) totals[i] += values[i * horizon + l];
  return totals;
}

std::vector<double> eval_loss_gradient(const ModelParams& p, const SampleSet& eval, int threads) {
  const std::size_t m = eval.size();
  const std::size_t chunks = (m + kReduceChunk - 1) / kReduceChunk;
  std::vector<std::vector<double>> partial(chunks, std::vector<double>(p.size(), 0.0));
  parallel_for(chunks, threads, [&](std::size_t c) {
    ModelEvaluator ev(p);
    std::vector<double> g(p.size());
    for (std::size_t k = c * kReduceChunk; k < std::min(m, (c + 1) * kReduceChunk); ++k) {
      ev.forward(eval.input(k));
      ev.loss_grad(eval.target(k), g);
      axpy(1.0, g, partial[c]);
    }
  });
  std::vector<double> total(p.size(), 0.0);
  for (const auto& part : partial) axpy(1.0, part, total);
  return total;
}

GainMatrix estimate_seq_sim(const ModelParams& p, const SampleSet& train, const ImputationSet& first,
                            const ImputationSet& second, const SampleSet& eval, const GainOptions& opts) {
  const std::size_t L2 = train.dims.output_len;
  return kernel_gain(p, train, first, second, eval, make_projector(L2, L2), "seq-sim", opts);
}

GainMatrix estimate_seg(const ModelParams& p, const SampleSet& train, const ImputationSet& first,
                        const ImputationSet& second, const SampleSet& eval, std::size_t segments,
                        const GainOptions& opts) {
  const auto proj = make_projector(train.dims.output_len, segments);
  return kernel_gain(p, train, first, second, eval, proj, "seg-" + std::to_string(segments), opts);
}

GainMatrix estimate_trajectory(const TrainTrajectory& traj, const SampleSet& train,
                               const ImputationSet& first, const ImputationSet& second,
                               const SampleSet& eval, const GainOptions& opts, std::size_t segments) {
  if (!traj.initial || traj.checkpoints.empty())
    throw DataError("trajectory estimator needs a recorded trajectory (train with record_trajectory)");
  if (traj.best_epoch == 0 || traj.best_epoch > traj.checkpoints.size() ||
      traj.batch_members.size() < traj.best_epoch || traj.step_lrs.size() < traj.best_epoch)
    throw DataError("trajectory is inconsistent: best epoch has no recorded batches");
  check_inputs(*traj.initial, train, first, second, eval, opts);
  const std::size_t n = train.size();
  const std::size_t L2 = train.dims.output_len;
  const auto proj = make_projector(L2, segments == 0 ? L2 : segments);
  GainMatrix g = empty_gain(train, first, second, eval, "trajectory", proj.segments);

  std::vector<double> sens(n * L2, 0.0);
  for (std::size_t t = 1; t <= traj.best_epoch; ++t) {
    const ModelParams& theta = traj.params_at(t - 1);
    if (!(theta.dims() == train.dims)) throw DataError("trajectory checkpoint shape mismatch");
    const auto grad = eval_loss_gradient(theta, eval, opts.threads);
    // Flatten (sample, batch size) pairs for this epoch.
    std::vector<std::pair<std::size_t, double>> work;
    for (const auto& batch : traj.batch_members[t - 1]) {
      for (auto i : batch) {
        if (i >= n) throw DataError("trajectory references sample " + std::to_string(i) + " outside the training set");
        work.emplace_back(i, traj.step_lrs[t - 1] / static_cast<double>(batch.size()));
      }
    }
    std::sort(work.begin(), work.end());
    for (std::size_t w = 1; w < work.size(); ++w)
      if (work[w].first == work[w - 1].first)
        throw DataError("trajectory lists sample " + std::to_string(work[w].first) + " twice in epoch " +
                        std::to_string(t));
    parallel_for(work.size(), opts.threads, [&](std::size_t w) {
      const auto [i, scale] = work[w];
      accumulate_sample(theta, train.input(i), first.label(i), proj, grad, scale, opts.loss,
                        std::span<double>(sens).subspan(i * L2, L2));
    });
  }
  finalize(g, std::move(sens), first, second, opts);
  return g;
}

// ---------------------------------------------------------------------------
// Axioms

std::vector<double> pairwise_influence(const ModelParams& p, std::size_t train_count,
                                       std::span<const double> x_i, std::span<const double> y_i,
                                       std::span<const double> x_k, std::span<const double> y_k) {
  const std::size_t L2 = p.dims().output_len;
  const auto g_k = param_grad(p, x_k, y_k);  // J_k^T dL/df(X_k)
  std::vector<double> out(L2, 0.0);
  accumulate_sample(p, x_i, y_i, make_projector(L2, L2), g_k, 1.0 / static_cast<double>(train_count),
                    LossKind::mse, out);
  return out;
}

AxiomReport axiom_checks(const ModelParams& p, const SampleSet& train, std::span<const double> train_labels,
                         const SampleSet& eval, const AxiomOptions& opts) {
  const std::size_t n = train.size();
  const std::size_t L2 = train.dims.output_len;
  if (n == 0 || eval.size() == 0) throw DataError("axiom_checks: empty split");
  if (train_labels.size() != n * L2) throw DataError("axiom_checks: labels not aligned");
  const std::size_t k = std::min(n, opts.max_samples);
  auto label = [&](std::size_t i) { return train_labels.subspan(i * L2, L2); };

  AxiomReport report;
  // Kernel blocks and pairwise influence among the first k training points.
  std::vector<Matrix> jac(k);
  for (std::size_t i = 0; i < k; ++i) jac[i] = output_jacobian(p, train.input(i));
  std::vector<std::vector<double>> infl(k * k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      infl[i * k + j] = pairwise_influence(p, n, train.input(i), label(i), train.input(j), label(j));

  auto is_zero = [](std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
  };
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      ++report.pairs_checked;
      const Matrix block = multiply_transposed(jac[i], jac[j]);
      if (!is_zero(block.data())) continue;
      ++report.zero_kernel_pairs;
      if (!is_zero(infl[i * k + j]) || !is_zero(infl[j * k + i])) ++report.symmetric_zero_violations;
    }
  }

  report.irreducible.assign(k, 0);
  std::size_t pass = 0;
  auto l1 = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
  };
  for (std::size_t i = 0; i < k; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      if (j != i) off += l1(infl[i * k + j]);
    if (l1(infl[i * k + i]) > off) {
      report.irreducible[i] = 1;
      ++pass;
    }
  }
  report.irreducibility_rate = k == 0 ? 0.0 : static_cast<double>(pass) / static_cast<double>(k);

  // Continuity: perturb the first evaluation input along a random unit
  // direction, fit the slope at a coarse step and probe at a fine one.
  Rng rng(derive_seed(opts.seed, "continuity"));
  std::vector<double> dir(train.dims.input_size());
  for (auto& d : dir) d = standard_normal(rng);
  const double dn = norm2(dir);
  for (auto& d : dir) d /= dn;
  const auto x0 = eval.input(0);
  auto change_at = [&](double eps) {
    std::vector<double> x(x0.begin(), x0.end());
    axpy(eps, dir, x);
    double worst = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      const auto base = pairwise_influence(p, n, train.input(i), label(i), x0, eval.target(0));
      const auto moved = pairwise_influence(p, n, train.input(i), label(i), x, eval.target(0));
      for (std::size_t l = 0; l < L2; ++l) worst = std::max(worst, std::abs(moved[l] - base[l]));
    }
    return worst;
  };
  report.continuity_slope = change_at(opts.fit_epsilon) / opts.fit_epsilon;
  report.continuity_probe_change = change_at(opts.probe_epsilon);
  report.continuity_ok = std::isfinite(report.continuity_slope) &&
                         report.continuity_probe_change <=
                             2.0 * report.continuity_slope * opts.probe_epsilon + 1e-12;
  return report;
}

// ---------------------------------------------------------------------------
// IO

void save_gain_matrix(const std::filesystem::path& path, const GainMatrix& g) {
  auto out = textio::open_output(path);
  out << "# estimator=" << g.estimator << '\n'
      << "# segments=" << g.segments << '\n'
      << "# pair=" << g.first_source << ',' << g.second_source << '\n'
      << "# eval_split=" << to_string(g.eval_split) << '\n'
      << "# samples=" << g.samples << '\n'
      << "# horizon=" << g.horizon << '\n'
      << "# converged=" << (g.converged ? 1 : 0) << '\n';
  out << "sample_index,timestep,gain,masked_flag\n";
  for (std::size_t i = 0; i < g.samples; ++i)
    for (std::size_t l = 0; l < g.horizon; ++l)
      out << i << ',' << l << ',' << textio::format_double(g.at(i, l)) << ','
          << static_cast<int>(g.masked[i * g.horizon + l]) << '\n';
}

GainMatrix load_gain_matrix(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw DataError("missing gain matrix '" + path.string() + "'");
  const auto file = textio::read_delimited(path);
  std::map<std::string, std::string> meta;
  for (const auto& c : file.comments) {
    const auto body = std::string(textio::trim(std::string_view(c).substr(1)));
    const auto eq = body.find('=');
    if (eq != std::string::npos) meta[body.substr(0, eq)] = body.substr(eq + 1);
  }
  long long samples = 0, horizon = 0, segments = 0, converged = 1;
  if (!textio::parse_int(meta["samples"], samples) || !textio::parse_int(meta["horizon"], horizon) || samples < 0 ||
      horizon <= 0)
    throw DataError("gain matrix '" + path.string() + "' lacks samples/horizon metadata");
  textio::parse_int(meta["segments"], segments);
  textio::parse_int(meta["converged"], converged);
  GainMatrix g;
  g.samples = static_cast<std::size_t>(samples);
  g.horizon = static_cast<std::size_t>(horizon);
  g.segments = static_cast<std::size_t>(segments);
  g.estimator = meta["estimator"];
  g.eval_split = meta.count("eval_split") ? parse_split(meta["eval_split"]) : Split::validation;
  g.converged = converged != 0;
  const auto comma = meta["pair"].find(',');
  g.first_source = meta["pair"].substr(0, comma);
  if (comma != std::string::npos) g.second_source = meta["pair"].substr(comma + 1);
  g.values.assign(g.samples * g.horizon, 0.0);
  g.masked.assign(g.samples * g.horizon, 0);
  if (file.rows.size() != g.samples * g.horizon)
    throw DataError("gain matrix '" + path.string() + "' has the wrong number of rows");
  for (const auto& row : file.rows) {
    long long i = 0, l = 0, m = 0;
    double v = 0.0;
    if (row.size() != 4 || !textio::parse_int(row[0], i) || !textio::parse_int(row[1], l) ||
        !textio::parse_double(row[2], v) || !textio::parse_int(row[3], m) || i < 0 || l < 0 ||
        static_cast<std::size_t>(i) >= g.samples || static_cast<std::size_t>(l) >= g.horizon)
      throw DataError("gain matrix '" + path.string() + "': malformed row");
    const std::size_t k = static_cast<std::size_t>(i) * g.horizon + static_cast<std::size_t>(l);
    g.values[k] = v;
    g.masked[k] = m != 0 ? 1 : 0;
  }
  return g;
}

}  // namespace taskimp
