#include "taskimp/influence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "taskimp/errors.hpp"
#include "taskimp/parallel.hpp"

namespace taskimp {

namespace {

constexpr std::size_t kChunk = 16;

double residual_norm(const std::function<void(std::span<const double>, std::span<double>)>& apply,
                     std::span<const double> b, std::span<const double> x) {
  std::vector<double> ax(b.size());
  apply(x, ax);
  double s = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k) s += (b[k] - ax[k]) * (b[k] - ax[k]);
  return std::sqrt(s);
}

}  // namespace

void InfluenceConfig::validate() const {
  if (!(damping >= 0.0) || !std::isfinite(damping)) throw UsageError("influence damping must be >= 0");
  if (!(cg_tolerance > 0.0)) throw UsageError("cg tolerance must be positive");
  if (cg_max_iters == 0) throw UsageError("cg max iterations must be positive");
}

CgResult conjugate_gradient(const std::function<void(std::span<const double>, std::span<double>)>& apply,
                            std::span<const double> b, std::size_t max_iters, double tolerance) {
  const std::size_t n = b.size();
  CgResult out;
  out.x.assign(n, 0.0);
  std::vector<double> r(b.begin(), b.end());
  std::vector<double> d = r;
  std::vector<double> ad(n);
  double rr = dot(r, r);
  auto& rep = out.report;
  if (std::sqrt(rr) <= tolerance) {
    rep.converged = true;
    rep.message = "right-hand side already within tolerance";
    return out;
  }
  for (std::size_t it = 1; it <= max_iters; ++it) {
    apply(d, ad);
    const double curvature = dot(d, ad);
    if (!std::isfinite(curvature)) throw NumericalError("conjugate gradients: non-finite operator product");
    if (curvature <= 0.0) {
      rep.iterations = it - 1;
      rep.message = "non-positive curvature; increase the damping";
      break;
    }
    const double alpha = rr / curvature;
    axpy(alpha, d, out.x);
    axpy(-alpha, ad, r);
    const double rr_next = dot(r, r);
    rep.iterations = it;
    if (std::sqrt(rr_next) <= tolerance) {
      // The recursive residual drifts; confirm against the true one.
      const double true_norm = residual_norm(apply, b, out.x);
      if (true_norm <= tolerance) {
        rep.converged = true;
        rep.residual_norm = true_norm;
        rep.message = "converged";
        return out;
      }
      r.assign(b.begin(), b.end());
      std::vector<double> ax(n);
      apply(out.x, ax);
      axpy(-1.0, ax, r);
      d = r;
      rr = dot(r, r);
      continue;
    }
    const double beta = rr_next / rr;
    for (std::size_t k = 0; k < n; ++k) d[k] = r[k] + beta * d[k];
    rr = rr_next;
  }
  rep.residual_norm = residual_norm(apply, b, out.x);
  rep.converged = rep.residual_norm <= tolerance;
  if (rep.message.empty()) rep.message = rep.converged ? "converged" : "iteration limit reached";
  return out;
}

std::vector<double> training_hessian_product(const ModelParams& p, const SampleSet& train,
                                             std::span<const double> labels, std::span<const double> v,
                                             double damping, int threads) {
  const std::size_t n = train.size();
  const std::size_t L2 = train.dims.output_len;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<std::vector<double>> partial(chunks);
  parallel_for(chunks, threads, [&](std::size_t c) {
    partial[c].assign(p.size(), 0.0);
    for (std::size_t i = c * kChunk; i < std::min(n, (c + 1) * kChunk); ++i)
      axpy(1.0, hessian_vector_product(p, train.input(i), labels.subspan(i * L2, L2), v), partial[c]);
  });
  std::vector<double> out(p.size(), 0.0);
  for (const auto& part : partial) axpy(1.0, part, out);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = out[k] / static_cast<double>(n) + damping * v[k];
  return out;
}

InfluenceResult estimate_influence(const ModelParams& p, const SampleSet& train, const ImputationSet& first,
                                   const ImputationSet& second, const SampleSet& eval,
                                   const InfluenceConfig& cfg, const MaskSet* mask) {
  cfg.validate();
  const std::size_t n = train.size();
  const std::size_t L2 = train.dims.output_len;
  if (n == 0 || eval.size() == 0) throw DataError("influence: empty split");
  if (!(p.dims() == train.dims) || !(eval.dims == train.dims))
    throw DataError("influence: model, training and evaluation shapes differ");
  if (first.size() != n || second.size() != n || first.output_len != L2 || second.output_len != L2)
    throw DataError("influence: imputation sets not aligned with training samples");
  if (mask && (mask->size() != n || mask->output_len != L2))
    throw DataError("influence: mask not aligned with training samples");

  const auto g = eval_loss_gradient(p, eval, cfg.threads);
  const std::span<const double> labels = first.labels;
  auto apply = [&](std::span<const double> v, std::span<double> out) {
    const auto hv = training_hessian_product(p, train, labels, v, cfg.damping, cfg.threads);
    std::copy(hv.begin(), hv.end(), out.begin());
  };
  const auto solve = conjugate_gradient(apply, g, cfg.cg_max_iters, cfg.cg_tolerance);

  InfluenceResult result;
  result.cg = solve.report;
  auto& gm = result.gain;
  gm.samples = n;
  gm.horizon = L2;
  gm.values.assign(n * L2, 0.0);
  gm.masked.assign(n * L2, 0);
  gm.estimator = "influence";
  gm.segments = L2;
  gm.eval_split = eval.split;
  gm.first_source = first.source_name;
  gm.second_source = second.source_name;
  gm.converged = solve.report.converged;

  const double scale = 1.0 / static_cast<double>(n);
  parallel_for(n, cfg.threads, [&](std::size_t i) {
    const auto jv = jacobian_vector_product(p, train.input(i), solve.x);
    const auto f = forward(p, train.input(i));
    const Matrix cross = loss_cross_hessian(LossKind::mse, f, first.label(i));
    for (std::size_t l = 0; l < L2; ++l) {
      const std::size_t k = i * L2 + l;
      const double delta = first.labels[k] - second.labels[k];
      const bool masked = mask ? mask->masks[k] != 0 : delta != 0.0;
      gm.masked[k] = masked ? 1 : 0;
      if (!masked || delta == 0.0) continue;
      double a = 0.0;
      for (std::size_t j = 0; j < L2; ++j) a += cross(j, l) * jv[j];
      gm.values[k] = -scale * a * delta;
    }
  });
  for (double v : gm.values)
    if (!std::isfinite(v)) throw NumericalError("influence estimate is not finite");
  return result;
}

std::vector<std::size_t> rank_discard(const GainMatrix& g, double percent) {
  if (g.samples == 0) throw DataError("rank_discard: empty gain matrix");
  if (!(percent > 0.0 && percent < 100.0)) throw UsageError("discard percent must lie in (0, 100)");
  const auto totals = g.sample_totals();
  std::vector<std::size_t> order(g.samples);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return totals[a] > totals[b]; });
  const auto count = static_cast<std::size_t>(std::ceil(percent / 100.0 * static_cast<double>(g.samples) - 1e-9));
  order.resize(std::max<std::size_t>(1, count));
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace taskimp
