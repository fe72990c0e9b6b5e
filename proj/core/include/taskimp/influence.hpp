#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "taskimp/gain.hpp"

namespace taskimp {

struct InfluenceConfig {
  double damping = 0.01;
  std::size_t cg_max_iters = 500;
  double cg_tolerance = 1e-6;  // bound on the true residual norm ||(H + damping I) v - b||
  int threads = 1;

  void validate() const;
};

struct CgReport {
  bool converged = false;
  std::size_t iterations = 0;
  double residual_norm = 0.0;
  std::string message;
};

struct CgResult {
  std::vector<double> x;
  CgReport report;
};

// Conjugate gradients for a symmetric operator. Stops when the recomputed
// residual norm is at most `tolerance`, on non-positive curvature, or after
// `max_iters` steps. The reported residual is always the true one.
CgResult conjugate_gradient(const std::function<void(std::span<const double>, std::span<double>)>& apply,
                            std::span<const double> b, std::size_t max_iters, double tolerance);

// Damped Hessian of the mean training loss under `labels`, applied to v.
std::vector<double> training_hessian_product(const ModelParams& p, const SampleSet& train,
                                             std::span<const double> labels, std::span<const double> v,
                                             double damping, int threads = 1);

struct InfluenceResult {
  GainMatrix gain;  // estimator "influence"; converged mirrors the CG outcome
  CgReport cg;
};

// Label-perturbation influence with a damped Hessian:
//   I(i,l) = -(1/n) (J_i v)^T C_i[:, l] (y1_il - y2_il),   (H + damping I) v = G
// where G is the summed evaluation-loss gradient and H the Hessian of the
// mean training loss on y1. Sign convention matches the kernel estimators.
InfluenceResult estimate_influence(const ModelParams& p, const SampleSet& train, const ImputationSet& first,
                                   const ImputationSet& second, const SampleSet& eval,
                                   const InfluenceConfig& cfg = {}, const MaskSet* mask = nullptr);

// Indices of the ceil(percent% * n) samples whose aggregate gain is largest,
// that is, where moving away from the first label set helps most. Ties go to
// the lower index. Result is sorted ascending.
std::vector<std::size_t> rank_discard(const GainMatrix& g, double percent);

}  // namespace taskimp
