#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "taskimp/dims.hpp"
#include "taskimp/matrix.hpp"
#include "taskimp/projector.hpp"

namespace taskimp {

// Fully connected ReLU network over the flattened (D*L1) input. `layers`
// counts linear maps, so the default is input->128->128->L2.
struct MlpArch {
  std::size_t layers = 3;
  std::size_t hidden = 128;
  friend bool operator==(const MlpArch&, const MlpArch&) = default;
};

// Moving-average decomposition per channel (odd kernel, edge replication),
// shared seasonal and trend linear maps L1->L2, summed. With
// output_projection the D channel forecasts are mixed by a D->1 linear layer;
// without it D must be 1.
struct DLinearArch {
  std::size_t kernel = 25;
  bool output_projection = false;
  friend bool operator==(const DLinearArch&, const DLinearArch&) = default;
};

using Architecture = std::variant<MlpArch, DLinearArch>;

std::string describe(const Architecture& arch);
void validate(const Architecture& arch, const Dims& dims);
std::size_t parameter_count(const Architecture& arch, const Dims& dims);

// Flat parameter vector theta plus the architecture it belongs to.
class ModelParams {
 public:
  ModelParams(Architecture arch, Dims dims, std::vector<double> theta);

  const Architecture& arch() const { return arch_; }
  const Dims& dims() const { return dims_; }
  std::span<const double> theta() const { return theta_; }
  std::span<double> mutable_theta() { return theta_; }
  std::size_t size() const { return theta_.size(); }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  Architecture arch_;
  Dims dims_;
  std::vector<double> theta_;
};

// Weights uniform in +-1/sqrt(fan_in), biases zero.
ModelParams init_params(const Architecture& arch, const Dims& dims, std::uint64_t seed);

// Caches one forward pass so several vector-Jacobian products can reuse it.
// Not thread-safe; use one evaluator per thread.
class ModelEvaluator {
 public:
  explicit ModelEvaluator(const ModelParams& params);
  ~ModelEvaluator();
  ModelEvaluator(ModelEvaluator&&) noexcept;
  ModelEvaluator& operator=(ModelEvaluator&&) noexcept;

  std::span<const double> forward(std::span<const double> x);
  // grad = J^T seed for the last forward input; overwrites grad.
  void vjp(std::span<const double> seed, std::span<double> grad);
  // MSE loss gradient for the last forward input.
  void loss_grad(std::span<const double> y, std::span<double> grad);

  const ModelParams& params() const { return *params_; }

 private:
  struct Impl;
  const ModelParams* params_;
  std::unique_ptr<Impl> impl_;
};

std::vector<double> forward(const ModelParams& p, std::span<const double> x);

// MSE of one sample.
double sample_loss(const ModelParams& p, std::span<const double> x, std::span<const double> y);

// Exact gradient of the MSE loss with respect to theta.
std::vector<double> param_grad(const ModelParams& p, std::span<const double> x,
                               std::span<const double> y);

// Row s is the gradient of the s-th segment-averaged output (r x P).
Matrix output_jacobian(const ModelParams& p, std::span<const double> x, const SegmentProjector& proj);
// Full per-output Jacobian (L2 x P).
Matrix output_jacobian(const ModelParams& p, std::span<const double> x);

// J_a J_b^T with both Jacobians taken through the projector (r x r).
Matrix ntk(const ModelParams& p, std::span<const double> xa, std::span<const double> xb,
           const SegmentProjector& proj);

// J v through one forward pass on dual numbers.
std::vector<double> jacobian_vector_product(const ModelParams& p, std::span<const double> x,
                                            std::span<const double> v);

// Exact Hessian of the sample's MSE loss times v (forward-over-reverse).
std::vector<double> hessian_vector_product(const ModelParams& p, std::span<const double> x,
                                           std::span<const double> y, std::span<const double> v);

// Text checkpoint: a header line describing arch/dims followed by one
// hexadecimal float per line, so the round trip is bit-exact.
void save_params(const std::filesystem::path& path, const ModelParams& p);
ModelParams load_params(const std::filesystem::path& path);

}  // namespace taskimp
