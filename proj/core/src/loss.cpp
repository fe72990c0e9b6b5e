#include "taskimp/loss.hpp"

#include <string>

#include "taskimp/dual.hpp"
#include "taskimp/errors.hpp"

namespace taskimp {

namespace {

template <class T>
void mse_gradient(std::span<const T> f, std::span<const T> y, std::span<T> out) {
  const double scale = 2.0 / static_cast<double>(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) out[j] = (f[j] - y[j]) * T(scale);
}

}  // namespace

LossKind parse_loss(std::string_view name) {
  if (name == "mse") return LossKind::mse;
  throw UsageError("unsupported loss '" + std::string(name) +
                   "': the estimators implement the MSE second derivative only");
}

LossValue mse_loss(std::span<const double> f, std::span<const double> y) {
  if (f.size() != y.size() || f.empty()) throw DataError("loss: length mismatch");
  LossValue out;
  out.grad_output.resize(f.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) sum += (f[j] - y[j]) * (f[j] - y[j]);
  out.value = sum / static_cast<double>(f.size());
  mse_gradient<double>(f, y, out.grad_output);
  return out;
}

Matrix loss_cross_hessian(LossKind kind, std::span<const double> f, std::span<const double> y) {
  if (kind != LossKind::mse) throw UsageError("loss_cross_hessian: unsupported loss");
  if (f.size() != y.size()) throw DataError("loss: length mismatch");
  const std::size_t n = f.size();
  Matrix c(n, n);
  std::vector<Dual> fd(f.begin(), f.end());
  std::vector<Dual> yd(y.begin(), y.end());
  std::vector<Dual> g(n);
  for (std::size_t l = 0; l < n; ++l) {
    yd[l].d = 1.0;
    mse_gradient<Dual>(fd, yd, g);
    for (std::size_t j = 0; j < n; ++j) c(j, l) = g[j].d;
    yd[l].d = 0.0;
  }
  return c;
}

}  // namespace taskimp
