#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "taskimp/matrix.hpp"

namespace taskimp {

// Only mean-squared error is supported by the estimators; other names are
// rejected by parse_loss.
enum class LossKind { mse };
LossKind parse_loss(std::string_view name);

struct LossValue {
  double value = 0.0;
  std::vector<double> grad_output;  // dL/df, length L2
};

// value = (1/L2) sum (f_j - y_j)^2, grad_output = (2/L2)(f - y).
LossValue mse_loss(std::span<const double> f, std::span<const double> y);

// Mixed second derivative C with C(j, l) = d^2 L / (d f_j d y_l), obtained by
// differentiating the loss gradient with respect to each label through dual
// numbers. For MSE this is -(2/L2) I.
Matrix loss_cross_hessian(LossKind kind, std::span<const double> f, std::span<const double> y);

}  // namespace taskimp
