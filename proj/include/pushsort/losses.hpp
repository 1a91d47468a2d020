#pragma once

#include <string>

namespace pushsort {

struct LossValue {
  double loss;
  /// d(loss)/d(pred)
  double grad;
};

/// 0.5 d^2 for |d| < 1, |d| - 0.5 otherwise, with d = pred - target.
LossValue huber_loss(double pred, double target);

/// (pred - target)^2
LossValue mse_loss(double pred, double target);

/// Binary cross entropy; pred is clamped to [1e-7, 1 - 1e-7].
LossValue bce_loss(double pred, double label);

enum class LossKind { Huber, MSE };

std::string to_string(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);

LossValue regression_loss(LossKind kind, double pred, double target);

}  // namespace pushsort
