#include "pushsort/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pushsort {

LossValue huber_loss(double pred, double target) {
  const double d = pred - target;
  if (std::abs(d) < 1.0) return {0.5 * d * d, d};
  return {std::abs(d) - 0.5, d > 0.0 ? 1.0 : -1.0};
}

LossValue mse_loss(double pred, double target) {
  const double d = pred - target;
  return {d * d, 2.0 * d};
}

LossValue bce_loss(double pred, double label) {
  constexpr double kClamp = 1e-7;
  const double p = std::clamp(pred, kClamp, 1.0 - kClamp);
  const double loss = -label * std::log(p) - (1.0 - label) * std::log(1.0 - p);
  const double grad = -label / p + (1.0 - label) / (1.0 - p);
  return {loss, grad};
}

std::string to_string(LossKind kind) { return kind == LossKind::Huber ? "huber" : "mse"; }

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "huber") return LossKind::Huber;
  if (name == "mse") return LossKind::MSE;
  throw std::invalid_argument("unknown loss '" + name + "'");
}

LossValue regression_loss(LossKind kind, double pred, double target) {
  return kind == LossKind::Huber ? huber_loss(pred, target) : mse_loss(pred, target);
}

}  // namespace pushsort
