#include "pushsort/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pushsort {

double global_norm(std::span<const double> values) {
  double sq = 0.0;
  for (double v : values) sq += v * v;
  return std::sqrt(sq);
}

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

SgdMomentum::SgdMomentum(SgdConfig cfg, std::size_t parameter_count)
    : cfg_(cfg), velocity_(parameter_count, 0.0) {}

void SgdMomentum::set_velocity(std::span<const double> v) {
  if (v.size() != velocity_.size()) throw std::invalid_argument("set_velocity: size mismatch");
  std::copy(v.begin(), v.end(), velocity_.begin());
}

StepReport SgdMomentum::step(std::span<double> params, std::span<double> grads) {
  if (params.size() != grads.size() || params.size() != velocity_.size()) {
    throw std::invalid_argument("SgdMomentum::step: shape mismatch");
  }
  StepReport report;
  if (!all_finite(grads)) return report;
  for (std::size_t i = 0; i < grads.size(); ++i) grads[i] += cfg_.weight_decay * params[i];
  report.grad_norm = global_norm(grads);
  report.clipped_norm = report.grad_norm;
  if (cfg_.clip_norm > 0.0 && report.grad_norm > cfg_.clip_norm) {
    const double scale = cfg_.clip_norm / report.grad_norm;
    for (double& g : grads) g *= scale;
    report.clipped_norm = global_norm(grads);
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    velocity_[i] = cfg_.momentum * velocity_[i] + grads[i];
    params[i] -= cfg_.learning_rate * velocity_[i];
  }
  report.applied = true;
  return report;
}

Adam::Adam(AdamConfig cfg, std::size_t parameter_count)
    : cfg_(cfg), m_(parameter_count, 0.0), v_(parameter_count, 0.0) {}

void Adam::restore(std::span<const double> m, std::span<const double> v, std::int64_t t) {
  if (m.size() != m_.size() || v.size() != v_.size()) {
    throw std::invalid_argument("Adam::restore: size mismatch");
  }
  std::copy(m.begin(), m.end(), m_.begin());
  std::copy(v.begin(), v.end(), v_.begin());
  t_ = t;
}

StepReport Adam::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != grads.size() || params.size() != m_.size()) {
    throw std::invalid_argument("Adam::step: shape mismatch");
  }
  StepReport report;
  if (!all_finite(grads)) return report;
  report.grad_norm = report.clipped_norm = global_norm(grads);
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < grads.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grads[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grads[i] * grads[i];
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    params[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
  }
  report.applied = true;
  return report;
}

}  // namespace pushsort
