#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pushsort {

struct SgdConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double weight_decay = 2e-5;
  /// Global 2-norm bound; <= 0 disables clipping.
  double clip_norm = 10.0;
};

struct StepReport {
  /// False when the gradient was non-finite; parameters are then left untouched.
  bool applied = false;
  double grad_norm = 0.0;
  double clipped_norm = 0.0;
};

double global_norm(std::span<const double> values);
bool all_finite(std::span<const double> values);

/// SGD with momentum, L2 weight decay folded into the gradient, and global-norm clipping.
class SgdMomentum {
 public:
  SgdMomentum(SgdConfig cfg, std::size_t parameter_count);

  /// `grads` is used as scratch space.
  StepReport step(std::span<double> params, std::span<double> grads);

  const SgdConfig& config() const { return cfg_; }
  void set_learning_rate(double lr) { cfg_.learning_rate = lr; }
  std::span<const double> velocity() const { return velocity_; }
  void set_velocity(std::span<const double> v);
  void reset() { std::fill(velocity_.begin(), velocity_.end(), 0.0); }

 private:
  SgdConfig cfg_;
  std::vector<double> velocity_;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(AdamConfig cfg, std::size_t parameter_count);

  StepReport step(std::span<double> params, std::span<const double> grads);

  std::span<const double> first_moment() const { return m_; }
  std::span<const double> second_moment() const { return v_; }
  std::int64_t steps() const { return t_; }
  void restore(std::span<const double> m, std::span<const double> v, std::int64_t t);

 private:
  AdamConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::int64_t t_ = 0;
};

}  // namespace pushsort
