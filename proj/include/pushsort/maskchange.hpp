#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pushsort/conv_net.hpp"
#include "pushsort/optim.hpp"
#include "pushsort/scene.hpp"

namespace pushsort {

struct MaskConfig {
  double tau = 0.14;
  double sentinel = -1e9;
  double depth_threshold = 0.01;
  AdamConfig adam{};
};

/// Grid analog of the edge heuristic: (k, r, c) is a valid push when the cell one
/// step along orientation k stands higher than (r, c) by more than
/// `depth_threshold`. Off-grid probes read as table surface. Result is K x G x G
/// in flat action order.
std::vector<std::uint8_t> heuristic_labels(const Heightmap& map, int orientations,
                                           double depth_threshold = 0.01);

/// 0 where prob >= tau, sentinel elsewhere.
std::vector<double> additive_mask(std::span<const double> probs, double tau, double sentinel);

/// qmap + additive_mask(probs). Only for action choice, never for regressed values.
std::vector<double> apply_mask(std::span<const double> qmap, std::span<const double> probs,
                               double tau, double sentinel);

struct MaskSample {
  const Heightmap* state;
  std::size_t action;
  bool changed;
};

/// Change predictor: FullRes body with sigmoid output, trained with per-action BCE.
class ChangeMask {
 public:
  ChangeMask(const NetSpec& body, int grid_size, std::uint64_t seed, MaskConfig cfg = {});

  Tensor probabilities(const Heightmap& map) const { return net_.forward(map); }
  std::vector<double> additive(const Heightmap& map) const;

  /// One Adam step on the summed BCE of the taken actions; returns the mean BCE.
  double train_step(std::span<const MaskSample> batch);

  const MaskConfig& config() const { return cfg_; }
  ConvNet& net() { return net_; }
  const ConvNet& net() const { return net_; }
  Adam& optimizer() { return adam_; }
  const Adam& optimizer() const { return adam_; }

 private:
  ConvNet net_;
  Adam adam_;
  MaskConfig cfg_;
  std::vector<double> grads_;
};

}  // namespace pushsort
