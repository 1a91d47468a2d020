#include "pushsort/maskchange.hpp"

#include <stdexcept>

#include "pushsort/action_space.hpp"
#include "pushsort/losses.hpp"

namespace pushsort {

std::vector<std::uint8_t> heuristic_labels(const Heightmap& map, int orientations,
                                           double depth_threshold) {
  const int g = map.size();
  const auto cells = static_cast<std::size_t>(g) * static_cast<std::size_t>(g);
  std::vector<std::uint8_t> labels(cells * static_cast<std::size_t>(orientations), 0);
  for (int k = 0; k < orientations; ++k) {
    const Direction d = orientation_direction(k);
    for (int r = 0; r < g; ++r) {
      for (int c = 0; c < g; ++c) {
        const double probe = map.at_or_zero(r + d.drow, c + d.dcol);
        if (probe - map.at(r, c) > depth_threshold) {
          labels[static_cast<std::size_t>(k) * cells + static_cast<std::size_t>(r * g + c)] = 1;
        }
      }
    }
  }
  return labels;
}

std::vector<double> additive_mask(std::span<const double> probs, double tau, double sentinel) {
  std::vector<double> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) out[i] = probs[i] < tau ? sentinel : 0.0;
  return out;
}

std::vector<double> apply_mask(std::span<const double> qmap, std::span<const double> probs,
                               double tau, double sentinel) {
  if (qmap.size() != probs.size()) throw std::invalid_argument("apply_mask: shape mismatch");
  std::vector<double> out(qmap.begin(), qmap.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (probs[i] < tau) out[i] += sentinel;
  }
  return out;
}

ChangeMask::ChangeMask(const NetSpec& body, int grid_size, std::uint64_t seed, MaskConfig cfg)
    : net_([&] {
        NetSpec s = body;
        s.head = Head::FullRes;
        s.sigmoid_output = true;
        return ConvNet(s, grid_size, seed);
      }()),
      adam_(cfg.adam, net_.parameter_count()),
      cfg_(cfg),
      grads_(net_.parameter_count(), 0.0) {}

std::vector<double> ChangeMask::additive(const Heightmap& map) const {
  const Tensor p = probabilities(map);
  return additive_mask(p.values(), cfg_.tau, cfg_.sentinel);
}

double ChangeMask::train_step(std::span<const MaskSample> batch) {
  if (batch.empty()) throw std::invalid_argument("ChangeMask::train_step: empty batch");
  std::fill(grads_.begin(), grads_.end(), 0.0);
  double total = 0.0;
  Tensor grad_out(net_.output_shape());
  for (const auto& s : batch) {
    const auto trace = net_.forward_trace(normalize_heightmap(*s.state));
    const double p = trace.output()[s.action];
    const LossValue l = bce_loss(p, s.changed ? 1.0 : 0.0);
    total += l.loss;
    grad_out.fill(0.0);
    grad_out[s.action] = l.grad;
    net_.backward(trace, grad_out, grads_);
  }
  adam_.step(net_.parameters(), grads_);
  return total / static_cast<double>(batch.size());
}

}  // namespace pushsort
