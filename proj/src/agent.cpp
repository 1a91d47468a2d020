#include "pushsort/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pushsort {

std::string to_string(TargetMode mode) {
  switch (mode) {
    case TargetMode::StoredLabel: return "stored_label";
    case TargetMode::OnlineMax: return "online_max";
    case TargetMode::TargetMax: return "target_max";
    case TargetMode::Double: return "double";
  }
  return "double";
}

TargetMode target_mode_from_string(const std::string& name) {
  if (name == "stored_label") return TargetMode::StoredLabel;
  if (name == "online_max") return TargetMode::OnlineMax;
  if (name == "target_max") return TargetMode::TargetMax;
  if (name == "double") return TargetMode::Double;
  throw std::invalid_argument("unknown target mode '" + name + "'");
}

std::string to_string(GammaSchedule schedule) {
  return schedule == GammaSchedule::Static ? "static" : "ramp_on_sync";
}

GammaSchedule gamma_schedule_from_string(const std::string& name) {
  if (name == "static") return GammaSchedule::Static;
  if (name == "ramp_on_sync") return GammaSchedule::RampOnSync;
  throw std::invalid_argument("unknown gamma schedule '" + name + "'");
}

bool needs_target_network(TargetMode mode) {
  return mode == TargetMode::TargetMax || mode == TargetMode::Double;
}

std::size_t masked_argmax(std::span<const double> q, std::span<const double> mask) {
  if (q.empty()) throw std::invalid_argument("masked_argmax: empty map");
  if (!mask.empty() && mask.size() != q.size()) {
    throw std::invalid_argument("masked_argmax: mask shape mismatch");
  }
  std::size_t best = 0;
  double best_v = mask.empty() ? q[0] : q[0] + mask[0];
  for (std::size_t i = 1; i < q.size(); ++i) {
    const double v = mask.empty() ? q[i] : q[i] + mask[i];
    if (v > best_v) {
      best_v = v;
      best = i;
    }
  }
  return best;
}

bool bootstraps(const Experience& exp, TargetMode mode, bool bootstrap_only_on_change) {
  if (exp.terminal || mode == TargetMode::StoredLabel) return false;
  if (bootstrap_only_on_change && !exp.changed) return false;
  return true;
}

double compute_target(const Experience& exp, TargetMode mode, bool bootstrap_only_on_change,
                      double gamma, const BootstrapMaps& maps) {
  if (exp.terminal) return exp.reward;
  if (mode == TargetMode::StoredLabel) {
    if (!exp.stored_label) throw std::logic_error("compute_target: experience has no stored label");
    return *exp.stored_label;
  }
  if (bootstrap_only_on_change && !exp.changed) return exp.reward;
  switch (mode) {
    case TargetMode::OnlineMax:
      return exp.reward + gamma * maps.online[masked_argmax(maps.online, maps.additive_mask)];
    case TargetMode::TargetMax:
      if (maps.target.empty()) throw std::logic_error("compute_target: target network required");
      return exp.reward + gamma * *std::max_element(maps.target.begin(), maps.target.end());
    case TargetMode::Double:
      if (maps.target.empty()) throw std::logic_error("compute_target: target network required");
      return exp.reward + gamma * maps.target[masked_argmax(maps.online, maps.additive_mask)];
    case TargetMode::StoredLabel:
      break;
  }
  return exp.reward;
}

double gamma_at(std::int64_t iteration, std::int64_t completed_syncs, const AgentConfig& cfg) {
  if (iteration < 0) throw std::invalid_argument("gamma_at: negative iteration");
  if (cfg.gamma_schedule == GammaSchedule::Static) return cfg.gamma_final;
  if (cfg.gamma_ramp_iterations <= 0) return cfg.gamma_final;
  const double progress = static_cast<double>(completed_syncs) * cfg.target_sync_period /
                          static_cast<double>(cfg.gamma_ramp_iterations);
  return cfg.gamma_final * std::min(1.0, progress);
}

double epsilon_at(std::int64_t iteration, const AgentConfig& cfg) {
  if (cfg.epsilon_ramp_steps <= 0 || iteration >= cfg.epsilon_ramp_steps) return cfg.epsilon_end;
  const double t = static_cast<double>(std::max<std::int64_t>(iteration, 0)) /
                   static_cast<double>(cfg.epsilon_ramp_steps);
  return cfg.epsilon_start + t * (cfg.epsilon_end - cfg.epsilon_start);
}

int exploration_kernel_for(int push_length) { return 2 * ((push_length + 1) / 2) + 1; }

std::vector<std::uint8_t> exploration_mask(const Heightmap& map, int kernel) {
  constexpr double kObjectThreshold = 0.01;
  const int g = map.size();
  const int half = (kernel - 1) / 2;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(g * g), 0);
  for (int r = 0; r < g; ++r) {
    for (int c = 0; c < g; ++c) {
      if (map.at(r, c) <= kObjectThreshold) continue;
      for (int dr = -half; dr <= half; ++dr) {
        for (int dc = -half; dc <= half; ++dc) {
          const int rr = r + dr;
          const int cc = c + dc;
          if (rr >= 0 && rr < g && cc >= 0 && cc < g) mask[static_cast<std::size_t>(rr * g + cc)] = 1;
        }
      }
    }
  }
  return mask;
}

std::size_t explore_action(std::span<const std::uint8_t> expl_mask, const ActionCodec& codec,
                           std::mt19937_64& rng) {
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < expl_mask.size(); ++i) {
    if (expl_mask[i]) cells.push_back(i);
  }
  if (cells.empty()) {
    std::uniform_int_distribution<std::size_t> any(0, codec.size() - 1);
    return any(rng);
  }
  std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
  const std::size_t cell = cells[pick(rng)];
  std::uniform_int_distribution<int> orient(0, codec.orientations() - 1);
  return static_cast<std::size_t>(orient(rng)) * codec.cells() + cell;
}

std::size_t exploit_action(std::span<const double> qmap, std::span<const double> additive_mask,
                           UcbState& ucb, double c, const ActionCodec& codec) {
  if (qmap.size() != codec.size()) throw std::invalid_argument("exploit_action: qmap shape");
  const auto k_count = static_cast<std::size_t>(codec.orientations());
  if (ucb.counts.size() != k_count) ucb.counts.assign(k_count, 0);
  const std::size_t cells = codec.cells();

  std::vector<std::size_t> best_cell(k_count);
  std::vector<double> best_value(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const auto q = qmap.subspan(k * cells, cells);
    const auto m = additive_mask.empty() ? additive_mask : additive_mask.subspan(k * cells, cells);
    best_cell[k] = masked_argmax(q, m);
    best_value[k] = m.empty() ? q[best_cell[k]] : q[best_cell[k]] + m[best_cell[k]];
  }

  std::size_t chosen = 0;
  if (c == 0.0) {
    for (std::size_t k = 1; k < k_count; ++k) {
      if (best_value[k] > best_value[chosen]) chosen = k;
    }
  } else {
    const auto unvisited = std::find(ucb.counts.begin(), ucb.counts.end(), 0);
    if (unvisited != ucb.counts.end()) {
      chosen = static_cast<std::size_t>(unvisited - ucb.counts.begin());
    } else {
      const double log_t = std::log(static_cast<double>(ucb.t));
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < k_count; ++k) {
        const double score =
            best_value[k] + c * std::sqrt(log_t / static_cast<double>(ucb.counts[k]));
        if (score > best) {
          best = score;
          chosen = k;
        }
      }
    }
  }
  ++ucb.counts[chosen];
  ++ucb.t;
  return chosen * cells + best_cell[chosen];
}

Selection select_action(std::span<const double> qmap, std::span<const double> additive_mask,
                        UcbState& ucb, double c, double epsilon, std::mt19937_64& rng,
                        std::span<const std::uint8_t> expl_mask, const ActionCodec& codec) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < epsilon) return {explore_action(expl_mask, codec, rng), true};
  return {exploit_action(qmap, additive_mask, ucb, c, codec), false};
}

// ---------------------------------------------------------------- QLearner

QLearner::QLearner(const AgentConfig& cfg, const NetSpec& net, int grid_size,
                   std::uint64_t init_seed, std::optional<ChangeMask> mask)
    : cfg_(cfg),
      online_(net, grid_size, init_seed),
      mask_(std::move(mask)),
      sgd_(cfg.sgd, online_.parameter_count()),
      grads_(online_.parameter_count(), 0.0) {
  if (needs_target_network(cfg.target_mode)) target_ = online_;
}

std::vector<double> QLearner::mask_for(const Heightmap& state) const {
  if (!mask_) return {};
  return mask_->additive(state);
}

double QLearner::label_for(const Experience& exp, TargetMode mode, double gamma) const {
  if (!bootstraps(exp, mode, cfg_.bootstrap_only_on_change)) {
    return compute_target(exp, mode, cfg_.bootstrap_only_on_change, gamma, {});
  }
  const Tensor online_next = online_.forward(exp.next_state);
  std::optional<Tensor> target_next;
  if (needs_target_network(mode)) {
    if (!target_) throw std::logic_error("QLearner: target network missing");
    target_next = target_->forward(exp.next_state);
  }
  std::vector<double> mask;
  if (mode != TargetMode::TargetMax) mask = mask_for(exp.next_state);
  BootstrapMaps maps{online_next.values(),
                     target_next ? target_next->values() : std::span<const double>{}, mask};
  return compute_target(exp, mode, cfg_.bootstrap_only_on_change, gamma, maps);
}

TrainReport QLearner::train_step(std::span<const SampledExperience> batch,
                                 RankPrioritizedBuffer& buffer, double gamma, bool train_mask) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  TrainReport report;
  report.gamma_used = gamma;
  report.max_pred_q = -std::numeric_limits<double>::infinity();

  std::vector<double> targets(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    targets[i] = target_for(*batch[i].experience, gamma);
  }

  std::fill(grads_.begin(), grads_.end(), 0.0);
  Tensor grad_out(online_.output_shape());
  bool finite = true;
  double loss_sum = 0.0;
  double td_sum = 0.0;
  std::vector<double> deltas(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Experience& exp = *batch[i].experience;
    const auto trace = online_.forward_trace(normalize_heightmap(exp.state));
    const double pred = trace.output()[exp.action];
    const LossValue l = regression_loss(cfg_.loss, pred, targets[i]);
    deltas[i] = td_error(pred, targets[i]);
    loss_sum += l.loss;
    td_sum += std::abs(deltas[i]);
    report.max_pred_q = std::max(report.max_pred_q, pred);
    finite = finite && std::isfinite(pred) && std::isfinite(l.loss);
    grad_out.fill(0.0);
    grad_out[exp.action] = l.grad;
    online_.backward(trace, grad_out, grads_);
  }
  const StepReport step = sgd_.step(online_.parameters(), grads_);
  finite = finite && step.applied && all_finite(online_.parameters());

  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (std::isfinite(deltas[i])) buffer.update_priority(batch[i].handle, deltas[i]);
  }

  if (train_mask && mask_) {
    std::vector<MaskSample> samples;
    samples.reserve(batch.size());
    for (const auto& b : batch) {
      samples.push_back({&b.experience->state, b.experience->action, b.experience->changed});
    }
    report.mask_loss = mask_->train_step(samples);
  }

  const double n = static_cast<double>(batch.size());
  report.loss = loss_sum / n;
  report.mean_abs_td = td_sum / n;
  report.diverged = !finite || report.max_pred_q > cfg_.divergence_threshold;
  return report;
}

void QLearner::sync_target() {
  if (target_) target_->set_parameters(online_.parameters());
}

}  // namespace pushsort
