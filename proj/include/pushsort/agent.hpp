#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "pushsort/action_space.hpp"
#include "pushsort/conv_net.hpp"
#include "pushsort/losses.hpp"
#include "pushsort/maskchange.hpp"
#include "pushsort/optim.hpp"
#include "pushsort/replay.hpp"

namespace pushsort {

enum class TargetMode { StoredLabel, OnlineMax, TargetMax, Double };
enum class GammaSchedule { Static, RampOnSync };

std::string to_string(TargetMode mode);
TargetMode target_mode_from_string(const std::string& name);
std::string to_string(GammaSchedule schedule);
GammaSchedule gamma_schedule_from_string(const std::string& name);

bool needs_target_network(TargetMode mode);

struct AgentConfig {
  double gamma_final = 0.99;
  GammaSchedule gamma_schedule = GammaSchedule::RampOnSync;
  int gamma_ramp_iterations = 10000;
  TargetMode target_mode = TargetMode::Double;
  /// Conditional label: pushes without change use y = r.
  bool bootstrap_only_on_change = false;
  int target_sync_period = 250;
  double epsilon_start = 0.9;
  double epsilon_end = 0.05;
  int epsilon_ramp_steps = 20000;
  int warmup_steps = 800;
  double ucb_c = 0.0;
  LossKind loss = LossKind::Huber;
  int batch_size = 15;
  int total_steps = 40000;
  double divergence_threshold = 44.0;
  /// Square dilation kernel for the exploration mask; 0 derives it from the push length.
  int exploration_kernel = 0;
  std::size_t replay_capacity = 2500;
  double replay_alpha = 2.0;
  SgdConfig sgd{};
};

/// Next-state maps an experience may bootstrap from. `target` is required for
/// TargetMax and Double; `additive_mask` (0 or sentinel per action) only steers
/// the argmax and may be empty.
struct BootstrapMaps {
  std::span<const double> online;
  std::span<const double> target;
  std::span<const double> additive_mask;
};

/// First index of the maximum of q + mask (mask may be empty).
std::size_t masked_argmax(std::span<const double> q, std::span<const double> additive_mask);

/// Regression label for one experience. Terminal experiences never bootstrap;
/// truncated ones do.
double compute_target(const Experience& exp, TargetMode mode, bool bootstrap_only_on_change,
                      double gamma, const BootstrapMaps& maps);

/// True when compute_target would read next-state maps for this experience.
bool bootstraps(const Experience& exp, TargetMode mode, bool bootstrap_only_on_change);

/// Piecewise-constant in the number of completed target syncs.
double gamma_at(std::int64_t iteration, std::int64_t completed_syncs, const AgentConfig& cfg);

/// Linear ramp from epsilon_start to epsilon_end, then constant.
double epsilon_at(std::int64_t iteration, const AgentConfig& cfg);

/// 2 * floor((L + 1) / 2) + 1
int exploration_kernel_for(int push_length);

/// Cells above 1 cm, dilated by a k x k max filter with zero padding.
std::vector<std::uint8_t> exploration_mask(const Heightmap& map, int kernel);

struct UcbState {
  std::vector<std::int64_t> counts;
  std::int64_t t = 0;

  explicit UcbState(int orientations = kDefaultOrientations)
      : counts(static_cast<std::size_t>(orientations), 0) {}
};

/// Uniform over mask-true cells with a uniform orientation; all actions when the
/// mask is empty.
std::size_t explore_action(std::span<const std::uint8_t> expl_mask, const ActionCodec& codec,
                           std::mt19937_64& rng);

/// Greedy choice over orientation subspaces with a UCB bonus
/// c * sqrt(ln t / N_i); unvisited orientations are taken first. Updates `ucb`.
std::size_t exploit_action(std::span<const double> qmap, std::span<const double> additive_mask,
                           UcbState& ucb, double c, const ActionCodec& codec);

struct Selection {
  std::size_t flat_index;
  bool explored;
};

/// epsilon-greedy wrapper: one uniform draw decides exploration.
Selection select_action(std::span<const double> qmap, std::span<const double> additive_mask,
                        UcbState& ucb, double c, double epsilon, std::mt19937_64& rng,
                        std::span<const std::uint8_t> expl_mask, const ActionCodec& codec);

struct TrainReport {
  double loss = 0.0;
  double mean_abs_td = 0.0;
  double gamma_used = 0.0;
  double max_pred_q = 0.0;
  double mask_loss = 0.0;
  bool diverged = false;
};

/// Online network, optional target network and change mask, and their optimizers.
class QLearner {
 public:
  QLearner(const AgentConfig& cfg, const NetSpec& net, int grid_size, std::uint64_t init_seed,
           std::optional<ChangeMask> mask);

  /// Raw online Q-map for a state.
  Tensor qmap(const Heightmap& state) const { return online_.forward(state); }
  /// Additive mask for a state; empty when no mask network is configured.
  std::vector<double> mask_for(const Heightmap& state) const;

  /// Label under the configured target mode.
  double target_for(const Experience& exp, double gamma) const {
    return label_for(exp, cfg_.target_mode, gamma);
  }
  /// Label under an explicit mode; stored-label experiences are labeled with
  /// label_for(exp, TargetMode::OnlineMax, gamma) when they are made.
  double label_for(const Experience& exp, TargetMode mode, double gamma) const;

  /// One gradient step on the batch; writes new |delta| back into `buffer`.
  TrainReport train_step(std::span<const SampledExperience> batch, RankPrioritizedBuffer& buffer,
                         double gamma, bool train_mask);

  void sync_target();

  const AgentConfig& config() const { return cfg_; }
  ConvNet& online() { return online_; }
  const ConvNet& online() const { return online_; }
  std::optional<ConvNet>& target() { return target_; }
  const std::optional<ConvNet>& target() const { return target_; }
  std::optional<ChangeMask>& mask() { return mask_; }
  const std::optional<ChangeMask>& mask() const { return mask_; }
  SgdMomentum& optimizer() { return sgd_; }
  const SgdMomentum& optimizer() const { return sgd_; }

 private:
  AgentConfig cfg_;
  ConvNet online_;
  std::optional<ConvNet> target_;
  std::optional<ChangeMask> mask_;
  SgdMomentum sgd_;
  std::vector<double> grads_;
};

}  // namespace pushsort
