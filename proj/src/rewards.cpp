#include "pushsort/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pushsort {

std::string to_string(RewardVariant v) {
  switch (v) {
    case RewardVariant::ThesisComposite: return "composite";
    case RewardVariant::VpgPush: return "vpg";
    case RewardVariant::HourglassDistance: return "hourglass";
  }
  return "composite";
}

RewardVariant reward_variant_from_string(const std::string& name) {
  if (name == "composite") return RewardVariant::ThesisComposite;
  if (name == "vpg") return RewardVariant::VpgPush;
  if (name == "hourglass") return RewardVariant::HourglassDistance;
  throw std::invalid_argument("unknown reward variant '" + name + "'");
}

double thesis_reward(bool changed, int newly_sorted, bool reached_goal, const RewardConfig& cfg) {
  if (newly_sorted < 0) throw std::invalid_argument("thesis_reward: negative newly_sorted");
  double r = 0.0;
  if (reached_goal) r += cfg.goal_reward;
  r += cfg.subgoal_g * newly_sorted;
  if (!changed) r += cfg.change_penalty;
  return r;
}

double vpg_push_reward(bool changed, const RewardConfig& cfg) {
  return changed ? cfg.vpg_push_reward : 0.0;
}

double goal_distance(const Scene& scene, const ObjectSpec& obj) {
  if (obj.kind == ObjectKind::CubeA) {
    return static_cast<double>(std::max(0, obj.col - (scene.goal_width - 1)));
  }
  return static_cast<double>(std::max(0, (scene.grid_size - scene.goal_width) - obj.col));
}

double mean_goal_distance(const Scene& scene, int population) {
  if (population <= 0) return 0.0;
  double sum = 0.0;
  for (const auto& obj : scene.objects) sum += goal_distance(scene, obj);
  return sum / population;
}

double hourglass_distance_reward(const Scene& before, const Scene& after, int newly_sorted,
                                 bool fell_off, const RewardConfig& cfg) {
  if (fell_off) return 0.0;
  const int population = static_cast<int>(before.objects.size());
  const double delta =
      mean_goal_distance(before, population) - mean_goal_distance(after, population);
  return std::max(0.0, delta) + cfg.in_box_factor * newly_sorted;
}

double q_identity_check(double gamma, int n) {
  if (n < 0) throw std::invalid_argument("q_identity_check: n must be non-negative");
  double sum = 0.0;
  double g = 1.0;
  for (int i = 0; i < n; ++i) {
    sum += g * 0.5;
    g *= gamma;
  }
  return sum + g;
}

double compute_reward(const RewardConfig& cfg, const Scene& before, const Scene& after,
                      bool changed, int newly_sorted, bool reached_goal) {
  switch (cfg.variant) {
    case RewardVariant::ThesisComposite:
      return thesis_reward(changed, newly_sorted, reached_goal, cfg);
    case RewardVariant::VpgPush:
      return vpg_push_reward(changed, cfg);
    case RewardVariant::HourglassDistance:
      return hourglass_distance_reward(before, after, newly_sorted, false, cfg);
  }
  return 0.0;
}

}  // namespace pushsort
