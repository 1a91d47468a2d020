#pragma once

#include "pushsort/scene.hpp"

namespace pushsort {

enum class RewardVariant { ThesisComposite, VpgPush, HourglassDistance };

std::string to_string(RewardVariant v);
RewardVariant reward_variant_from_string(const std::string& name);

struct RewardConfig {
  RewardVariant variant = RewardVariant::ThesisComposite;
  double goal_reward = 10.0;
  double subgoal_g = 2.0;
  double change_penalty = -0.5;
  double vpg_push_reward = 0.5;
  double in_box_factor = 10.0;
};

/// Goal bonus + g per newly sorted object + penalty for a push without change.
/// The three terms are summed independently.
double thesis_reward(bool changed, int newly_sorted, bool reached_goal, const RewardConfig& cfg);

double vpg_push_reward(bool changed, const RewardConfig& cfg);

/// Horizontal cell distance from an object to the nearest column of its goal region.
double goal_distance(const Scene& scene, const ObjectSpec& obj);

/// Sum of goal distances of the scene's objects divided by `population`.
/// Objects removed into their region count as distance zero, so both sides of a
/// transition use the pre-step object count as population.
double mean_goal_distance(const Scene& scene, int population);

/// max(0, d_before - d_after) + in_box_factor * newly_sorted; 0 when an object fell off.
double hourglass_distance_reward(const Scene& before, const Scene& after, int newly_sorted,
                                 bool fell_off, const RewardConfig& cfg);

/// sum_{i<n} gamma^i * 0.5 + gamma^n; equals 1 for every n when gamma = 0.5.
double q_identity_check(double gamma, int n);

/// Dispatches on cfg.variant.
double compute_reward(const RewardConfig& cfg, const Scene& before, const Scene& after,
                      bool changed, int newly_sorted, bool reached_goal);

}  // namespace pushsort
