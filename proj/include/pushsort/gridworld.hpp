#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "pushsort/action_space.hpp"
#include "pushsort/rewards.hpp"
#include "pushsort/scene.hpp"

namespace pushsort {

/// Grid environment parameters. Negative values mean "derive from grid_size"
/// by scaling the 0.4 m table onto G cells.
struct EnvConfig {
  int grid_size = 28;
  int goal_width = -1;    // round(G * 10 cm / 40 cm)
  int push_length = -1;   // round(G * 5 cm / 40 cm)
  int center_rows = -1;   // floor(G * 32 cm / 40 cm)
  int center_cols = -1;   // floor(G * 15 cm / 40 cm)
  double marker_depth = 0.005;
  double change_tau = 0.0;
  int step_limit = 60;
  int step_extension = 20;
  int max_no_change = 5;

  int resolved_goal_width() const;
  int resolved_push_length() const;
  int resolved_center_rows() const;
  int resolved_center_cols() const;
};

struct CenterRegion {
  int row_begin;
  int row_end;
  int col_begin;
  int col_end;

  int cells() const { return (row_end - row_begin) * (col_end - col_begin); }
  bool contains(int r, int c) const {
    return r >= row_begin && r < row_end && c >= col_begin && c < col_end;
  }
};

CenterRegion center_region(const EnvConfig& cfg);

/// Scene with the configured grid and goal layout but no objects.
Scene empty_scene(const EnvConfig& cfg);

/// Random placement inside the center region; objects landing in their own goal
/// region are removed immediately. Deterministic in `seed`.
Scene generate_scene(std::uint64_t seed, int n_type_a, int n_type_b, const EnvConfig& cfg);
Scene generate_scene(std::uint64_t seed, std::span<const ObjectKind> kinds, const EnvConfig& cfg);

struct PushResult {
  Scene scene;
  int newly_sorted = 0;
};

/// Pusher sweep: the pusher is lowered at the action cell and advances
/// push_length cells along the orientation. Entering an occupied cell shifts the
/// whole contiguous chain ahead of it by one cell; a chain that would leave the
/// grid stops the pusher. A pusher lowered onto an object does nothing.
/// Objects ending in their own goal region are removed afterwards.
PushResult apply_push(const Scene& scene, const Action& action, int push_length);

enum class TerminationCause { None, Goal, StuckNoChange, StepLimit };

std::string to_string(TerminationCause cause);
TerminationCause termination_cause_from_string(const std::string& name);

/// Goal > StuckNoChange > StepLimit.
TerminationCause check_termination(const Scene& scene, int steps_taken, int consecutive_no_change,
                                   const EnvConfig& cfg);

struct StepOutcome {
  Heightmap next_state;
  double reward = 0.0;
  bool changed = false;
  int newly_sorted = 0;
  bool done = false;
  TerminationCause termination_cause = TerminationCause::None;

  /// Only the goal state is an MDP terminal; the other causes are truncations.
  bool terminal() const { return termination_cause == TerminationCause::Goal; }
  bool truncated() const { return done && !terminal(); }
};

/// One episode on a scene: owns the scene and the termination counters.
class Episode {
 public:
  Episode(Scene scene, EnvConfig env, RewardConfig rewards);

  const Scene& scene() const { return scene_; }
  const Heightmap& observation() const { return observation_; }
  bool done() const { return cause_ != TerminationCause::None; }
  TerminationCause cause() const { return cause_; }
  int steps_taken() const { return steps_; }
  int no_change_streak() const { return no_change_streak_; }
  const EnvConfig& env_config() const { return env_; }

  StepOutcome step(const Action& action);

  /// Rebuilds an in-progress episode (checkpoint resume).
  static Episode restore(Scene scene, EnvConfig env, RewardConfig rewards, int steps_taken,
                         int no_change_streak);

 private:
  Scene scene_;
  EnvConfig env_;
  RewardConfig rewards_;
  Heightmap observation_;
  int steps_ = 0;
  int no_change_streak_ = 0;
  TerminationCause cause_ = TerminationCause::None;
};

}  // namespace pushsort
