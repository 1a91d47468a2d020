#include "pushsort/gridworld.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <fmt/format.h>

namespace pushsort {

namespace {
int scaled_round(int grid, double centimeters) {
  return static_cast<int>(std::lround(grid * centimeters / 40.0));
}
int scaled_floor(int grid, double centimeters) {
  return static_cast<int>(std::floor(grid * centimeters / 40.0));
}
}  // namespace

int EnvConfig::resolved_goal_width() const {
  return goal_width >= 0 ? goal_width : scaled_round(grid_size, 10.0);
}
int EnvConfig::resolved_push_length() const {
  return push_length >= 0 ? push_length : scaled_round(grid_size, 5.0);
}
int EnvConfig::resolved_center_rows() const {
  return center_rows >= 0 ? center_rows : scaled_floor(grid_size, 32.0);
}
int EnvConfig::resolved_center_cols() const {
  return center_cols >= 0 ? center_cols : scaled_floor(grid_size, 15.0);
}

CenterRegion center_region(const EnvConfig& cfg) {
  const int rows = cfg.resolved_center_rows();
  const int cols = cfg.resolved_center_cols();
  if (rows <= 0 || cols <= 0 || rows > cfg.grid_size || cols > cfg.grid_size) {
    throw std::invalid_argument("center region does not fit the grid");
  }
  const int r0 = (cfg.grid_size - rows) / 2;
  const int c0 = (cfg.grid_size - cols) / 2;
  return {r0, r0 + rows, c0, c0 + cols};
}

Scene empty_scene(const EnvConfig& cfg) {
  Scene scene;
  scene.grid_size = cfg.grid_size;
  scene.goal_width = cfg.resolved_goal_width();
  scene.marker_depth = cfg.marker_depth;
  validate_scene(scene);
  return scene;
}

Scene generate_scene(std::uint64_t seed, int n_type_a, int n_type_b, const EnvConfig& cfg) {
  if (n_type_a < 0 || n_type_b < 0) throw std::invalid_argument("negative object count");
  std::vector<ObjectKind> kinds(static_cast<std::size_t>(n_type_a), ObjectKind::CubeA);
  kinds.insert(kinds.end(), static_cast<std::size_t>(n_type_b), ObjectKind::CuboidB);
  return generate_scene(seed, kinds, cfg);
}

Scene generate_scene(std::uint64_t seed, std::span<const ObjectKind> kinds, const EnvConfig& cfg) {
  Scene scene = empty_scene(cfg);
  const CenterRegion region = center_region(cfg);
  if (static_cast<int>(kinds.size()) > region.cells()) {
    throw std::invalid_argument(fmt::format("{} objects do not fit a center region of {} cells",
                                            kinds.size(), region.cells()));
  }
  constexpr int kMaxAttemptsPerObject = 256;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> row_dist(region.row_begin, region.row_end - 1);
  std::uniform_int_distribution<int> col_dist(region.col_begin, region.col_end - 1);
  std::vector<char> used(static_cast<std::size_t>(cfg.grid_size * cfg.grid_size), 0);
  for (ObjectKind kind : kinds) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttemptsPerObject && !placed; ++attempt) {
      const int r = row_dist(rng);
      const int c = col_dist(rng);
      auto& cell = used[static_cast<std::size_t>(r * cfg.grid_size + c)];
      if (cell) continue;
      cell = 1;
      scene.objects.push_back({kind, r, c});
      placed = true;
    }
    if (!placed) {
      throw std::runtime_error(
          fmt::format("scene placement infeasible after {} attempts", kMaxAttemptsPerObject));
    }
  }
  scene.initial_sorted = remove_sorted_objects(scene);
  return scene;
}

PushResult apply_push(const Scene& scene, const Action& action, int push_length) {
  PushResult result{scene, 0};
  Scene& s = result.scene;
  const int g = s.grid_size;
  if (!s.inside(action.row, action.col)) throw std::out_of_range("apply_push: action off grid");
  const Direction d = orientation_direction(action.orientation);

  std::vector<int> occupant(static_cast<std::size_t>(g * g), -1);
  auto cell = [g](int r, int c) { return static_cast<std::size_t>(r * g + c); };
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    occupant[cell(s.objects[i].row, s.objects[i].col)] = static_cast<int>(i);
  }
  if (occupant[cell(action.row, action.col)] >= 0) return result;

  int r = action.row;
  int c = action.col;
  for (int step = 0; step < push_length; ++step) {
    const int nr = r + d.drow;
    const int nc = c + d.dcol;
    if (!s.inside(nr, nc)) break;
    if (occupant[cell(nr, nc)] >= 0) {
      int chain = 0;
      int er = nr;
      int ec = nc;
      while (s.inside(er, ec) && occupant[cell(er, ec)] >= 0) {
        er += d.drow;
        ec += d.dcol;
        ++chain;
      }
      if (!s.inside(er, ec)) break;
      // Shift from the far end of the chain back toward the pusher.
      for (int k = chain - 1; k >= 0; --k) {
        const int fr = nr + k * d.drow;
        const int fc = nc + k * d.dcol;
        const int idx = occupant[cell(fr, fc)];
        occupant[cell(fr + d.drow, fc + d.dcol)] = idx;
        occupant[cell(fr, fc)] = -1;
        s.objects[static_cast<std::size_t>(idx)].row = fr + d.drow;
        s.objects[static_cast<std::size_t>(idx)].col = fc + d.dcol;
      }
    }
    r = nr;
    c = nc;
  }
  result.newly_sorted = remove_sorted_objects(s);
  return result;
}

std::string to_string(TerminationCause cause) {
  switch (cause) {
    case TerminationCause::None: return "None";
    case TerminationCause::Goal: return "Goal";
    case TerminationCause::StuckNoChange: return "StuckNoChange";
    case TerminationCause::StepLimit: return "StepLimit";
  }
  return "None";
}

TerminationCause termination_cause_from_string(const std::string& name) {
  if (name == "None") return TerminationCause::None;
  if (name == "Goal") return TerminationCause::Goal;
  if (name == "StuckNoChange") return TerminationCause::StuckNoChange;
  if (name == "StepLimit") return TerminationCause::StepLimit;
  throw std::invalid_argument("unknown termination cause '" + name + "'");
}

TerminationCause check_termination(const Scene& scene, int steps_taken, int consecutive_no_change,
                                   const EnvConfig& cfg) {
  if (steps_taken < 0 || consecutive_no_change < 0) {
    throw std::invalid_argument("check_termination: negative counter");
  }
  if (scene.objects.empty()) return TerminationCause::Goal;
  if (consecutive_no_change > cfg.max_no_change) return TerminationCause::StuckNoChange;
  if (steps_taken >= cfg.step_limit + cfg.step_extension * scene.sorted_in_episode()) {
    return TerminationCause::StepLimit;
  }
  return TerminationCause::None;
}

Episode::Episode(Scene scene, EnvConfig env, RewardConfig rewards)
    : scene_(std::move(scene)), env_(env), rewards_(rewards) {
  validate_scene(scene_);
  observation_ = render_heightmap(scene_);
  cause_ = check_termination(scene_, 0, 0, env_);
}

Episode Episode::restore(Scene scene, EnvConfig env, RewardConfig rewards, int steps_taken,
                         int no_change_streak) {
  Episode ep(std::move(scene), env, rewards);
  ep.steps_ = steps_taken;
  ep.no_change_streak_ = no_change_streak;
  ep.cause_ = check_termination(ep.scene_, steps_taken, no_change_streak, ep.env_);
  return ep;
}

StepOutcome Episode::step(const Action& action) {
  if (done()) throw std::logic_error("Episode::step called after termination");
  PushResult pushed = apply_push(scene_, action, env_.resolved_push_length());
  Heightmap next = render_heightmap(pushed.scene);

  StepOutcome out;
  out.changed = detect_change(observation_, next, env_.change_tau);
  out.newly_sorted = pushed.newly_sorted;
  const bool reached_goal = pushed.scene.objects.empty();
  out.reward = compute_reward(rewards_, scene_, pushed.scene, out.changed, out.newly_sorted,
                              reached_goal);

  ++steps_;
  no_change_streak_ = out.changed ? 0 : no_change_streak_ + 1;
  scene_ = std::move(pushed.scene);
  observation_ = next;
  cause_ = check_termination(scene_, steps_, no_change_streak_, env_);

  out.next_state = std::move(next);
  out.termination_cause = cause_;
  out.done = done();
  return out;
}

}  // namespace pushsort
