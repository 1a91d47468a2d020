#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pushsort/config.hpp"
#include "pushsort/conv_net.hpp"
#include "pushsort/gridworld.hpp"
#include "pushsort/maskchange.hpp"
#include "pushsort/optim.hpp"
#include "pushsort/replay.hpp"

namespace pushsort {

/// Test-time adaptation: one SGD step per executed action on a parameter copy.
struct FinetuneConfig {
  bool enabled = false;
  double learning_rate = 1e-4;
  double gamma = 0.99;
  /// Discard the adapted weights after each episode. When false the copy is
  /// carried across the scenes of one suite run (the checkpoint is never touched).
  bool reset_after = true;
  LossKind loss = LossKind::Huber;
};

struct StepRecord {
  /// Empty for the single record of a scene that was already solved.
  std::optional<Action> action;
  double reward = 0.0;
  /// Raw online Q at the executed action, before any fine-tune update.
  double predicted_q = 0.0;
  bool changed = false;
  int newly_sorted = 0;
};

struct EpisodeTrace {
  std::string scene_id;
  std::vector<StepRecord> steps;
  TerminationCause termination_cause = TerminationCause::None;

  bool completed() const { return termination_cause == TerminationCause::Goal; }
  /// Executed pushes (the solved-at-init record does not count).
  int action_count() const;
};

/// One fine-tune update on `net`: conditional label (y = r without change or at the
/// goal, else r + gamma * masked max online Q of the next state). Returns the label.
double finetune_update(ConvNet& net, SgdMomentum& sgd, const Experience& exp,
                       const ChangeMask* mask, const FinetuneConfig& cfg);

/// Greedy (mask-adjusted) rollout on `scene` under the training episode rules.
/// `adapted` (optional) receives the fine-tuned weights when fine-tuning is on.
EpisodeTrace run_test_episode(const ConvNet& model, const ChangeMask* mask, const Scene& scene,
                              const EnvConfig& env, const RewardConfig& rewards,
                              const FinetuneConfig& finetune, const std::string& scene_id = "",
                              ConvNet* adapted = nullptr);

/// G_t = r_t + gamma * G_{t+1}, computed backward from the last reward.
std::vector<double> true_q_trace(const EpisodeTrace& trace, double gamma);

struct MetricsReport {
  std::size_t scenes = 0;
  std::size_t completed = 0;
  double completion_pct = 0.0;
  double g_max_mean = 0.0;
  double g_max_std = 0.0;
  double change_pct = 0.0;
  /// Over completed scenes only; absent when none completed.
  std::optional<double> n_actions_mean;
  std::optional<double> n_actions_std;
  /// Fraction of executed actions per orientation.
  std::vector<double> orientation_shares;
};

/// Population standard deviations. Throws for an empty trace list.
MetricsReport compute_metrics(const std::vector<EpisodeTrace>& traces,
                              int orientations = kDefaultOrientations);

struct ActionHeatmap {
  int grid_size = 0;
  std::vector<std::int64_t> total;                       // G x G, row-major
  std::vector<std::vector<std::int64_t>> per_orientation;  // K of G x G
};

ActionHeatmap action_heatmap(const std::vector<EpisodeTrace>& traces, int grid_size,
                             int orientations = kDefaultOrientations);

std::string report_to_json(const MetricsReport& report);
void write_count_csv(const std::filesystem::path& path, std::span<const std::int64_t> counts,
                     int grid_size);
/// Columns: step,orientation,row,col,reward,predicted_q,true_q,changed
void write_qtrace_csv(const std::filesystem::path& path, const EpisodeTrace& trace, double gamma);

/// Scene files (*.json) in `dir`, sorted by file name; the id is the file stem.
std::vector<std::pair<std::string, Scene>> load_scene_dir(const std::filesystem::path& dir);

/// Five fixed hard arrangements for a given grid layout: a stacked cluster,
/// objects in the opposite goal region, a packed row against the wall, a
/// diagonal chain and a mixed block next to the markers.
std::vector<Scene> challenge_scenes(const EnvConfig& env);

/// Trained networks restored from a checkpoint directory (config.txt,
/// online.psdq and, when enabled, mask.psmk).
struct Policy {
  RunConfig config;
  ConvNet online;
  std::optional<ChangeMask> mask;
};
Policy load_policy(const std::filesystem::path& checkpoint_dir);

struct SuiteResult {
  MetricsReport report;
  std::vector<EpisodeTrace> traces;
};

/// Runs every scene in order and aggregates the metrics.
SuiteResult evaluate_suite(const Policy& policy,
                           const std::vector<std::pair<std::string, Scene>>& scenes,
                           const FinetuneConfig& finetune);

/// report.json, heatmap_total.csv, heatmap_o<k>.csv and qtrace_<scene>.csv under `out_dir`.
void write_eval_outputs(const std::filesystem::path& out_dir, const SuiteResult& result,
                        int grid_size, double gamma);

}  // namespace pushsort
