#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <string>

#include "pushsort/agent.hpp"
#include "pushsort/config.hpp"
#include "pushsort/gridworld.hpp"
#include "pushsort/replay.hpp"

namespace pushsort {

inline constexpr const char* kMetricsHeader =
    "iter,episode,step_reward,loss,mean_abs_td,epsilon,gamma,max_pred_q,diverged";

struct IterationResult {
  bool trained = false;
  TrainReport report;
  double reward = 0.0;
  double epsilon = 0.0;
  bool episode_done = false;
};

/// Single-threaded, seed-deterministic training loop. Holds everything needed
/// to continue a run: networks, optimizers, replay, schedules, RNG streams and
/// the in-progress episode.
class Trainer {
 public:
  explicit Trainer(RunConfig cfg);

  /// One environment step, plus a gradient step once warmup has passed.
  /// Appends a metrics row to `metrics` for training iterations.
  IterationResult run_iteration(std::ostream* metrics);

  /// Runs `steps` iterations.
  void run(std::int64_t steps, std::ostream* metrics);

  std::int64_t iteration() const { return iteration_; }
  std::int64_t episode() const { return episode_index_; }
  std::int64_t gradient_updates() const { return updates_; }
  std::int64_t completed_syncs() const { return syncs_; }
  bool diverged() const { return diverged_; }
  double max_pred_q_seen() const { return max_pred_seen_; }

  const RunConfig& config() const { return cfg_; }
  const QLearner& learner() const { return learner_; }
  QLearner& learner() { return learner_; }
  const RankPrioritizedBuffer& buffer() const { return buffer_; }
  const ActionCodec& codec() const { return codec_; }

  /// Writes the full checkpoint set into `dir`. `metrics_bytes` records how much
  /// of the metrics log belongs to this state.
  void save_checkpoint(const std::filesystem::path& dir, std::uint64_t metrics_bytes) const;

  struct Restored;
  /// Throws CheckpointError for missing or corrupt components.
  static Restored load_checkpoint(const std::filesystem::path& dir);

 private:
  struct ResumeTag {};
  Trainer(RunConfig cfg, ResumeTag);

  void start_episode();

  RunConfig cfg_;
  ActionCodec codec_;
  int push_length_;
  int exploration_kernel_;
  QLearner learner_;
  RankPrioritizedBuffer buffer_;
  UcbState ucb_;
  std::mt19937_64 env_rng_;
  std::mt19937_64 explore_rng_;
  std::mt19937_64 replay_rng_;
  std::optional<Episode> episode_;
  std::int64_t iteration_ = 0;
  std::int64_t episode_index_ = 0;
  std::int64_t updates_ = 0;
  std::int64_t syncs_ = 0;
  bool diverged_ = false;
  double max_pred_seen_ = 0.0;
};

struct Trainer::Restored {
  std::unique_ptr<Trainer> trainer;
  std::uint64_t metrics_bytes = 0;
};

std::string format_metrics_row(std::int64_t iter, std::int64_t episode, double step_reward,
                               const TrainReport& report, double epsilon);

struct TrainingSummary {
  std::int64_t iterations = 0;
  std::int64_t gradient_updates = 0;
  bool diverged = false;
  double max_pred_q = 0.0;
};

/// Run directory layout:
///   <out>/config.txt     effective RunConfig
///   <out>/metrics.csv    one row per training iteration
///   <out>/checkpoint/    latest checkpoint set (every checkpoint_every iterations and at end)
TrainingSummary run_training(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// Continues the run stored in `checkpoint_dir` for `steps` iterations. Metrics are
/// appended to `out_dir/metrics.csv` after trimming rows written past the checkpoint.
TrainingSummary resume_training(const std::filesystem::path& checkpoint_dir, std::int64_t steps,
                                const std::filesystem::path& out_dir);

}  // namespace pushsort
