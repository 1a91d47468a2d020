#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <vector>

#include "pushsort/scene.hpp"

namespace pushsort {

struct Experience {
  Heightmap state;
  std::size_t action = 0;
  double reward = 0.0;
  Heightmap next_state;
  /// Goal reached; never bootstrapped.
  bool terminal = false;
  /// Episode cut off by a step limit or a no-change streak.
  bool truncated = false;
  bool changed = false;
  /// Label frozen when the experience was made (stored-label mode).
  std::optional<double> stored_label;
  /// |TD error| used for ranking.
  double priority_delta = 0.0;
};

/// Signed TD error: target - prediction.
inline double td_error(double pred_q, double target_label) { return target_label - pred_q; }

/// Identifies a stored experience; goes stale once the slot is overwritten.
struct SlotHandle {
  std::size_t slot = 0;
  std::uint64_t sequence = 0;
};

struct SampledExperience {
  SlotHandle handle;
  const Experience* experience;
};

/// Ring buffer with rank-based prioritized sampling: P(i) is proportional to
/// (1 / rank(i))^alpha where rank 1 has the largest |delta|. Equal |delta| ranks
/// older experiences first.
class RankPrioritizedBuffer {
 public:
  explicit RankPrioritizedBuffer(std::size_t capacity = 2500, double alpha = 2.0);

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  double alpha() const { return alpha_; }
  bool empty() const { return entries_.empty(); }

  /// New experiences take the current maximum |delta| (their own value when the
  /// buffer is empty), so each is ranked near the top until first replayed.
  SlotHandle push(Experience exp);

  /// Handle of the most recently pushed experience.
  SlotHandle newest() const;

  std::vector<SampledExperience> sample(std::size_t n, std::mt19937_64& rng);

  /// Ignores stale handles and counts them.
  void update_priority(const SlotHandle& handle, double new_delta);

  const Experience* get(const SlotHandle& handle) const;
  std::uint64_t stale_updates() const { return stale_updates_; }
  double max_priority() const;

  /// Probability of drawing stored slot `slot` under the current ranking.
  double probability(std::size_t slot);
  /// Slot holding rank r (1-based).
  std::size_t slot_at_rank(std::size_t rank);

  void save(const std::filesystem::path& path) const;
  static RankPrioritizedBuffer load(const std::filesystem::path& path);

 private:
  struct Entry {
    Experience exp;
    std::uint64_t sequence;
  };

  void refresh_ranks();
  void refresh_cdf();

  std::size_t capacity_;
  double alpha_;
  std::vector<Entry> entries_;
  std::size_t next_slot_ = 0;
  std::uint64_t next_sequence_ = 0;
  std::uint64_t stale_updates_ = 0;

  bool ranks_dirty_ = true;
  std::vector<std::size_t> by_rank_;  // rank - 1 -> slot
  std::vector<std::size_t> rank_of_;  // slot -> rank - 1
  std::size_t cdf_size_ = 0;
  std::vector<double> cdf_;
};

}  // namespace pushsort
