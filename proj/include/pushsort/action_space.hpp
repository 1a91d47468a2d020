#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace pushsort {

/// Number of push orientations. Orientation k points at k * 45 degrees,
/// clockwise in image coordinates starting from east.
inline constexpr int kDefaultOrientations = 8;

struct Direction {
  int drow;
  int dcol;
};

/// Unit step on the grid for orientation k (k in [0, 8)).
Direction orientation_direction(int orientation);

struct Action {
  int orientation = 0;
  int row = 0;
  int col = 0;

  friend bool operator==(const Action&, const Action&) = default;
};

/// Bijection between (orientation, row, col) and a flat index
/// k * G^2 + row * G + col.
class ActionCodec {
 public:
  ActionCodec(int grid_size, int orientations = kDefaultOrientations);

  int grid_size() const { return grid_; }
  int orientations() const { return orientations_; }
  std::size_t size() const;
  std::size_t cells() const { return static_cast<std::size_t>(grid_) * grid_; }

  std::size_t encode(const Action& action) const;
  Action decode(std::size_t flat_index) const;

 private:
  int grid_;
  int orientations_;
};

struct WorkspaceBounds {
  double x_min = -0.2;
  double x_max = 0.2;
  double y_min = -0.2;
  double y_max = 0.2;
};

struct WorldPoint {
  double x;
  double y;
  double z;
};

/// Low-edge cell convention: col 0 maps to x_min, col G would map to x_max.
WorldPoint pixel_to_world(int row, int col, double depth, const WorkspaceBounds& bounds,
                          int grid_size);

/// Smallest n with gamma^n * reward < epsilon. Throws for gamma >= 1.
int effective_horizon(double gamma, double reward, double epsilon);

struct IndexRange {
  std::size_t begin;
  std::size_t end;

  std::size_t size() const { return end - begin; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
};

/// One contiguous flat-index range per orientation.
std::vector<IndexRange> orientation_subspaces(int grid_size, int orientations);

}  // namespace pushsort
