#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace pushsort {

enum class ObjectKind { CubeA, CuboidB };

inline constexpr double kCubeHeight = 0.04;
inline constexpr double kCuboidHeight = 0.02;
/// Tallest possible cell; heightmaps are divided by this at the network input.
inline constexpr double kMaxDepth = 0.04;

double object_height(ObjectKind kind);
std::string to_string(ObjectKind kind);
ObjectKind object_kind_from_string(const std::string& name);

struct ObjectSpec {
  ObjectKind kind = ObjectKind::CubeA;
  int row = 0;
  int col = 0;

  double height() const { return object_height(kind); }
  friend bool operator==(const ObjectSpec&, const ObjectSpec&) = default;
};

/// Bin-sorting table. CubeA belongs in columns [0, W), CuboidB in [G - W, G).
/// Goal markers are painted along columns W and G - 1 - W.
struct Scene {
  int grid_size = 28;
  int goal_width = 7;
  double marker_depth = 0.005;
  std::vector<ObjectSpec> objects;
  /// Objects removed since the scene was created, including generation-time removals.
  int sorted_count = 0;
  /// Objects removed while the scene was generated.
  int initial_sorted = 0;

  int marker_col_a() const { return goal_width; }
  int marker_col_b() const { return grid_size - 1 - goal_width; }
  bool inside(int row, int col) const {
    return row >= 0 && row < grid_size && col >= 0 && col < grid_size;
  }
  bool in_correct_goal(const ObjectSpec& obj) const;
  int sorted_in_episode() const { return sorted_count - initial_sorted; }

  friend bool operator==(const Scene&, const Scene&) = default;
};

/// Throws std::invalid_argument when objects overlap or leave the grid.
void validate_scene(const Scene& scene);

/// Removes every object sitting in its own goal region; returns how many.
int remove_sorted_objects(Scene& scene);

/// G x G depth values in meters, row-major.
class Heightmap {
 public:
  Heightmap() = default;
  explicit Heightmap(int size, double fill = 0.0);

  int size() const { return size_; }
  double at(int row, int col) const { return depth_[index(row, col)]; }
  double& at(int row, int col) { return depth_[index(row, col)]; }
  /// Out-of-grid cells read as table surface.
  double at_or_zero(int row, int col) const;

  std::span<const double> values() const { return depth_; }
  std::span<double> values() { return depth_; }

  friend bool operator==(const Heightmap&, const Heightmap&) = default;

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * static_cast<std::size_t>(size_) +
           static_cast<std::size_t>(col);
  }

  int size_ = 0;
  std::vector<double> depth_;
};

Heightmap render_heightmap(const Scene& scene);

/// Sum of absolute cell-wise depth differences.
double change_magnitude(const Heightmap& before, const Heightmap& after);
bool detect_change(const Heightmap& before, const Heightmap& after, double tau);

/// Canonical occupancy string (one character per cell), usable as a tabular state key.
std::string state_key(const Heightmap& map);

std::string scene_to_json(const Scene& scene);
Scene scene_from_json(const std::string& text);
void save_scene(const std::filesystem::path& path, const Scene& scene);
Scene load_scene(const std::filesystem::path& path);

void write_heightmap_csv(std::ostream& out, const Heightmap& map);

}  // namespace pushsort
