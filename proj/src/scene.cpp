#include "pushsort/scene.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

namespace pushsort {

double object_height(ObjectKind kind) {
  return kind == ObjectKind::CubeA ? kCubeHeight : kCuboidHeight;
}

std::string to_string(ObjectKind kind) { return kind == ObjectKind::CubeA ? "CubeA" : "CuboidB"; }

ObjectKind object_kind_from_string(const std::string& name) {
  if (name == "CubeA") return ObjectKind::CubeA;
  if (name == "CuboidB") return ObjectKind::CuboidB;
  throw std::invalid_argument("unknown object kind '" + name + "'");
}

bool Scene::in_correct_goal(const ObjectSpec& obj) const {
  if (obj.kind == ObjectKind::CubeA) return obj.col < goal_width;
  return obj.col >= grid_size - goal_width;
}

void validate_scene(const Scene& scene) {
  if (scene.grid_size <= 0) throw std::invalid_argument("scene: grid_size must be positive");
  if (scene.goal_width < 0 || 2 * scene.goal_width > scene.grid_size) {
    throw std::invalid_argument("scene: goal regions do not fit the grid");
  }
  std::vector<char> used(static_cast<std::size_t>(scene.grid_size * scene.grid_size), 0);
  for (const auto& obj : scene.objects) {
    if (!scene.inside(obj.row, obj.col)) {
      throw std::invalid_argument(fmt::format("scene: object at ({},{}) outside the grid",
                                              obj.row, obj.col));
    }
    auto& cell = used[static_cast<std::size_t>(obj.row * scene.grid_size + obj.col)];
    if (cell) {
      throw std::invalid_argument(
          fmt::format("scene: two objects share cell ({},{})", obj.row, obj.col));
    }
    cell = 1;
  }
}

int remove_sorted_objects(Scene& scene) {
  const auto before = scene.objects.size();
  std::erase_if(scene.objects, [&](const ObjectSpec& o) { return scene.in_correct_goal(o); });
  const int removed = static_cast<int>(before - scene.objects.size());
  scene.sorted_count += removed;
  return removed;
}

Heightmap::Heightmap(int size, double fill)
    : size_(size), depth_(static_cast<std::size_t>(size) * static_cast<std::size_t>(size), fill) {
  if (size < 0) throw std::invalid_argument("Heightmap: negative size");
}

double Heightmap::at_or_zero(int row, int col) const {
  if (row < 0 || row >= size_ || col < 0 || col >= size_) return 0.0;
  return at(row, col);
}

Heightmap render_heightmap(const Scene& scene) {
  Heightmap map(scene.grid_size);
  for (int r = 0; r < scene.grid_size; ++r) {
    map.at(r, scene.marker_col_a()) = scene.marker_depth;
    map.at(r, scene.marker_col_b()) = scene.marker_depth;
  }
  for (const auto& obj : scene.objects) map.at(obj.row, obj.col) = obj.height();
  return map;
}

double change_magnitude(const Heightmap& before, const Heightmap& after) {
  if (before.size() != after.size()) {
    throw std::invalid_argument("change_magnitude: heightmap dimensions differ");
  }
  double sum = 0.0;
  const auto a = before.values();
  const auto b = after.values();
  for (std::size_t i = 0; i < a.size(); ++i) sum += std::abs(b[i] - a[i]);
  return sum;
}

bool detect_change(const Heightmap& before, const Heightmap& after, double tau) {
  return change_magnitude(before, after) > tau;
}

std::string state_key(const Heightmap& map) {
  std::string key;
  key.reserve(map.values().size());
  for (double d : map.values()) {
    if (d == kCubeHeight) {
      key.push_back('a');
    } else if (d == kCuboidHeight) {
      key.push_back('b');
    } else if (d > 0.0) {
      key.push_back('m');
    } else {
      key.push_back('.');
    }
  }
  return key;
}

std::string scene_to_json(const Scene& scene) {
  nlohmann::json j;
  j["grid_size"] = scene.grid_size;
  j["goal_width"] = scene.goal_width;
  j["marker_depth"] = scene.marker_depth;
  auto& objs = j["objects"] = nlohmann::json::array();
  for (const auto& o : scene.objects) {
    objs.push_back({{"kind", to_string(o.kind)}, {"row", o.row}, {"col", o.col}});
  }
  return j.dump(2);
}

Scene scene_from_json(const std::string& text) {
  Scene scene;
  try {
    const auto j = nlohmann::json::parse(text);
    scene.grid_size = j.at("grid_size").get<int>();
    scene.goal_width = j.at("goal_width").get<int>();
    scene.marker_depth = j.value("marker_depth", 0.005);
    for (const auto& o : j.at("objects")) {
      scene.objects.push_back({object_kind_from_string(o.at("kind").get<std::string>()),
                               o.at("row").get<int>(), o.at("col").get<int>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("scene file: ") + e.what());
  }
  validate_scene(scene);
  return scene;
}

void save_scene(const std::filesystem::path& path, const Scene& scene) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scene file " + path.string());
  out << scene_to_json(scene) << '\n';
}

Scene load_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read scene file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return scene_from_json(ss.str());
}

void write_heightmap_csv(std::ostream& out, const Heightmap& map) {
  for (int r = 0; r < map.size(); ++r) {
    for (int c = 0; c < map.size(); ++c) {
      if (c) out << ',';
      out << fmt::format("{}", map.at(r, c));
    }
    out << '\n';
  }
}

}  // namespace pushsort
