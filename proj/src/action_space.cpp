#include "pushsort/action_space.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pushsort {

namespace {
constexpr std::array<Direction, 8> kDirections{{
    {0, 1},    // E
    {1, 1},    // SE
    {1, 0},    // S
    {1, -1},   // SW
    {0, -1},   // W
    {-1, -1},  // NW
    {-1, 0},   // N
    {-1, 1},   // NE
}};
}  // namespace

Direction orientation_direction(int orientation) {
  if (orientation < 0 || orientation >= static_cast<int>(kDirections.size())) {
    throw std::out_of_range("orientation " + std::to_string(orientation) + " out of range");
  }
  return kDirections[static_cast<std::size_t>(orientation)];
}

ActionCodec::ActionCodec(int grid_size, int orientations)
    : grid_(grid_size), orientations_(orientations) {
  if (grid_size <= 0 || orientations <= 0) {
    throw std::invalid_argument("ActionCodec: grid size and orientation count must be positive");
  }
}

std::size_t ActionCodec::size() const { return cells() * static_cast<std::size_t>(orientations_); }

std::size_t ActionCodec::encode(const Action& a) const {
  if (a.orientation < 0 || a.orientation >= orientations_ || a.row < 0 || a.row >= grid_ ||
      a.col < 0 || a.col >= grid_) {
    throw std::out_of_range("ActionCodec::encode: action component out of range");
  }
  return static_cast<std::size_t>(a.orientation) * cells() +
         static_cast<std::size_t>(a.row) * static_cast<std::size_t>(grid_) +
         static_cast<std::size_t>(a.col);
}

Action ActionCodec::decode(std::size_t flat_index) const {
  if (flat_index >= size()) {
    throw std::out_of_range("ActionCodec::decode: index " + std::to_string(flat_index) +
                            " >= " + std::to_string(size()));
  }
  const auto g = static_cast<std::size_t>(grid_);
  const std::size_t k = flat_index / cells();
  const std::size_t rem = flat_index % cells();
  return Action{static_cast<int>(k), static_cast<int>(rem / g), static_cast<int>(rem % g)};
}

WorldPoint pixel_to_world(int row, int col, double depth, const WorkspaceBounds& b,
                          int grid_size) {
  const double g = static_cast<double>(grid_size);
  return WorldPoint{b.x_min + col * (b.x_max - b.x_min) / g,
                    b.y_min + row * (b.y_max - b.y_min) / g, depth};
}

int effective_horizon(double gamma, double reward, double epsilon) {
  if (!(gamma > 0.0) || gamma >= 1.0) {
    throw std::domain_error("effective_horizon: gamma must lie in (0, 1)");
  }
  if (!(reward > 0.0) || !(epsilon > 0.0)) {
    throw std::domain_error("effective_horizon: reward and epsilon must be positive");
  }
  int n = 0;
  while (std::pow(gamma, n) * reward >= epsilon) ++n;
  return n;
}

std::vector<IndexRange> orientation_subspaces(int grid_size, int orientations) {
  const auto cells = static_cast<std::size_t>(grid_size) * static_cast<std::size_t>(grid_size);
  std::vector<IndexRange> out;
  out.reserve(static_cast<std::size_t>(orientations));
  for (int k = 0; k < orientations; ++k) {
    const auto begin = static_cast<std::size_t>(k) * cells;
    out.push_back({begin, begin + cells});
  }
  return out;
}

}  // namespace pushsort
