#include <doctest.h>

#include <cmath>

#include "pushsort/action_space.hpp"

using namespace pushsort;

TEST_CASE("flat index codec") {
  const ActionCodec codec(28, 8);
  CHECK(codec.size() == 6272);
  CHECK(codec.encode({0, 0, 0}) == 0);
  CHECK(codec.encode({1, 0, 0}) == 784);
  for (std::size_t i = 0; i < codec.size(); ++i) {
    const Action a = codec.decode(i);
    REQUIRE(codec.encode(a) == i);
    REQUIRE(a.orientation * 784 + a.row * 28 + a.col == static_cast<int>(i));
  }
  CHECK_THROWS(codec.decode(6272));
  CHECK_THROWS(codec.encode({8, 0, 0}));
  CHECK_THROWS(codec.encode({0, 28, 0}));
  CHECK_THROWS(codec.encode({0, 0, -1}));
}

TEST_CASE("orientation directions cover the compass") {
  int sum_r = 0, sum_c = 0;
  for (int k = 0; k < 8; ++k) {
    const Direction d = orientation_direction(k);
    CHECK(std::max(std::abs(d.drow), std::abs(d.dcol)) == 1);
    sum_r += d.drow;
    sum_c += d.dcol;
  }
  CHECK(sum_r == 0);
  CHECK(sum_c == 0);
  CHECK(orientation_direction(0).dcol == 1);
  CHECK(orientation_direction(0).drow == 0);
}

TEST_CASE("pixel_to_world uses the low cell edge") {
  const WorkspaceBounds b;
  CHECK(pixel_to_world(0, 0, 0.0, b, 28).x == -0.2);
  CHECK(pixel_to_world(0, 14, 0.0, b, 28).x == doctest::Approx(0.0));
  CHECK(pixel_to_world(0, 7, 0.0, b, 28).x == doctest::Approx(-0.1));
  CHECK(pixel_to_world(7, 0, 0.0, b, 28).y == doctest::Approx(-0.1));
  CHECK(pixel_to_world(3, 3, 0.04, b, 28).z == 0.04);
  double last = -1.0;
  for (int c = 0; c < 28; ++c) {
    const double x = pixel_to_world(0, c, 0.0, b, 28).x;
    CHECK(x > last);
    last = x;
  }
}

TEST_CASE("effective horizon") {
  CHECK(effective_horizon(0.8, 10, 0.1) == 21);
  CHECK(effective_horizon(0.99, 10, 0.1) == 459);
  CHECK(effective_horizon(0.5, 10, 0.1) == 7);
  CHECK_THROWS(effective_horizon(1.0, 10, 0.1));
  // Monotone in gamma and reward, antitone in epsilon.
  CHECK(effective_horizon(0.9, 10, 0.1) <= effective_horizon(0.95, 10, 0.1));
  CHECK(effective_horizon(0.9, 10, 0.1) <= effective_horizon(0.9, 20, 0.1));
  CHECK(effective_horizon(0.9, 10, 0.1) >= effective_horizon(0.9, 10, 0.2));
}

TEST_CASE("orientation subspaces partition the action space") {
  const auto ranges = orientation_subspaces(28, 8);
  REQUIRE(ranges.size() == 8);
  CHECK(ranges[3].begin == 2352);
  std::size_t next = 0;
  for (const auto& r : ranges) {
    CHECK(r.size() == 784);
    CHECK(r.begin == next);
    next = r.end;
  }
  CHECK(next == 6272);
}
