#include <doctest.h>

#include <cmath>
#include <random>

#include "pushsort/action_space.hpp"
#include "pushsort/gridworld.hpp"
#include "pushsort/losses.hpp"
#include "pushsort/maskchange.hpp"

using namespace pushsort;

namespace {

constexpr int kEast = 0;

// Height of a cell straight from the object list, markers included.
double cell_height(const Scene& s, int r, int c) {
  if (!s.inside(r, c)) return 0.0;
  for (const auto& o : s.objects)
    if (o.row == r && o.col == c) return o.height();
  if (c == s.marker_col_a() || c == s.marker_col_b()) return s.marker_depth;
  return 0.0;
}

std::size_t flat(int k, int r, int c, int g) {
  return static_cast<std::size_t>(k) * g * g + static_cast<std::size_t>(r) * g + c;
}

}  // namespace

TEST_CASE("heuristic labels for a single cube") {
  Scene s = empty_scene(EnvConfig{});
  s.objects = {{ObjectKind::CubeA, 10, 10}};
  const auto labels = heuristic_labels(render_heightmap(s), 8);
  CHECK(labels[flat(kEast, 10, 9, 28)] == 1);
  CHECK(labels[flat(kEast, 10, 11, 28)] == 0);
  CHECK(labels[flat(kEast, 10, 10, 28)] == 0);
  CHECK(labels[flat(4, 10, 11, 28)] == 1);  // west, from the other side
  CHECK(labels[flat(1, 9, 9, 28)] == 1);    // south-east diagonal
  int on = 0;
  for (auto v : labels) on += v;
  CHECK(on == 8);

  const auto none = heuristic_labels(render_heightmap(empty_scene(EnvConfig{})), 8);
  for (auto v : none) CHECK(v == 0);
}

TEST_CASE("off-grid probes read as table") {
  Scene s = empty_scene(EnvConfig{});
  s.objects = {{ObjectKind::CubeA, 0, 27}};
  const auto labels = heuristic_labels(render_heightmap(s), 8);
  CHECK(labels[flat(kEast, 0, 27, 28)] == 0);
  CHECK(labels[flat(6, 0, 5, 28)] == 0);  // north of row 0
}

TEST_CASE("heuristic labels agree with a brute-force scan of the objects") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 40; ++t) {
    const Scene s = generate_scene(rng(), 3, 3, EnvConfig{});
    const auto labels = heuristic_labels(render_heightmap(s), 8);
    for (int k = 0; k < 8; ++k) {
      const Direction d = orientation_direction(k);
      for (int r = 0; r < 28; ++r)
        for (int c = 0; c < 28; ++c) {
          const bool want = cell_height(s, r + d.drow, c + d.dcol) - cell_height(s, r, c) > 0.01;
          CHECK(static_cast<bool>(labels[flat(k, r, c, 28)]) == want);
        }
    }
  }
}

TEST_CASE("additive mask and apply_mask") {
  const std::vector<double> q{1.0, 2.0, 3.0};
  const std::vector<double> p{0.2, 0.05, 0.14};
  const auto add = additive_mask(p, 0.14, -1e9);
  CHECK(add == std::vector<double>{0.0, -1e9, 0.0});
  const auto m = apply_mask(q, p, 0.14, -1e9);
  CHECK(m[0] == 1.0);
  CHECK(m[1] == doctest::Approx(2.0 - 1e9));
  CHECK(m[2] == 3.0);
  CHECK_THROWS(apply_mask(q, std::vector<double>{0.5}, 0.14, -1e9));

  // Masking never changes values above the threshold and never raises any.
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1), v(-20, 20);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> qq(16), pp(16);
    for (auto& x : qq) x = v(rng);
    for (auto& x : pp) x = u(rng);
    const auto out = apply_mask(qq, pp, 0.14, -1e9);
    for (std::size_t i = 0; i < 16; ++i) {
      if (pp[i] >= 0.14) CHECK(out[i] == qq[i]);
      else CHECK(out[i] < -1e8);
    }
  }
}

TEST_CASE("mask probabilities live in (0, 1) and BCE at one half is ln 2") {
  const ChangeMask mask(NetSpec{}, 8, 3);
  Heightmap hm(8);
  hm.at(3, 3) = 0.04;
  const Tensor p = mask.probabilities(hm);
  CHECK(p.shape() == Shape{8, 8, 8});
  for (double x : p.values()) {
    CHECK(x > 0.0);
    CHECK(x < 1.0);
  }
  CHECK(bce_loss(0.5, 1.0).loss == doctest::Approx(std::log(2.0)));
  CHECK(bce_loss(0.5, 0.0).loss == doctest::Approx(std::log(2.0)));
}

TEST_CASE("mask train_step reports the BCE of the taken actions") {
  ChangeMask mask(NetSpec{}, 8, 4);
  Heightmap hm(8);
  hm.at(2, 5) = 0.02;
  const Tensor before = mask.probabilities(hm);
  const std::vector<MaskSample> batch{{&hm, 7, true}, {&hm, 100, false}};
  const double expect =
      0.5 * (bce_loss(before[7], 1.0).loss + bce_loss(before[100], 0.0).loss);
  CHECK(mask.train_step(batch) == doctest::Approx(expect));
  const Tensor after = mask.probabilities(hm);
  CHECK(after[7] > before[7]);
  CHECK(after[100] < before[100]);

  CHECK_THROWS(mask.train_step(std::span<const MaskSample>{}));
}

TEST_CASE("mask learns the push heuristic on a small grid") {
  EnvConfig env;
  env.grid_size = 8;
  env.goal_width = 1;
  env.push_length = 1;
  ChangeMask mask(NetSpec{}, 8, 5);
  std::mt19937_64 rng(2);
  std::vector<Heightmap> maps;
  for (int i = 0; i < 16; ++i) maps.push_back(render_heightmap(generate_scene(rng(), 1, 1, env)));
  std::uniform_int_distribution<std::size_t> pick(0, maps.size() - 1);
  std::uniform_int_distribution<std::size_t> act(0, 8 * 64 - 1);

  auto accuracy = [&] {
    std::size_t ok = 0, n = 0;
    for (const auto& m : maps) {
      const auto lab = heuristic_labels(m, 8);
      const Tensor p = mask.probabilities(m);
      for (std::size_t i = 0; i < lab.size(); ++i, ++n) ok += (p[i] >= 0.5) == (lab[i] == 1);
    }
    return static_cast<double>(ok) / static_cast<double>(n);
  };
  for (int it = 0; it < 600; ++it) {
    std::vector<MaskSample> batch;
    for (int b = 0; b < 16; ++b) {
      const Heightmap& m = maps[pick(rng)];
      const auto lab = heuristic_labels(m, 8);
      // Half the samples are positives so the rare class is seen.
      std::size_t a = act(rng);
      if (b % 2 == 0) {
        for (std::size_t i = 0; i < lab.size(); ++i)
          if (lab[(a + i) % lab.size()]) {
            a = (a + i) % lab.size();
            break;
          }
      }
      batch.push_back({&m, a, lab[a] == 1});
    }
    mask.train_step(batch);
  }
  CHECK(accuracy() > 0.9);
}
