#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "../oracles.hpp"
#include "evfuse/vsh.hpp"

using namespace evfuse;

namespace {

Stack random_stack(std::mt19937_64& rng, Representation rep, int w, int h, int c) {
  Stack s(rep, w, h, c, {0, 100});
  std::uniform_real_distribution<double> v(-2.0, 5.0);
  for (auto& x : s.values()) x = v(rng);
  return s;
}

SparseDisparityGrid random_grid(std::mt19937_64& rng, int w, int h, int hints, int d_max) {
  SparseDisparityGrid g(w, h);
  std::uniform_int_distribution<int> xs(0, w - 1);
  std::uniform_int_distribution<int> ys(0, h - 1);
  std::uniform_real_distribution<double> ds(0.0, d_max);
  for (int i = 0; i < hints; ++i) g.set(xs(rng), ys(rng), ds(rng));
  return g;
}

}  // namespace

TEST_CASE("VSH defaults") {
  const VshConfig cfg;
  CHECK(cfg.alpha == 0.5);
  CHECK(cfg.patch == 3);
  CHECK(cfg.uniform_patch);
  CHECK_FALSE(cfg.range.has_value());
  VshConfig bad;
  bad.patch = 2;
  CHECK_THROWS(bad.validate());
  bad = {};
  bad.alpha = 1.5;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("alpha 0 leaves both stacks untouched") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto l = random_stack(rng, Representation::voxel_grid, 16, 12, 3);
    const auto r = random_stack(rng, Representation::voxel_grid, 16, 12, 3);
    VshConfig cfg;
    cfg.alpha = 0.0;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const auto out = vsh_inject(l, r, random_grid(rng, 16, 12, 10, 8), cfg);
    CHECK(out.left == l);
    CHECK(out.right == r);
  }
}

TEST_CASE("alpha 1 with a 1x1 patch makes left and right agree at every hint") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto l = random_stack(rng, Representation::tore, 20, 10, 4);
    const auto r = random_stack(rng, Representation::tore, 20, 10, 4);
    SparseDisparityGrid g(20, 10);
    std::uniform_int_distribution<int> xs(0, 19);
    std::uniform_int_distribution<int> ys(0, 9);
    std::uniform_int_distribution<int> ds(0, 6);
    for (int i = 0; i < 8; ++i) g.set(xs(rng), ys(rng), ds(rng));
    VshConfig cfg;
    cfg.alpha = 1.0;
    cfg.patch = 1;
    const auto out = vsh_inject(l, r, g, cfg);
    // Later hints may overwrite a right pixel shared with an earlier one, so
    // only the last hint per right pixel is checked.
    std::map<std::pair<int, int>, Hint> last_at_right;
    for (const Hint& hnt : valid_hints(g)) {
      const long xr = round_column(hnt.x - hnt.d);
      if (xr >= 0) last_at_right[{static_cast<int>(xr), hnt.y}] = hnt;
    }
    for (const auto& [key, hnt] : last_at_right) {
      for (int c = 0; c < 4; ++c) CHECK(out.left.at(hnt.x, hnt.y, c) == out.right.at(key.first, key.second, c));
    }
  }
}

TEST_CASE("VSH structural properties") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int w = 24;
    const int h = 16;
    const auto rep = trial % 2 == 0 ? Representation::histogram : Representation::voxel_grid;
    const auto l = random_stack(rng, rep, w, h, 2);
    const auto r = random_stack(rng, rep, w, h, 2);
    const auto g = random_grid(rng, w, h, 12, 10);
    VshConfig cfg;
    cfg.patch = 1 + 2 * (trial % 3);
    cfg.uniform_patch = trial % 4 < 2;
    cfg.share_channels = trial % 5 == 0;
    cfg.alpha = (trial % 7) / 6.0;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const auto out = vsh_inject(l, r, g, cfg);

    // Pixels outside every patch are untouched.
    const int rad = cfg.patch / 2;
    std::set<std::pair<int, int>> touched_l;
    std::set<std::pair<int, int>> touched_r;
    for (const Hint& hnt : valid_hints(g)) {
      const long xr = round_column(hnt.x - hnt.d);
      if (xr < 0 || xr >= w) continue;
      for (int dy = -rad; dy <= rad; ++dy) {
        for (int dx = -rad; dx <= rad; ++dx) {
          touched_l.insert({hnt.x + dx, hnt.y + dy});
          touched_r.insert({static_cast<int>(xr) + dx, hnt.y + dy});
        }
      }
    }
    const auto range = out.range;
    for (int c = 0; c < 2; ++c) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          if (!touched_l.count({x, y})) CHECK(out.left.at(x, y, c) == l.at(x, y, c));
          if (!touched_r.count({x, y})) CHECK(out.right.at(x, y, c) == r.at(x, y, c));
          // convex combination of old value and a draw inside the range
          const double lo_l = std::min(l.at(x, y, c), range.lo) - 1e-12;
          const double hi_l = std::max(l.at(x, y, c), range.hi) + 1e-12;
          CHECK(out.left.at(x, y, c) >= lo_l);
          CHECK(out.left.at(x, y, c) <= hi_l);
        }
      }
    }
    // Determinism.
    CHECK(vsh_inject(l, r, g, cfg).left == out.left);
    CHECK(vsh_inject(l, r, g, cfg).right == out.right);
  }
}

TEST_CASE("range follows the representation default") {
  Stack l(Representation::voxel_grid, 10, 5, 1, {});
  Stack r(Representation::voxel_grid, 10, 5, 1, {});
  for (int i = 0; i < 100; ++i) {
    (i < 50 ? l : r).values()[static_cast<std::size_t>(i % 50)] = i;
  }
  const SparseDisparityGrid g(10, 5);
  CHECK(vsh_inject(l, r, g, {}).range.lo == 5.0);
  CHECK(vsh_inject(l, r, g, {}).range.hi == 95.0);
  VshConfig mm;
  mm.range = RangeMode::minmax();
  CHECK(vsh_inject(l, r, g, mm).range.hi == 99.0);
}

TEST_CASE("patches are clipped where either side leaves the image") {
  const Stack l(Representation::histogram, 10, 6, 2, {});
  const Stack r(Representation::histogram, 10, 6, 2, {});
  SparseDisparityGrid g(10, 6);
  g.set(3, 0, 3.0);  // right centre at column 0, top row
  VshConfig cfg;
  cfg.range = RangeMode::minmax();  // widened to (0, 1)
  cfg.alpha = 1.0;
  const auto out = vsh_inject(l, r, g, cfg);
  CHECK(out.hints_used == 1);
  CHECK(out.cells_written == 4);  // dx in {0, 1}, dy in {0, 1}
  CHECK(out.left.at(2, 0, 0) == 0.0);
  CHECK(out.left.at(3, 0, 0) > 0.0);
  SparseDisparityGrid off(10, 6);
  off.set(1, 2, 3.0);  // right column -2
  const auto skipped = vsh_inject(l, r, off, cfg);
  CHECK(skipped.hints_skipped == 1);
  CHECK(skipped.left == l);
}

TEST_CASE("draws do not depend on where a hint sits") {
  // A clipped first hint consumes the same draws as an unclipped one, so the
  // second hint's pattern is unchanged.
  const Stack l(Representation::histogram, 30, 10, 2, {});
  const Stack r(Representation::histogram, 30, 10, 2, {});
  VshConfig cfg;
  cfg.alpha = 1.0;
  cfg.range = RangeMode::minmax();
  cfg.uniform_patch = false;
  SparseDisparityGrid a(30, 10);
  a.set(5, 0, 2.0);
  a.set(20, 5, 4.0);
  SparseDisparityGrid b(30, 10);
  b.set(12, 2, 2.0);
  b.set(20, 5, 4.0);
  const auto oa = vsh_inject(l, r, a, cfg);
  const auto ob = vsh_inject(l, r, b, cfg);
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      for (int c = 0; c < 2; ++c) CHECK(oa.left.at(20 + dx, 5 + dy, c) == ob.left.at(20 + dx, 5 + dy, c));
    }
  }
}

TEST_CASE("later hints overwrite earlier patches") {
  const Stack l(Representation::histogram, 12, 8, 2, {});
  const Stack r(Representation::histogram, 12, 8, 2, {});
  VshConfig cfg;
  cfg.alpha = 1.0;
  cfg.range = RangeMode::minmax();
  SparseDisparityGrid both(12, 8);
  both.set(5, 3, 2.0);
  both.set(6, 3, 2.0);  // row-major: visited second
  const auto ob = vsh_inject(l, r, both, cfg);
  // The second hint's pattern is the second draw of the sequence; reproduce it
  // with a grid holding a dummy first hint that does not overlap.
  SparseDisparityGrid shifted(12, 8);
  shifted.set(1, 0, 0.0);
  shifted.set(6, 3, 2.0);
  const auto os = vsh_inject(l, r, shifted, cfg);
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      CHECK(ob.left.at(6 + dx, 3 + dy, 0) == os.left.at(6 + dx, 3 + dy, 0));
      CHECK(ob.right.at(4 + dx, 3 + dy, 0) == os.right.at(4 + dx, 3 + dy, 0));
    }
  }
  // Column 4 only belongs to the first patch.
  CHECK(ob.left.at(4, 3, 0) != os.left.at(4, 3, 0));
}
