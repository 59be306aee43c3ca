#include <doctest.h>

#include <random>

#include "../oracles.hpp"
#include "evfuse/stereo.hpp"

using namespace evfuse;

namespace {

Stack random_stack(std::mt19937_64& rng, int w, int h, int c) {
  Stack s(Representation::voxel_grid, w, h, c, {});
  std::uniform_real_distribution<double> v(-1.0, 1.0);
  for (auto& x : s.values()) x = v(rng);
  return s;
}

}  // namespace

TEST_CASE("cost volume matches the brute-force window sum") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const int w = 13 + trial;
    const int h = 7 + trial % 3;
    const int c = 1 + trial % 3;
    const auto l = random_stack(rng, w, h, c);
    const auto r = random_stack(rng, w, h, c);
    const int window = 1 + 2 * (trial % 4);
    const int disparities = 1 + trial % 9;
    const auto v = build_cost_volume(l, r, window, disparities);
    REQUIRE(v.disparities() == disparities);
    for (int d = 0; d < disparities; ++d) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) CHECK(v.at(x, y, d) == doctest::Approx(oracle::sad_cost(l, r, window, x, y, d)).epsilon(1e-5));
      }
    }
    CHECK(wta(v) == oracle::argmin(v));
  }
}

TEST_CASE("a shifted copy is recovered away from the border") {
  std::mt19937_64 rng(12);
  const int d0 = 6;
  const auto r = random_stack(rng, 48, 16, 2);
  Stack l(r.representation(), 48, 16, 2, {});
  for (int c = 0; c < 2; ++c) {
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 48; ++x) l.at(x, y, c) = r.at(std::max(0, x - d0), y, c);
    }
  }
  for (auto metric : {CostMetric::sad, CostMetric::census}) {
    const auto disp = wta(build_cost_volume(l, r, 5, 16, metric));
    for (int y = 2; y < 14; ++y) {
      for (int x = d0 + 10; x < 46; ++x) CHECK(disp.at(x, y) == d0);
    }
  }
  const auto same = build_cost_volume(r, r, 3, 4);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 48; ++x) CHECK(same.at(x, y, 0) == 0.0F);
  }
  CHECK_THROWS(build_cost_volume(l, r, 4, 8));
  CHECK_THROWS(build_cost_volume(l, random_stack(rng, 47, 16, 2), 3, 8));
}

TEST_CASE("WTA ties go to the smaller disparity") {
  CostVolume v(2, 1, 4, 1.0F);
  v.at(0, 0, 2) = 0.5F;
  v.at(0, 0, 3) = 0.5F;
  const auto d = wta(v);
  CHECK(d.at(0, 0) == 2.0);
  CHECK(d.at(1, 0) == 0.0);
}

TEST_CASE("guided modulation") {
  std::mt19937_64 rng(13);
  CostVolume v(10, 6, 8);
  std::uniform_real_distribution<float> cost(0.1F, 1.0F);
  for (int d = 0; d < 8; ++d) {
    for (int y = 0; y < 6; ++y) {
      for (int x = 0; x < 10; ++x) v.at(x, y, d) = cost(rng);
    }
  }
  SparseDisparityGrid g(10, 6);
  g.set(4, 2, 3.0);
  g.set(7, 5, 5.5);

  CHECK(guided_modulate(v, g, 0.0, 1.0) == v);

  const auto m = guided_modulate(v, g, 0.8, 1.0);
  CHECK(m.at(4, 2, 3) == doctest::Approx(v.at(4, 2, 3) * 0.2F));
  CHECK(m.at(4, 2, 5) == doctest::Approx(v.at(4, 2, 5) * (1.0 - 0.8 * std::exp(-2.0))));
  for (int d = 0; d < 8; ++d) {
    for (int y = 0; y < 6; ++y) {
      for (int x = 0; x < 10; ++x) {
        if (g.valid(x, y)) {
          CHECK(m.at(x, y, d) <= v.at(x, y, d));
        } else {
          CHECK(m.at(x, y, d) == v.at(x, y, d));
        }
      }
    }
  }

  // The winner never moves further from the hint.
  for (int trial = 0; trial < 500; ++trial) {
    CostVolume one(1, 1, 12);
    for (int d = 0; d < 12; ++d) one.at(0, 0, d) = cost(rng);
    SparseDisparityGrid hint(1, 1);
    const double hd = std::uniform_real_distribution<double>(0.0, 11.0)(rng);
    hint.set(0, 0, hd);
    const double lambda = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const double before = wta(one).at(0, 0);
    const double after = wta(guided_modulate(one, hint, lambda, 1.0)).at(0, 0);
    CHECK(std::abs(after - hd) <= std::abs(before - hd) + 1e-12);
  }
  CHECK_THROWS(guided_modulate(v, g, 1.5, 1.0));
  CHECK_THROWS(guided_modulate(v, SparseDisparityGrid(3, 3), 0.5, 1.0));
}

TEST_CASE("evaluate") {
  DisparityMap gt(2, 2);
  DisparityMap pred(2, 2);
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 2; ++x) {
      gt.set(x, y, 10.0);
      pred.set(x, y, 10.0);
    }
  }
  pred.set(1, 1, 11.5);
  const auto r = evaluate(pred, gt, gt_mask(gt));
  CHECK(r.one_pe == 25.0);
  CHECK(r.two_pe == 0.0);
  CHECK(r.mae == doctest::Approx(0.375));
  CHECK(r.pixels == 4);

  CHECK_THROWS_AS(evaluate(pred, gt, PixelMask(2, 2, false)), std::invalid_argument);
  DisparityMap partial = gt;
  partial.invalidate(0, 0);
  CHECK_THROWS_AS(evaluate(pred, partial, PixelMask(2, 2, true)), std::invalid_argument);

  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> v(0.0, 20.0);
  for (int trial = 0; trial < 50; ++trial) {
    DisparityMap a(9, 7);
    DisparityMap b(9, 7);
    PixelMask mask(9, 7);
    for (int y = 0; y < 7; ++y) {
      for (int x = 0; x < 9; ++x) {
        a.set(x, y, std::floor(v(rng)));
        b.set(x, y, v(rng));
        mask.set(x, y, (x + y + trial) % 3 != 0);
      }
    }
    const auto got = evaluate(a, b, mask);
    const auto ref = oracle::metrics(a, b, mask);
    CHECK(got.one_pe == doctest::Approx(ref.one_pe));
    CHECK(got.two_pe == doctest::Approx(ref.two_pe));
    CHECK(got.mae == doctest::Approx(ref.mae));
    CHECK(got.two_pe <= got.one_pe);
  }
}

TEST_CASE("metrics pool by pixel count") {
  MetricsAccumulator a;
  a.add(0.0);
  a.add(3.0);
  MetricsAccumulator b;
  b.add(1.5);
  a.merge(b);
  const auto r = a.report("pooled");
  CHECK(r.pixels == 3);
  CHECK(r.one_pe == doctest::Approx(200.0 / 3.0));
  CHECK(r.two_pe == doctest::Approx(100.0 / 3.0));
  CHECK(r.mae == doctest::Approx(1.5));
  CHECK(r.label == "pooled");
  CHECK(MetricsAccumulator{}.report("none").pixels == 0);
}
