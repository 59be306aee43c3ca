#include <doctest.h>

#include <random>

#include "../oracles.hpp"
#include "evfuse/event.hpp"

using namespace evfuse;

namespace {

EventHistory make(std::initializer_list<Event> events, Side side = Side::left) {
  return EventHistory(std::vector<Event>(events), side);
}

}  // namespace

TEST_CASE("history rejects out-of-order timestamps") {
  CHECK_THROWS_AS(make({{0, 0, 1, 5}, {0, 0, 1, 4}}), std::invalid_argument);
  CHECK_NOTHROW(make({{0, 0, 1, 5}, {0, 0, 1, 5}, {0, 0, 1, 5}}));  // duplicates allowed
  CHECK_FALSE(make({}).range().has_value());
  CHECK(make({{0, 0, 1, 3}, {1, 1, -1, 9}}).range() == TimeRange{3, 9});
}

TEST_CASE("triangulate") {
  StereoRig rig;
  CHECK(triangulate(rig, 6.0) == doctest::Approx(50.0));
  StereoRig narrow;
  narrow.baseline_m = 0.12;
  narrow.focal_px = 1000.0;
  CHECK(triangulate(narrow, 120.0) == doctest::Approx(1.0));
  CHECK_THROWS_AS(triangulate(rig, 0.0), std::domain_error);
  CHECK_THROWS_AS(triangulate(rig, -1.0), std::domain_error);
  CHECK_THROWS_AS(triangulate(rig, std::nan("")), std::domain_error);

  SUBCASE("monotone in z, b and f") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> z(0.1, 100.0);
    for (int i = 0; i < 200; ++i) {
      const double a = z(rng);
      const double b = a * 1.01;
      CHECK(triangulate(rig, a) > triangulate(rig, b));
      StereoRig wider = rig;
      wider.baseline_m *= 1.5;
      StereoRig longer = rig;
      longer.focal_px *= 1.5;
      CHECK(triangulate(wider, a) > triangulate(rig, a));
      CHECK(triangulate(longer, a) > triangulate(rig, a));
    }
  }
}

TEST_CASE("rig validation") {
  StereoRig rig;
  CHECK_NOTHROW(rig.validate());
  rig.baseline_m = 0.0;
  CHECK_THROWS(rig.validate());
  rig = {};
  rig.d_max = 0;
  CHECK_THROWS(rig.validate());
  rig = {};
  rig.width = 0;
  CHECK_THROWS(rig.validate());
}

TEST_CASE("round_column rounds half away from zero") {
  CHECK(round_column(2.5) == 3);
  CHECK(round_column(-2.5) == -3);
  CHECK(round_column(2.4999) == 2);
  CHECK(round_column(-0.5) == -1);
}

TEST_CASE("project_to_grid") {
  StereoRig rig;
  rig.width = 64;
  rig.height = 8;
  rig.d_max = 32;
  const double bf = rig.baseline_m * rig.focal_px;

  SUBCASE("empty input") {
    const auto g = project_to_grid(rig, std::vector<DepthMeasurement>{});
    CHECK(g.valid_count() == 0);
  }

  SUBCASE("keep-nearest on a collision keeps the larger disparity") {
    // x' = 30 - 10 = 20 and 24 - 4 = 20.
    const std::vector<DepthMeasurement> pts{{30, 2, bf / 10.0, 0}, {24, 2, bf / 4.0, 0}};
    const auto g = project_to_grid(rig, pts, OcclusionPolicy::keep_nearest);
    CHECK(g.valid_count() == 1);
    CHECK(g.valid(30, 2));
    CHECK(g.disparity(30, 2) == doctest::Approx(10.0));
    CHECK(g.state(24, 2) == HintState::occluded);
    CHECK(g.occluded == 1);

    const auto all = project_to_grid(rig, pts, OcclusionPolicy::keep_all);
    CHECK(all.valid_count() == 2);
    const auto discard = project_to_grid(rig, pts, OcclusionPolicy::discard_occluded);
    CHECK(discard.valid_count() == 1);
    CHECK(discard.state(24, 2) == HintState::empty);
    CHECK(discard.discarded == 1);
  }

  SUBCASE("out of range disparities are dropped and counted") {
    const std::vector<DepthMeasurement> pts{{10, 1, bf / 32.0, 0}, {10, 2, bf / 31.5, 0}};
    const auto g = project_to_grid(rig, pts);
    CHECK(g.dropped_out_of_range == 1);
    CHECK(g.valid(10, 2));
  }

  SUBCASE("keep-all matches a brute-force re-projection") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> xs(0, rig.width - 1);
    std::uniform_int_distribution<int> ys(0, rig.height - 1);
    std::uniform_real_distribution<double> zs(bf / 40.0, bf / 0.5);
    std::vector<DepthMeasurement> pts(1000);
    for (auto& m : pts) m = {xs(rng), ys(rng), zs(rng), 0};
    const auto g = project_to_grid(rig, pts, OcclusionPolicy::keep_all);
    const auto ref = oracle::project_keep_all(rig, pts);
    CHECK(g.valid_count() == ref.size());
    for (const auto& [cell, d] : ref) {
      REQUIRE(g.valid(cell.first, cell.second));
      CHECK(g.disparity(cell.first, cell.second) == d);
    }
  }

  SUBCASE("keep-nearest is idempotent and leaves no right-column collision") {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> xs(0, rig.width - 1);
    std::uniform_int_distribution<int> ys(0, rig.height - 1);
    std::uniform_real_distribution<double> zs(bf / 30.0, bf / 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<DepthMeasurement> pts(200);
      for (auto& m : pts) m = {xs(rng), ys(rng), zs(rng), 0};
      const auto g = project_to_grid(rig, pts, OcclusionPolicy::keep_nearest);
      std::vector<DepthMeasurement> kept;
      std::map<std::pair<long, int>, int> targets;
      for (const Hint& h : valid_hints(g)) {
        kept.push_back({h.x, h.y, bf / h.d, 0});
        ++targets[{oracle::column(h.x - h.d), h.y}];
      }
      for (const auto& [key, n] : targets) CHECK(n == 1);
      const auto again = project_to_grid(rig, kept, OcclusionPolicy::keep_nearest);
      CHECK(again.valid_count() == g.valid_count());
      for (const Hint& h : valid_hints(g)) {
        CHECK(again.valid(h.x, h.y));
        CHECK(again.disparity(h.x, h.y) == doctest::Approx(h.d));
      }
    }
  }
}

TEST_CASE("sampling") {
  std::mt19937_64 rng(5);
  const EventHistory empty;
  CHECK(sample_sbn(empty, 100, 10).empty());
  CHECK(sample_sbt(empty, 100, 10).empty());

  for (int trial = 0; trial < 50; ++trial) {
    const EventHistory s = oracle::random_history(rng, 16, 16, 500, 0, 1000);
    std::uniform_int_distribution<Timestamp> td(0, 1100);
    const Timestamp t_d = td(rng);
    CHECK(sample_sbn(s, t_d, 100) == oracle::sbn(s, t_d, 100));
    CHECK(sample_sbn(s, t_d, 100000) == oracle::sbn(s, t_d, 100000));
    CHECK(sample_sbt(s, t_d, 0) == oracle::sbt(s, t_d, 0));
    CHECK(sample_sbt(s, t_d, 250) == oracle::sbt(s, t_d, 250));
    CHECK(sample_sbt(s, 1000, 1000) == s);

    // SBN(n) is a suffix of SBN(n + 1).
    const auto a = sample_sbn(s, t_d, 40);
    const auto b = sample_sbn(s, t_d, 41);
    REQUIRE(b.size() >= a.size());
    CHECK(std::equal(a.events().begin(), a.events().end(), b.events().end() - static_cast<std::ptrdiff_t>(a.size())));
  }
}

TEST_CASE("conservative range") {
  const auto l = make({{0, 0, 1, 10}, {0, 0, 1, 90}});
  const auto r = make({{0, 0, 1, 5}, {0, 0, 1, 80}}, Side::right);
  CHECK(conservative_range(l, r) == TimeRange{5, 90});
  CHECK(conservative_range(l, l) == TimeRange{10, 90});
  CHECK(conservative_range(l, EventHistory{}) == TimeRange{10, 90});
  CHECK_THROWS_AS(conservative_range(EventHistory{}, EventHistory{}), std::invalid_argument);

  std::mt19937_64 rng(9);
  for (int i = 0; i < 100; ++i) {
    const auto a = oracle::random_history(rng, 4, 4, 30, 0, 500);
    const auto b = oracle::random_history(rng, 4, 4, 30, 0, 500);
    if (a.empty() && b.empty()) continue;
    Timestamp lo = ~Timestamp{0};
    Timestamp hi = 0;
    for (const auto* h : {&a, &b}) {
      for (const Event& e : h->events()) {
        lo = std::min(lo, e.t);
        hi = std::max(hi, e.t);
      }
    }
    CHECK(conservative_range(a, b) == TimeRange{lo, hi});
  }
}

TEST_CASE("insert_sorted") {
  const auto h = make({{0, 0, 1, 5}, {1, 0, 1, 7}});
  CHECK(insert_sorted(h, {}) == h);
  const std::vector<Event> added{{2, 2, 1, 9}, {3, 3, -1, 1}};
  const auto into_empty = insert_sorted(EventHistory{}, added);
  REQUIRE(into_empty.size() == 2);
  CHECK(into_empty.events()[0].t == 1);

  SUBCASE("real events precede injected ones at equal timestamps") {
    const auto out = insert_sorted(h, std::vector<Event>{{9, 9, -1, 5}});
    REQUIRE(out.size() == 3);
    CHECK(out.events()[0] == Event{0, 0, 1, 5});
    CHECK(out.events()[1] == Event{9, 9, -1, 5});
  }

  SUBCASE("matches a full stable re-sort") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
      const auto base = oracle::random_history(rng, 8, 8, 300, 0, 200);
      std::vector<Event> fresh(1000);
      std::uniform_int_distribution<Timestamp> ts(0, 200);
      for (std::size_t i = 0; i < fresh.size(); ++i) {
        fresh[i] = {static_cast<std::uint16_t>(i % 8), static_cast<std::uint16_t>((i / 8) % 8), 1, ts(rng)};
      }
      const auto out = insert_sorted(base, fresh);
      CHECK(is_time_ordered(out.events()));
      CHECK(out == oracle::insert_sorted(base, fresh));
    }
  }
}
