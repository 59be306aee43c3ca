#include "evfuse/event.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace evfuse {

namespace {

bool by_time(const Event& a, const Event& b) { return a.t < b.t; }

}  // namespace

bool is_time_ordered(std::span<const Event> events) {
  return std::is_sorted(events.begin(), events.end(), by_time);
}

EventHistory::EventHistory(std::vector<Event> events, Side side)
    : events_(std::move(events)), side_(side) {
  if (!is_time_ordered(events_)) {
    throw std::invalid_argument("event history is not time ordered");
  }
}

std::optional<TimeRange> EventHistory::range() const {
  if (events_.empty()) return std::nullopt;
  return TimeRange{events_.front().t, events_.back().t};
}

void StereoRig::validate() const {
  if (!(baseline_m > 0.0) || !std::isfinite(baseline_m)) {
    throw std::invalid_argument("rig baseline must be positive");
  }
  if (!(focal_px > 0.0) || !std::isfinite(focal_px)) {
    throw std::invalid_argument("rig focal length must be positive");
  }
  if (width < 1 || height < 1 || d_max < 1) {
    throw std::invalid_argument("rig width, height and d_max must be >= 1");
  }
  if (width > 65535 || height > 65535) {
    throw std::invalid_argument("rig dimensions exceed 16-bit event coordinates");
  }
}

SparseDisparityGrid::SparseDisparityGrid(int width, int height, Timestamp t_z)
    : width_(width), height_(height), t_z_(t_z) {
  if (width < 0 || height < 0) throw std::invalid_argument("negative grid size");
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  disparity_.assign(n, 0.0);
  state_.assign(n, HintState::empty);
}

void SparseDisparityGrid::set(int x, int y, double d, HintState s) {
  disparity_[index(x, y)] = d;
  state_[index(x, y)] = s;
}

void SparseDisparityGrid::clear(int x, int y) {
  disparity_[index(x, y)] = 0.0;
  state_[index(x, y)] = HintState::empty;
}

std::size_t SparseDisparityGrid::valid_count() const {
  return static_cast<std::size_t>(std::count(state_.begin(), state_.end(), HintState::valid));
}

std::vector<Hint> valid_hints(const SparseDisparityGrid& grid) {
  std::vector<Hint> hints;
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      if (grid.valid(x, y)) hints.push_back({x, y, grid.disparity(x, y)});
    }
  }
  return hints;
}

long round_column(double v) { return std::lround(v); }

double triangulate(const StereoRig& rig, double z_m) {
  if (!(z_m > 0.0) || !std::isfinite(z_m)) {
    throw std::domain_error("depth must be positive and finite, got " + std::to_string(z_m));
  }
  return rig.baseline_m * rig.focal_px / z_m;
}

SparseDisparityGrid project_to_grid(const StereoRig& rig,
                                    std::span<const DepthMeasurement> measurements,
                                    OcclusionPolicy policy) {
  rig.validate();
  Timestamp t_z = 0;
  for (const auto& m : measurements) t_z = std::max(t_z, m.t_z);

  SparseDisparityGrid grid(rig.width, rig.height, t_z);
  for (const auto& m : measurements) {
    if (!rig.contains(m.x, m.y) || !(m.z_m > 0.0) || !std::isfinite(m.z_m)) {
      ++grid.dropped_out_of_range;
      continue;
    }
    const double d = triangulate(rig, m.z_m);
    if (d < 0.0 || d >= static_cast<double>(rig.d_max)) {
      ++grid.dropped_out_of_range;
      continue;
    }
    if (grid.valid(m.x, m.y)) ++grid.overwritten;
    grid.set(m.x, m.y, d);
  }

  if (policy == OcclusionPolicy::keep_all) return grid;

  for (int y = 0; y < grid.height(); ++y) {
    // right column -> left column of the nearest hint seen so far
    std::map<long, int> nearest;
    for (int x = 0; x < grid.width(); ++x) {
      if (!grid.valid(x, y)) continue;
      const long column = round_column(x - grid.disparity(x, y));
      auto [it, inserted] = nearest.try_emplace(column, x);
      if (inserted) continue;
      int loser = x;
      if (grid.disparity(x, y) > grid.disparity(it->second, y)) {
        loser = it->second;
        it->second = x;
      }
      ++grid.occluded;
      if (policy == OcclusionPolicy::keep_nearest) {
        grid.set(loser, y, grid.disparity(loser, y), HintState::occluded);
      } else {
        ++grid.discarded;
        grid.clear(loser, y);
      }
    }
  }
  return grid;
}

EventHistory sample_sbn(const EventHistory& stream, Timestamp t_d, std::size_t n) {
  const auto events = stream.events();
  const auto end = std::upper_bound(events.begin(), events.end(), t_d,
                                    [](Timestamp t, const Event& e) { return t < e.t; });
  const auto available = static_cast<std::size_t>(end - events.begin());
  const auto begin = end - static_cast<std::ptrdiff_t>(std::min(n, available));
  return EventHistory(std::vector<Event>(begin, end), stream.side());
}

EventHistory sample_sbt(const EventHistory& stream, Timestamp t_d, Timestamp window) {
  const Timestamp lower = t_d >= window ? t_d - window : 0;
  const auto events = stream.events();
  const auto begin = std::lower_bound(events.begin(), events.end(), lower,
                                      [](const Event& e, Timestamp t) { return e.t < t; });
  const auto end = std::upper_bound(begin, events.end(), t_d,
                                    [](Timestamp t, const Event& e) { return t < e.t; });
  return EventHistory(std::vector<Event>(begin, end), stream.side());
}

TimeRange conservative_range(const EventHistory& left, const EventHistory& right) {
  const auto l = left.range();
  const auto r = right.range();
  if (!l && !r) throw std::invalid_argument("conservative range of two empty histories");
  if (!l) return *r;
  if (!r) return *l;
  return {std::min(l->begin, r->begin), std::max(l->end, r->end)};
}

EventHistory insert_sorted(const EventHistory& history, std::span<const Event> new_events) {
  if (new_events.empty()) return history;
  std::vector<Event> fresh(new_events.begin(), new_events.end());
  std::stable_sort(fresh.begin(), fresh.end(), by_time);

  std::vector<Event> merged;
  merged.reserve(history.size() + fresh.size());
  // std::merge takes from the first range on ties.
  std::merge(history.events().begin(), history.events().end(), fresh.begin(), fresh.end(),
             std::back_inserter(merged), by_time);
  return EventHistory(std::move(merged), history.side());
}

}  // namespace evfuse
