#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace evfuse {

/// Microseconds since an arbitrary stream origin.
using Timestamp = std::uint64_t;

enum class Side : std::uint8_t { left, right };

struct Event {
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::int8_t p = 1;  // -1 or +1
  Timestamp t = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Closed time interval [begin, end] in microseconds.
struct TimeRange {
  Timestamp begin = 0;
  Timestamp end = 0;

  Timestamp span() const { return end - begin; }
  bool contains(Timestamp t) const { return t >= begin && t <= end; }
  friend bool operator==(const TimeRange&, const TimeRange&) = default;
};

/// Time-ordered slice of one camera's event stream.
///
/// Construction validates the ordering invariant (t_k <= t_{k+1}); every
/// operation in this module returns a history that satisfies it again.
class EventHistory {
 public:
  EventHistory() = default;
  explicit EventHistory(std::vector<Event> events, Side side = Side::left);

  std::span<const Event> events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }
  Side side() const { return side_; }

  /// [t_first, t_last]; empty optional for an empty history.
  std::optional<TimeRange> range() const;

  friend bool operator==(const EventHistory&, const EventHistory&) = default;

 private:
  std::vector<Event> events_;
  Side side_ = Side::left;
};

bool is_time_ordered(std::span<const Event> events);

struct StereoRig {
  double baseline_m = 0.5;
  double focal_px = 600.0;
  int width = 640;
  int height = 480;
  int d_max = 192;

  /// Throws std::invalid_argument when any field is out of range.
  void validate() const;
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
};

struct DepthMeasurement {
  int x = 0;
  int y = 0;
  double z_m = 0.0;
  Timestamp t_z = 0;

  friend bool operator==(const DepthMeasurement&, const DepthMeasurement&) = default;
};

enum class OcclusionPolicy { keep_nearest, keep_all, discard_occluded };

enum class HintState : std::uint8_t { empty, valid, occluded };

/// Disparity hints on the left image grid.
///
/// Cells are `valid` (usable hint), `occluded` (kept for inspection under
/// keep-nearest but never injected) or `empty`.
class SparseDisparityGrid {
 public:
  SparseDisparityGrid() = default;
  SparseDisparityGrid(int width, int height, Timestamp t_z = 0);

  int width() const { return width_; }
  int height() const { return height_; }
  Timestamp t_z() const { return t_z_; }

  HintState state(int x, int y) const { return state_[index(x, y)]; }
  bool valid(int x, int y) const { return state(x, y) == HintState::valid; }
  double disparity(int x, int y) const { return disparity_[index(x, y)]; }

  void set(int x, int y, double d, HintState s = HintState::valid);
  void clear(int x, int y);

  std::size_t valid_count() const;

  // Statistics filled by project_to_grid.
  std::size_t dropped_out_of_range = 0;
  std::size_t overwritten = 0;
  std::size_t occluded = 0;
  std::size_t discarded = 0;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  Timestamp t_z_ = 0;
  std::vector<double> disparity_;
  std::vector<HintState> state_;
};

/// One valid hint, as visited in row-major order.
struct Hint {
  int x = 0;
  int y = 0;
  double d = 0.0;
};

/// Valid cells of the grid in row-major order.
std::vector<Hint> valid_hints(const SparseDisparityGrid& grid);

/// Round half away from zero. The single rounding rule used for every
/// disparity-to-column conversion in the library.
long round_column(double v);

/// d = b * f / z. Throws std::domain_error for non-positive or non-finite z.
double triangulate(const StereoRig& rig, double z_m);

/// Project depth points to disparity hints on the left grid.
///
/// Points with d >= d_max are dropped. Later points landing on an already
/// filled cell overwrite it. Cells on one row that hit the same right column
/// round(x - d) are resolved by `policy`.
SparseDisparityGrid project_to_grid(const StereoRig& rig,
                                    std::span<const DepthMeasurement> measurements,
                                    OcclusionPolicy policy = OcclusionPolicy::keep_nearest);

/// The last min(n, available) events with t <= t_d.
EventHistory sample_sbn(const EventHistory& stream, Timestamp t_d, std::size_t n);

/// All events with t_d - window <= t <= t_d.
EventHistory sample_sbt(const EventHistory& stream, Timestamp t_d, Timestamp window);

/// [min first timestamp, max last timestamp] across both histories.
/// Throws std::invalid_argument when both are empty.
TimeRange conservative_range(const EventHistory& left, const EventHistory& right);

/// Stable merge: among equal timestamps existing events precede new ones and
/// new events keep their relative order.
EventHistory insert_sorted(const EventHistory& history, std::span<const Event> new_events);

}  // namespace evfuse
