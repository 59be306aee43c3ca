#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "evfuse/event.hpp"

namespace evfuse {

enum class Representation { histogram, voxel_grid, mdes, tore, time_surface, tencode, ergo };

std::string_view to_string(Representation r);
/// Accepts the names produced by to_string; throws std::invalid_argument.
Representation parse_representation(std::string_view name);
const std::vector<Representation>& all_representations();

/// One channel of an ERGO-style composite, taken from a primitive stack.
///
/// `max_with >= 0` merges two channels of the primitive by taking their
/// maximum (used to collapse the two polarities of a time surface).
struct ErgoChannel {
  Representation source = Representation::histogram;
  int channel = 0;
  int max_with = -1;
  int bins = 4;
  int levels = 3;
  int queue = 1;
  double decay_us = 10'000.0;
};

/// 2 histogram, 4 voxel bins, 2 polarity-collapsed time surfaces
/// (10 ms, 100 ms), 3 MDES levels, Tencode G.
std::vector<ErgoChannel> default_ergo_recipe();

struct StackConfig {
  int bins = 5;     // voxel grid
  int levels = 3;   // MDES
  int queue = 3;    // TORE
  std::vector<double> decay_us{10'000.0, 100'000.0};  // time surface
  double tore_clamp_us = 1'000'000.0;
  /// Unfilled TORE slots read as the clamp value ln(clamp + 1) instead of 0,
  /// so that an event exactly at t+ (value 0) stays visible.
  bool tore_empty_as_oldest = true;
  std::vector<ErgoChannel> ergo_recipe = default_ergo_recipe();

  /// Throws std::invalid_argument.
  void validate() const;
};

int channel_count(Representation r, const StackConfig& cfg);

/// Dense W x H x C tensor. Stored channel-planar (c, y, x).
class Stack {
 public:
  Stack() = default;
  Stack(Representation rep, int width, int height, int channels, TimeRange interval,
        double fill = 0.0);

  Representation representation() const { return rep_; }
  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  TimeRange interval() const { return interval_; }

  double& at(int x, int y, int c) { return data_[offset(x, y, c)]; }
  double at(int x, int y, int c) const { return data_[offset(x, y, c)]; }

  std::span<double> plane(int c) {
    return std::span<double>(data_).subspan(plane_size() * static_cast<std::size_t>(c),
                                            plane_size());
  }
  std::span<const double> plane(int c) const {
    return std::span<const double>(data_).subspan(plane_size() * static_cast<std::size_t>(c),
                                                  plane_size());
  }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const Stack& other) const {
    return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
  }

  friend bool operator==(const Stack&, const Stack&) = default;

 private:
  std::size_t plane_size() const {
    return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
  }
  std::size_t offset(int x, int y, int c) const {
    return plane_size() * static_cast<std::size_t>(c) +
           static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  Representation rep_ = Representation::histogram;
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  TimeRange interval_{};
  std::vector<double> data_;
};

// Every stacking function reads only events inside `interval` and is a pure
// function of its arguments.

Stack stack_histogram(const EventHistory& h, const StereoRig& rig, TimeRange interval);
Stack stack_voxelgrid(const EventHistory& h, const StereoRig& rig, TimeRange interval,
                      const StackConfig& cfg);
Stack stack_mdes(const EventHistory& h, const StereoRig& rig, TimeRange interval,
                 const StackConfig& cfg);
Stack stack_tore(const EventHistory& h, const StereoRig& rig, TimeRange interval,
                 const StackConfig& cfg);
Stack stack_timesurface(const EventHistory& h, const StereoRig& rig, TimeRange interval,
                        const StackConfig& cfg);
Stack stack_tencode(const EventHistory& h, const StereoRig& rig, TimeRange interval);
Stack stack_ergo(const EventHistory& h, const StereoRig& rig, TimeRange interval,
                 const StackConfig& cfg);

Stack make_stack(Representation rep, const EventHistory& h, const StereoRig& rig,
                 TimeRange interval, const StackConfig& cfg);

/// The history's own [t_first, t_last], or [0, 0] when empty.
TimeRange history_interval(const EventHistory& h);

struct RangeMode {
  enum class Kind { minmax, percentile };
  Kind kind = Kind::minmax;
  double p_lo = 5.0;
  double p_hi = 95.0;

  static RangeMode minmax() { return {}; }
  static RangeMode percentile(double lo, double hi) { return {Kind::percentile, lo, hi}; }
};

/// Percentile(5, 95) for voxel grids, min/max for everything else.
RangeMode default_range_mode(Representation rep);

struct ValueRange {
  double lo = 0.0;
  double hi = 1.0;
  bool widened = false;
};

/// Bounds of the values found across both stacks. Percentiles use the
/// nearest-rank index floor(p * N / 100) into the sorted values (clamped to
/// N - 1). A degenerate range (lo == hi) is widened to (lo, lo + 1).
ValueRange stack_range(const Stack& left, const Stack& right, const RangeMode& mode);

}  // namespace evfuse
