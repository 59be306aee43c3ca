#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "evfuse/event.hpp"

namespace evfuse {

enum class InjectionMode { single, repeated };

/// Back-in-time hallucination settings.
struct BthConfig {
  int events_per_cell = 2;       // K
  int patch = 3;                 // odd: 1, 3 or 5
  bool uniform_patch = true;     // one polarity shared by the whole patch
  bool uniform_polarity = true;  // one polarity shared by the K events
  InjectionMode mode = InjectionMode::repeated;
  int bins = 12;                 // B, repeated mode only
  /// Draw the slot uniformly from {1..B} instead of round(u * (B - 1) + 1),
  /// which gives the two end slots half the weight of the others.
  bool uniform_slots = false;
  std::uint64_t seed = 0;

  void validate() const;
};

/// A fictitious left/right event pair and where it came from.
struct InjectedPair {
  Event left;
  Event right;
  std::size_t hint = 0;  // index into valid_hints(grid)
  int slot = 0;          // 1..B in repeated mode, 0 in single mode
};

struct BthResult {
  EventHistory left;
  EventHistory right;
  std::vector<InjectedPair> injected;
  std::size_t hints_used = 0;
  std::size_t pairs_skipped = 0;  // patch cells with a side outside the image
};

/// ((2^b - 1) / 2^b) * (t+ - t-) + t-, rounded half away from zero.
/// Throws std::invalid_argument for b < 1 or t+ < t-.
Timestamp bin_timestamp(int b, Timestamp t_minus, Timestamp t_plus);

/// Inject K pairs per hint and patch cell at timestamp t_hat.
/// Throws std::invalid_argument when t_hat lies outside the conservative
/// range of the two histories.
BthResult bth_single(const EventHistory& left, const EventHistory& right,
                     const SparseDisparityGrid& grid, Timestamp t_hat, const BthConfig& cfg);
/// Same, against an explicit range (used when both histories are empty).
BthResult bth_single(const EventHistory& left, const EventHistory& right,
                     const SparseDisparityGrid& grid, Timestamp t_hat, const BthConfig& cfg,
                     TimeRange range);

/// Each hint is injected once, at bin_timestamp(D) for a random slot D.
BthResult bth_repeated(const EventHistory& left, const EventHistory& right,
                       const SparseDisparityGrid& grid, const BthConfig& cfg);
BthResult bth_repeated(const EventHistory& left, const EventHistory& right,
                       const SparseDisparityGrid& grid, const BthConfig& cfg, TimeRange range);

/// Hallucinate from depth collected at t_z <= t_d. Points are projected with
/// discard-occluded; single mode injects at clamp(t_z, t-, t+). Stale
/// geometry is used as is.
BthResult bth_with_offset(const EventHistory& left, const EventHistory& right,
                          std::span<const DepthMeasurement> measurements, Timestamp t_z,
                          Timestamp t_d, const StereoRig& rig, const BthConfig& cfg,
                          std::optional<TimeRange> range = std::nullopt);

}  // namespace evfuse
