#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "evfuse/event.hpp"
#include "evfuse/stacking.hpp"

namespace evfuse {

/// Virtual stack hallucination settings.
struct VshConfig {
  int patch = 3;              // odd: 1, 3 or 5
  bool uniform_patch = true;  // one value per patch instead of per cell
  double alpha = 0.5;         // blend weight of the virtual pattern
  /// Unset: percentile(5, 95) for voxel grids, min/max otherwise.
  std::optional<RangeMode> range;
  /// One draw shared by all channels instead of one per channel.
  bool share_channels = false;
  std::uint64_t seed = 0;

  void validate() const;
};

struct VshResult {
  Stack left;
  Stack right;
  ValueRange range;
  std::size_t hints_used = 0;
  std::size_t hints_skipped = 0;  // right column outside the image
  std::size_t cells_written = 0;  // per side, counting every channel once
};

/// Write the same random pattern into the left stack at (x, y) and the right
/// stack at (round(x - d), y) for every valid hint.
///
/// Hints are visited in row-major order and later patches overwrite earlier
/// ones. Patch cells are clipped so that both the left and the right target
/// lie inside the image.
VshResult vsh_inject(const Stack& left, const Stack& right, const SparseDisparityGrid& grid,
                     const VshConfig& cfg);

}  // namespace evfuse
