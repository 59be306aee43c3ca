#include "evfuse/bth.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "evfuse/random.hpp"

namespace evfuse {

namespace {

constexpr std::uint64_t kPolarityStream = 1;
constexpr std::uint64_t kSlotStream = 2;

// Per-hint injection plan: the timestamp and the slot it came from.
struct Placement {
  Timestamp t = 0;
  int slot = 0;
};

template <typename PlaceFn>
BthResult inject(const EventHistory& left, const EventHistory& right,
                 const SparseDisparityGrid& grid, const BthConfig& cfg, PlaceFn&& place) {
  const int w = grid.width();
  const int h = grid.height();
  const int radius = cfg.patch / 2;
  const int cells = cfg.patch * cfg.patch;
  const int k = cfg.events_per_cell;
  const int cell_keys = cfg.uniform_patch ? 1 : cells;
  const int event_keys = cfg.uniform_polarity ? 1 : k;

  Rng polarity_rng = make_rng(cfg.seed, kPolarityStream);
  std::vector<std::int8_t> polarity(static_cast<std::size_t>(cell_keys * event_keys));

  BthResult out;
  std::vector<Event> new_left;
  std::vector<Event> new_right;
  const auto hints = valid_hints(grid);
  for (std::size_t i = 0; i < hints.size(); ++i) {
    const Hint& hint = hints[i];
    const Placement at = place();
    for (auto& p : polarity) p = random_polarity(polarity_rng);

    const long xr = round_column(hint.x - hint.d);
    bool used = false;
    int cell = 0;
    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx, ++cell) {
        const int y = hint.y + dy;
        const int xl = hint.x + dx;
        const long xrr = xr + dx;
        if (y < 0 || y >= h || xl < 0 || xl >= w || xrr < 0 || xrr >= w) {
          out.pairs_skipped += static_cast<std::size_t>(k);
          continue;
        }
        used = true;
        for (int e = 0; e < k; ++e) {
          const int key = (cfg.uniform_patch ? 0 : cell) * event_keys + (cfg.uniform_polarity ? 0 : e);
          const std::int8_t p = polarity[static_cast<std::size_t>(key)];
          const Event el{static_cast<std::uint16_t>(xl), static_cast<std::uint16_t>(y), p, at.t};
          const Event er{static_cast<std::uint16_t>(xrr), static_cast<std::uint16_t>(y), p, at.t};
          new_left.push_back(el);
          new_right.push_back(er);
          out.injected.push_back({el, er, i, at.slot});
        }
      }
    }
    if (used) ++out.hints_used;
  }
  out.left = insert_sorted(left, new_left);
  out.right = insert_sorted(right, new_right);
  return out;
}

void check_grid(const SparseDisparityGrid& grid) {
  if (grid.width() < 1 || grid.height() < 1) throw std::invalid_argument("BTH needs a non-empty grid");
  if (grid.width() > 65536 || grid.height() > 65536) {
    throw std::invalid_argument("BTH grid exceeds 16-bit event coordinates");
  }
}

}  // namespace

void BthConfig::validate() const {
  if (events_per_cell < 1) throw std::invalid_argument("BTH K must be >= 1");
  if (patch < 1 || patch % 2 == 0) throw std::invalid_argument("BTH patch size must be odd");
  if (bins < 1) throw std::invalid_argument("BTH bins must be >= 1");
}

Timestamp bin_timestamp(int b, Timestamp t_minus, Timestamp t_plus) {
  if (b < 1) throw std::invalid_argument("bin index must be >= 1");
  if (t_plus < t_minus) throw std::invalid_argument("bin_timestamp: t+ < t-");
  const Timestamp span = t_plus - t_minus;
  if (b >= 100) return t_plus;  // span / 2^b < 2^-36: rounds to the full span
  // span * (2^b - 1) / 2^b = span - q - f with q = span >> b and f in [0, 1);
  // rounding half away from zero subtracts one more only when f > 1/2.
  using u128 = unsigned __int128;
  const u128 whole = static_cast<u128>(span);
  const u128 q = whole >> b;
  const u128 rem = whole - (q << b);
  const u128 half = u128{1} << (b - 1);
  const u128 rounded = whole - q - (rem > half ? 1 : 0);
  return t_minus + static_cast<Timestamp>(rounded);
}

BthResult bth_single(const EventHistory& left, const EventHistory& right,
                     const SparseDisparityGrid& grid, Timestamp t_hat, const BthConfig& cfg) {
  return bth_single(left, right, grid, t_hat, cfg, conservative_range(left, right));
}

BthResult bth_single(const EventHistory& left, const EventHistory& right,
                     const SparseDisparityGrid& grid, Timestamp t_hat, const BthConfig& cfg,
                     TimeRange range) {
  cfg.validate();
  check_grid(grid);
  if (!range.contains(t_hat)) {
    throw std::invalid_argument("injection timestamp " + std::to_string(t_hat) +
                                " outside the conservative range [" + std::to_string(range.begin) +
                                ", " + std::to_string(range.end) + "]");
  }
  return inject(left, right, grid, cfg, [&] { return Placement{t_hat, 0}; });
}

BthResult bth_repeated(const EventHistory& left, const EventHistory& right,
                       const SparseDisparityGrid& grid, const BthConfig& cfg) {
  return bth_repeated(left, right, grid, cfg, conservative_range(left, right));
}

BthResult bth_repeated(const EventHistory& left, const EventHistory& right,
                       const SparseDisparityGrid& grid, const BthConfig& cfg, TimeRange range) {
  cfg.validate();
  check_grid(grid);
  if (range.end < range.begin) throw std::invalid_argument("bth_repeated: inverted range");
  std::vector<Timestamp> slot_time(static_cast<std::size_t>(cfg.bins) + 1);
  for (int b = 1; b <= cfg.bins; ++b) slot_time[b] = bin_timestamp(b, range.begin, range.end);

  Rng slot_rng = make_rng(cfg.seed, kSlotStream);
  return inject(left, right, grid, cfg, [&] {
    int slot = 1;
    if (cfg.uniform_slots) {
      slot = 1 + static_cast<int>(uniform_index(slot_rng, static_cast<std::uint64_t>(cfg.bins)));
    } else {
      slot = static_cast<int>(round_column(unit_uniform(slot_rng) * (cfg.bins - 1) + 1.0));
    }
    return Placement{slot_time[static_cast<std::size_t>(slot)], slot};
  });
}

BthResult bth_with_offset(const EventHistory& left, const EventHistory& right,
                          std::span<const DepthMeasurement> measurements, Timestamp t_z,
                          Timestamp t_d, const StereoRig& rig, const BthConfig& cfg,
                          std::optional<TimeRange> range) {
  if (t_z > t_d) throw std::invalid_argument("depth timestamp lies after the query timestamp");
  const SparseDisparityGrid grid =
      project_to_grid(rig, measurements, OcclusionPolicy::discard_occluded);
  const TimeRange r = range ? *range : conservative_range(left, right);
  if (cfg.mode == InjectionMode::single) {
    return bth_single(left, right, grid, std::clamp(t_z, r.begin, r.end), cfg, r);
  }
  return bth_repeated(left, right, grid, cfg, r);
}

}  // namespace evfuse
